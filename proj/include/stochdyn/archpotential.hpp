#pragma once

// Archimedean potential theory of a stochastic system: the Green's function
// g_S by renormalized homogeneous iteration averaged over words, the
// potential p_rho = g_S + log+|z|, sampling of the canonical measure by
// expected pullback of the unit circle, epsilon-regularized energies, the
// inner/outer radii, and equidistribution statistics for backward orbits.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochdyn/ifs.hpp"
#include "stochdyn/orbits.hpp"
#include "stochdyn/stochheight.hpp"

namespace stochdyn {

struct GreenConfig {
  int depth = 0;            // 0: smallest depth whose tail bound fits tol
  std::size_t samples = 0;  // 0: enumerate words when the cap allows, else size a sample from a pilot run
  double tol = 1e-4;
  int precision = 15;  // significant digits requested; double arithmetic supports up to 15
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::size_t word_cap = std::size_t{1} << 22;
  std::size_t max_samples = 4'000'000;
  int max_depth = 200;
};

struct GreenValue {
  double value = 0.0;
  double stderr_ = 0.0;
  double tail_bound = 0.0;  // truncation bound of the value at this depth
  int depth = 0;
  EstimateMode mode = EstimateMode::Exact;
  std::size_t samples = 0;
};

/// sum_phi nu(phi) [(1/d) log max(|F(z,1)|, |G(z,1)|) - log+|z|].
double g1_eval(const StochasticSystem& s, const LogPolar& z);
double g1_eval(const StochasticSystem& s, ComplexVal z);

/// Depth at which the two-sided truncation error 2 * tail fits tol / 2.
int green_depth(const StochasticSystem& s, double tol, int max_depth = 200);

/// Depth at which the one-sided tail of the escape series fits tol.
int escape_depth(const StochasticSystem& s, double tol, int max_depth = 200);

/// g_S(z), normalized so that g_S(infinity) = 0.
GreenValue gS_eval(const StochasticSystem& s, const LogPolar& z, const GreenConfig& cfg = {});
GreenValue gS_eval(const StochasticSystem& s, ComplexVal z, const GreenConfig& cfg = {});
/// Evaluates g_S at many points sharing one word enumeration or sample.
std::vector<GreenValue> gS_eval_many(const StochasticSystem& s, const std::vector<LogPolar>& zs,
                                     const GreenConfig& cfg = {});
/// Homogeneous escape rate G(z, 1) = lim E log||Phi_gamma(z, 1)|| / deg(gamma), with
/// infinity lifted to (1, 0); unlike g_S it is not normalized at infinity.
std::vector<GreenValue> escape_eval_many(const StochasticSystem& s, const std::vector<LogPolar>& zs,
                                         const GreenConfig& cfg = {});
/// p_rho(z) = g_S(z) + log+|z|.
GreenValue potential_eval(const StochasticSystem& s, const LogPolar& z, const GreenConfig& cfg = {});
GreenValue potential_eval(const StochasticSystem& s, ComplexVal z, const GreenConfig& cfg = {});

/// Uniform start on the unit circle, then n backward steps.
OrbitSampleBatch canonical_sample(const StochasticSystem& s, int n, std::size_t samples, std::uint64_t seed,
                                  unsigned workers = 0);

class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(std::vector<double> values);
  std::size_t size() const { return v_.size(); }
  const std::vector<double>& values() const { return v_; }
  /// Fraction of values <= x.
  double operator()(double x) const;

 private:
  std::vector<double> v_;
};

/// sup |F_n - F| for a reference CDF given with its left limits.
double ks_distance(const EmpiricalCDF& e, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left);
/// Continuous reference: left limits coincide.
double ks_distance(const EmpiricalCDF& e, const std::function<double(double)>& cdf);
double ks_two_sample(const EmpiricalCDF& a, const EmpiricalCDF& b);
/// Fraction of values farther than window from a point-mass reference.
double point_mass_distance(const EmpiricalCDF& e, double at, double window);

/// log|z| of each sample; 0 and infinity give -inf and +inf.
std::vector<double> log_radii(const OrbitSampleBatch& b);
/// Angles rescaled to [0, 1).
std::vector<double> unit_angles(const OrbitSampleBatch& b);

/// Two-sample KS between radial laws of canonical samples at depths n and n + 1.
double pullback_invariance_residual(const StochasticSystem& s, int n, std::size_t samples, std::uint64_t seed,
                                    unsigned workers = 0);

struct NumericMeasure {
  std::vector<ComplexVal> points;
  std::vector<double> weights;
};

struct RegularizedEnergy {
  double total = 0.0;
  double self_part = 0.0;    // sum t_i^2 (-log eps)
  double mutual_part = 0.0;  // sum_{i != j} t_i t_j E_ij
};

/// -(1/2pi) int log max(|d - eps e^{is}|, eps) ds by adaptive quadrature.
double circle_mutual_energy(ComplexVal d, double eps, double tol = 1e-12);
RegularizedEnergy regularize(const NumericMeasure& m, double eps);

/// Closed-form radial law when every map is monomial: the stationary law of
/// the log-modulus IFS v -> (v - log|a|)/d (or (log|a| - v)/d for a/z^d).
std::optional<StationaryLaw> monomial_radial_law(const StochasticSystem& s);

struct RadiiOptions {
  GreenConfig green{0, 0, 1e-3};
  int shells = 64;
  int angles = 64;
  double log_r_min = -4.0;
  double log_r_max = 4.0;
  std::size_t energy_samples = 4000;
  int energy_depth = 30;
};

struct Radii {
  double r_in = 1.0;
  double r_out = 1.0;
  double self_energy = 0.0;  // estimate of (rho, rho)
  double self_energy_stderr = 0.0;
  double g_min = 0.0;  // inf of g_S over the probes
  double g_max = 0.0;  // sup of g_S over the probes
};
Radii radii(const StochasticSystem& s, const RadiiOptions& opts = {});

struct ArchEquidist {
  double ks_radial = 0.0;
  double ks_angular = 0.0;
  double potential_residual = 0.0;
  bool closed_form_reference = false;
  bool point_mass_reference = false;
  OrbitSampleBatch batch;
  /// Radial reference in the log-modulus coordinate.
  std::function<double(double)> reference_cdf;
};

struct ArchEquidistOptions {
  unsigned workers = 0;
  GreenConfig green{0, 0, 1e-3};
  std::vector<ComplexVal> probes{0.0, {3.0, 0.0}, {-3.0, 0.0}, {0.0, 3.0}, {10.0, 0.0}, {0.25, 0.1}};
};

ArchEquidist equidist_test_arch(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                std::uint64_t seed, const ArchEquidistOptions& opts = {});

/// Columns r,empirical_cdf,reference_cdf on `rows` radii spanning the sample.
std::string radial_cdf_csv(const ArchEquidist& result, int rows = 200);

}  // namespace stochdyn
