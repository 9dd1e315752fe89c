#pragma once

// The non-archimedean side for systems whose maps act affinely on p-adic
// valuations: classification of a prime, exact backward valuation walks,
// the stationary law on the segment [zeta_{0,p^-v_hi}, zeta_{0,p^-v_lo}] in
// the coordinate v = v_p(z), and p-adic equidistribution statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochdyn/dynsys.hpp"
#include "stochdyn/ifs.hpp"

namespace stochdyn {

/// A map a*z^(sign*d) seen through v = v_p(z): forward v -> sign*d*v + shift.
struct ValAffine {
  int d = 2;
  long shift = 0;  // v_p(a)
  int sign = 1;    // -1 for a / z^d
  friend bool operator==(const ValAffine&, const ValAffine&) = default;
};

enum class PlaceKind { GoodReduction, MonomialLike, Unsupported };
std::string_view to_string(PlaceKind k);

struct PlaceClass {
  PlaceKind kind = PlaceKind::Unsupported;
  std::vector<ValAffine> maps;  // filled whenever every map is monomial
};

PlaceClass classify_place(const StochasticSystem& s, const BigInt& p);

BigRat val_forward_step(const ValAffine& m, const BigRat& v);
/// Valuation of any preimage; every branch of the d-th root has the same one.
BigRat val_backward_step(const ValAffine& m, const BigRat& v, int branch = 0);

/// Stationary law of the backward valuation walk.
struct SegmentMeasure {
  StationaryLaw law;
  double v_lo() const { return law.lo(); }
  double v_hi() const { return law.hi(); }
  bool is_point_mass() const { return law.is_point_mass(); }
  double cdf(double v) const { return law.cdf(v); }
};

/// Good reduction gives the Gauss point (mass at v = 0); monomial-like
/// systems with a common degree and exponent sign are solved as an IFS.
SegmentMeasure stationary_segment(const StochasticSystem& s, const BigInt& p);

/// v_p of a point of P^1: a rational, or +infinity at 0, or -infinity at infinity.
struct ExtValuation {
  int infinite = 0;  // +1 at z = 0, -1 at z = infinity
  BigRat v;
  static ExtValuation of(const ProjPoint& z, const BigInt& p);
};

struct PadicEscape {
  double value = 0.0;       // G_p(z, 1)
  BigRat log_p_multiple;    // value / log p, truncated series
  double tail_bound = 0.0;
  int depth = 0;
};

/// Homogeneous escape rate at p for a point given by its valuation. Every
/// map must be monomial at p (the walk then only sees valuations); with good
/// reduction throughout the answer is log+|z|_p. Words are enumerated
/// exactly until the tail bound fits tol.
PadicEscape padic_escape(const StochasticSystem& s, const BigInt& p, const ExtValuation& z, double tol = 1e-6,
                         std::size_t word_cap = std::size_t{1} << 22);

struct PadicEquidist {
  double ks = 0.0;
  PlaceKind kind = PlaceKind::Unsupported;
  bool point_mass_reference = false;
  std::vector<double> valuations;  // v_n of each sampled path, exact values rounded once
  SegmentMeasure reference;
  int depth = 0;
};

/// Backward valuation paths from v_p(alpha). A point-mass reference is
/// compared through the fraction of samples farther than 1/n from it.
PadicEquidist equidist_test_padic(const StochasticSystem& s, const BigInt& p, const ProjPoint& alpha, int n,
                                  std::size_t samples, std::uint64_t seed, unsigned workers = 0);

/// Columns v,empirical_cdf,reference_cdf.
std::string valuation_cdf_csv(const PadicEquidist& r, int rows = 200);

}  // namespace stochdyn
