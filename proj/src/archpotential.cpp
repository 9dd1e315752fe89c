#include "stochdyn/archpotential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include "stochdyn/parallel.hpp"

namespace stochdyn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Homogeneous coordinates with max(|x|, |y|) = 1.
struct HomPoint {
  ComplexVal x, y;
};

HomPoint lift(const LogPolar& z) {
  if (z.is_infinity()) return {1.0, 0.0};
  if (z.is_zero()) return {0.0, 1.0};
  if (z.log_abs <= 0.0) return {std::polar(std::exp(z.log_abs), z.arg), 1.0};
  return {1.0, std::polar(std::exp(-z.log_abs), -z.arg)};
}

double log_plus(const LogPolar& z) { return std::max(0.0, z.log_abs); }

/// Double copy of a map's forms, scaled by 2^-shift so huge coefficients fit.
struct NumMap {
  std::vector<double> f, g;
  int d = 0;
  double log_scale = 0.0;  // shift * log 2, added back to every log m

  explicit NumMap(const RationalMap& phi) : d(phi.degree()) {
    long top = 0;
    for (const auto* h : {&phi.F(), &phi.G()})
      for (const auto& c : h->coeffs) top = std::max(top, bit_length(c));
    long shift = std::max(0L, top - 900);
    log_scale = static_cast<double>(shift) * std::numbers::ln2;
    for (const auto& c : phi.F().coeffs) f.push_back(to_double_scaled(c, shift));
    for (const auto& c : phi.G().coeffs) g.push_back(to_double_scaled(c, shift));
  }

  // sum c_i x^i y^(d-i), by Horner in whichever ratio has modulus <= 1.
  ComplexVal eval(const std::vector<double>& c, const HomPoint& p) const {
    ComplexVal acc = 0.0;
    if (std::abs(p.y) >= std::abs(p.x)) {
      ComplexVal t = p.x / p.y;
      for (int i = d; i >= 0; --i) acc = acc * t + c[static_cast<std::size_t>(i)];
      return acc * std::pow(p.y, d);
    }
    ComplexVal t = p.y / p.x;
    for (int i = 0; i <= d; ++i) acc = acc * t + c[static_cast<std::size_t>(i)];
    return acc * std::pow(p.x, d);
  }

  /// Applies the map, renormalizes, and returns log of the pre-normalization max-norm.
  double step(HomPoint& p) const {
    ComplexVal fx = eval(f, p), gx = eval(g, p);
    double m = std::max(std::abs(fx), std::abs(gx));
    if (!(m > 0.0) || !std::isfinite(m))
      throw Error(ErrorCode::ConvergenceFailure, "renormalized iteration lost the point (norm " + std::to_string(m) + ")");
    p = {fx / m, gx / m};
    return std::log(m) + log_scale;
  }
};

std::vector<NumMap> num_maps(const StochasticSystem& s) {
  std::vector<NumMap> out;
  for (const auto& phi : s.maps()) out.emplace_back(phi);
  return out;
}

std::vector<double> prob_doubles(const StochasticSystem& s) {
  std::vector<double> p;
  for (const auto& q : s.probs()) p.push_back(to_double(q));
  return p;
}

double arch_l1(const StochasticSystem& s) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < s.size(); ++i)
    acc.add(to_double(s.prob(i)) * cphi_bound(s.map(i), Place::arch(), i).certified_upper);
  return acc.value();
}

std::size_t word_count(std::size_t size, int n, std::size_t cap) {
  std::size_t c = 1;
  for (int k = 0; k < n; ++k) {
    if (c > cap / size) return cap + 1;
    c *= size;
  }
  return c;
}

/// Prefix-sharing enumeration: acc[j] += sum over prefixes of nu(prefix) log m / deg(prefix).
struct EscapeTree {
  const std::vector<NumMap>& maps;
  const std::vector<double>& probs;
  int n;
  std::vector<std::vector<HomPoint>> buf;

  void walk(int k, double weight, double deg, std::vector<double>& acc) {
    for (std::size_t i = 0; i < maps.size(); ++i) {
      auto& next = buf[static_cast<std::size_t>(k) + 1];
      next = buf[static_cast<std::size_t>(k)];
      const double w = weight * probs[i];
      const double dd = deg * maps[i].d;
      for (std::size_t j = 0; j < next.size(); ++j) acc[j] += w * maps[i].step(next[j]) / dd;
      if (k + 1 < n) walk(k + 1, w, dd, acc);
    }
  }
};

}  // namespace

double g1_eval(const StochasticSystem& s, const LogPolar& z) {
  const auto maps = num_maps(s);
  CompensatedSum acc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    HomPoint p = lift(z);
    acc.add(to_double(s.prob(i)) * maps[i].step(p) / maps[i].d);
  }
  return acc.value();
}

double g1_eval(const StochasticSystem& s, ComplexVal z) { return g1_eval(s, LogPolar::from_complex(z)); }

int green_depth(const StochasticSystem& s, double tol, int max_depth) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const double l1 = arch_l1(s);
  const double delta = to_double(stochastic_degree(s));
  for (int n = 1; n <= max_depth; ++n)
    if (2.0 * truncation_tail(l1, delta, n) <= tol / 2) return n;
  throw Error(ErrorCode::ConvergenceFailure, "tail bound needs depth beyond " + std::to_string(max_depth));
}

namespace {

/// Averages sum_k log m_k / deg(gamma_k) over words for each point; with
/// `relative`, the same sum at infinity is subtracted word by word.
std::vector<GreenValue> escape_sums(const StochasticSystem& s, const std::vector<LogPolar>& zs,
                                    const GreenConfig& cfg, bool relative) {
  if (cfg.precision > 15)
    throw Error(ErrorCode::InvalidArgument, "Green's function evaluation runs in double precision (<= 15 digits)");
  if (cfg.tol < 1e-12) throw Error(ErrorCode::ConvergenceFailure, "tolerance below double rounding floor");
  const int n = cfg.depth > 0 ? cfg.depth : green_depth(s, cfg.tol, cfg.max_depth);
  const double tail = 2.0 * truncation_tail(arch_l1(s), to_double(stochastic_degree(s)), n);
  const auto maps = num_maps(s);
  const auto probs = prob_doubles(s);
  // Points plus infinity, which fixes the normalization g(infinity) = 0.
  std::vector<HomPoint> start;
  for (const auto& z : zs) start.push_back(lift(z));
  start.push_back({1.0, 0.0});
  const std::size_t P = start.size();

  std::vector<GreenValue> out(zs.size());
  const bool enumerate = cfg.samples == 0 && word_count(s.size(), n, cfg.word_cap) <= cfg.word_cap;
  if (enumerate) {
    std::vector<double> acc(P, 0.0);
    EscapeTree tree{maps, probs, n, std::vector<std::vector<HomPoint>>(static_cast<std::size_t>(n) + 1)};
    tree.buf[0] = start;
    tree.walk(0, 1.0, 1.0, acc);
    for (std::size_t j = 0; j < zs.size(); ++j)
      out[j] = {acc[j] - (relative ? acc[P - 1] : 0.0), 0.0, tail, n, EstimateMode::Exact,
                word_count(s.size(), n, cfg.word_cap)};
    return out;
  }
  auto sampled = [&](std::size_t samples, std::uint64_t seed) {
    const CategoricalSampler pick(probs);
    const std::size_t chunks = (samples + kChunkSize - 1) / kChunkSize;
    std::vector<std::vector<RunningMoments>> parts(chunks, std::vector<RunningMoments>(zs.size()));
    run_chunks(samples, cfg.workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
      auto rng = stream_rng(seed, c);
      std::vector<HomPoint> st;
      std::vector<double> acc(P);
      for (std::size_t k = begin; k < end; ++k) {
        st = start;
        std::fill(acc.begin(), acc.end(), 0.0);
        double deg = 1.0;
        for (int step = 0; step < n; ++step) {
          const auto& m = maps[pick(rng)];
          deg *= m.d;
          for (std::size_t j = 0; j < P; ++j) acc[j] += m.step(st[j]) / deg;
        }
        for (std::size_t j = 0; j < zs.size(); ++j) parts[c][j].add(acc[j] - (relative ? acc[P - 1] : 0.0));
      }
    });
    std::vector<RunningMoments> all(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j)
      for (const auto& p : parts) all[j].merge(p[j]);
    return all;
  };
  std::size_t samples = cfg.samples;
  if (samples == 0) {
    // Pilot run, then enough samples for a standard error of tol / 2 at the noisiest point.
    constexpr std::size_t kPilot = 4000;
    double sd = 0.0;
    for (const auto& m : sampled(kPilot, splitmix64(cfg.seed))) sd = std::max(sd, std::sqrt(m.variance()));
    double want = std::ceil(std::pow(2.0 * sd / cfg.tol, 2));
    samples = static_cast<std::size_t>(std::clamp(want, static_cast<double>(kPilot), static_cast<double>(cfg.max_samples)));
  }
  auto all = sampled(samples, cfg.seed);
  for (std::size_t j = 0; j < zs.size(); ++j)
    out[j] = {all[j].mean, all[j].stderr_of_mean(), tail, n, EstimateMode::MonteCarlo, samples};
  return out;
}

}  // namespace

int escape_depth(const StochasticSystem& s, double tol, int max_depth) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const double l1 = arch_l1(s);
  const double delta = to_double(stochastic_degree(s));
  for (int n = 1; n <= max_depth; ++n)
    if (truncation_tail(l1, delta, n) <= tol) return n;
  throw Error(ErrorCode::ConvergenceFailure, "tail bound needs depth beyond " + std::to_string(max_depth));
}

std::vector<GreenValue> gS_eval_many(const StochasticSystem& s, const std::vector<LogPolar>& zs,
                                     const GreenConfig& cfg) {
  return escape_sums(s, zs, cfg, true);
}

std::vector<GreenValue> escape_eval_many(const StochasticSystem& s, const std::vector<LogPolar>& zs,
                                         const GreenConfig& cfg) {
  auto out = escape_sums(s, zs, cfg, false);
  for (std::size_t j = 0; j < zs.size(); ++j) {
    out[j].value += log_plus(zs[j]);
    out[j].tail_bound /= 2;  // one-sided: no subtraction at infinity
  }
  return out;
}

GreenValue gS_eval(const StochasticSystem& s, const LogPolar& z, const GreenConfig& cfg) {
  return gS_eval_many(s, {z}, cfg)[0];
}

GreenValue gS_eval(const StochasticSystem& s, ComplexVal z, const GreenConfig& cfg) {
  return gS_eval(s, LogPolar::from_complex(z), cfg);
}

GreenValue potential_eval(const StochasticSystem& s, const LogPolar& z, const GreenConfig& cfg) {
  if (z.is_infinity()) throw Error(ErrorCode::InfinitePoint, "the potential is infinite at infinity");
  GreenValue g = gS_eval(s, z, cfg);
  g.value += log_plus(z);
  return g;
}

GreenValue potential_eval(const StochasticSystem& s, ComplexVal z, const GreenConfig& cfg) {
  return potential_eval(s, LogPolar::from_complex(z), cfg);
}

OrbitSampleBatch canonical_sample(const StochasticSystem& s, int n, std::size_t samples, std::uint64_t seed,
                                  unsigned workers) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  auto on_circle = [](std::mt19937_64& rng) {
    return LogPolar{0.0, std::uniform_real_distribution<double>(0.0, kTwoPi)(rng)};
  };
  return backward_sample_from(s, on_circle, n, samples, seed, workers);
}

// ------------------------------------------------------------ statistics

EmpiricalCDF::EmpiricalCDF(std::vector<double> values) : v_(std::move(values)) {
  if (v_.empty()) throw Error(ErrorCode::InvalidArgument, "empirical CDF of no samples");
  for (double x : v_)
    if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "NaN sample");
  std::sort(v_.begin(), v_.end());
}

double EmpiricalCDF::operator()(double x) const {
  return static_cast<double>(std::upper_bound(v_.begin(), v_.end(), x) - v_.begin()) / static_cast<double>(v_.size());
}

double ks_distance(const EmpiricalCDF& e, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left) {
  const auto& v = e.values();
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    d = std::max({d, std::fabs(static_cast<double>(j) / n - cdf(v[i])),
                  std::fabs(static_cast<double>(i) / n - cdf_left(v[i]))});
    i = j;
  }
  return d;
}

double ks_distance(const EmpiricalCDF& e, const std::function<double(double)>& cdf) { return ks_distance(e, cdf, cdf); }

double ks_two_sample(const EmpiricalCDF& a, const EmpiricalCDF& b) {
  const auto &x = a.values(), &y = b.values();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double t = j >= y.size() || (i < x.size() && x[i] <= y[j]) ? x[i] : y[j];
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / static_cast<double>(x.size()) -
                              static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

double point_mass_distance(const EmpiricalCDF& e, double at, double window) {
  std::size_t far = 0;
  for (double x : e.values())
    if (!(std::fabs(x - at) <= window)) ++far;
  return static_cast<double>(far) / static_cast<double>(e.size());
}

std::vector<double> log_radii(const OrbitSampleBatch& b) {
  std::vector<double> r;
  r.reserve(b.points.size());
  for (const auto& p : b.points) r.push_back(p.log_abs);
  return r;
}

std::vector<double> unit_angles(const OrbitSampleBatch& b) {
  std::vector<double> a;
  a.reserve(b.points.size());
  for (const auto& p : b.points) a.push_back(p.arg / kTwoPi);
  return a;
}

double pullback_invariance_residual(const StochasticSystem& s, int n, std::size_t samples, std::uint64_t seed,
                                    unsigned workers) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 0");
  EmpiricalCDF a(log_radii(canonical_sample(s, n, samples, seed, workers)));
  EmpiricalCDF b(log_radii(canonical_sample(s, n + 1, samples, splitmix64(seed), workers)));
  return ks_two_sample(a, b);
}

// ------------------------------------------------------------ regularization

namespace {

struct Simpson {
  const std::function<double(double)>& f;
  int max_depth;
  bool failed = false;

  double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double diff = left + right - whole;
    if (std::fabs(diff) <= 15 * tol) return left + right + diff / 15;
    if (depth >= max_depth) {
      failed = true;
      return left + right + diff / 15;
    }
    return run(a, m, fa, flm, fm, left, tol / 2, depth + 1) + run(m, b, fm, frm, fb, right, tol / 2, depth + 1);
  }
};

}  // namespace

double circle_mutual_energy(ComplexVal d, double eps, double tol) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const std::function<double(double)> f = [&](double s) {
    return std::log(std::max(std::abs(d - std::polar(eps, s)), eps));
  };
  // Split at the kinks where |d - eps e^{is}| = eps, if any.
  std::vector<double> cuts{0.0, kTwoPi};
  const double r = std::abs(d);
  if (r > 0.0 && r < 2 * eps) {
    const double half = std::acos(r / (2 * eps));
    for (double c : {std::arg(d) - half, std::arg(d) + half}) cuts.push_back(wrap_angle(c));
  }
  std::sort(cuts.begin(), cuts.end());
  Simpson q{f, 60};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 0.0) continue;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    total += q.run(a, b, fa, fm, fb, whole, tol * (b - a) / kTwoPi, 0);
  }
  if (q.failed) throw Error(ErrorCode::QuadratureFailure, "adaptive quadrature did not reach tolerance");
  return -total / kTwoPi;
}

RegularizedEnergy regularize(const NumericMeasure& m, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1]");
  if (m.points.size() != m.weights.size()) throw Error(ErrorCode::InvalidArgument, "points and weights differ in length");
  RegularizedEnergy e;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    e.self_part += m.weights[i] * m.weights[i] * -std::log(eps);
    for (std::size_t j = 0; j < m.points.size(); ++j)
      if (i != j) e.mutual_part += m.weights[i] * m.weights[j] * circle_mutual_energy(m.points[i] - m.points[j], eps);
  }
  e.total = e.self_part + e.mutual_part;
  return e;
}

// ------------------------------------------------------------ radii

std::optional<StationaryLaw> monomial_radial_law(const StochasticSystem& s) {
  std::vector<AffineBranch> branches;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto mono = s.map(i).monomial();
    if (!mono) return std::nullopt;
    const double la = log_abs(mono->coeff);
    const double d = std::abs(mono->exponent);
    // |a w^e| = |z| gives log|w| = (log|z| - log|a|) / e.
    if (mono->exponent > 0)
      branches.push_back({1.0 / d, -la / d, to_double(s.prob(i))});
    else
      branches.push_back({-1.0 / d, la / d, to_double(s.prob(i))});
  }
  return StationaryLaw::solve(branches);
}

Radii radii(const StochasticSystem& s, const RadiiOptions& opts) {
  if (opts.shells < 1 || opts.angles < 1) throw Error(ErrorCode::InvalidArgument, "probe grid must be nonempty");
  Radii out;
  // (rho, rho) = -E_rho[p_rho], sampled from the canonical measure.
  auto sample = canonical_sample(s, opts.energy_depth, opts.energy_samples, opts.green.seed, opts.green.workers);
  std::vector<LogPolar> pts;
  for (const auto& p : sample.points)
    if (!p.is_infinity()) pts.push_back(p);
  auto g = gS_eval_many(s, pts, opts.green);
  RunningMoments energy;
  for (std::size_t i = 0; i < pts.size(); ++i) energy.add(-(g[i].value + log_plus(pts[i])));
  out.self_energy = energy.mean;
  out.self_energy_stderr = energy.stderr_of_mean();

  std::vector<LogPolar> probes{LogPolar{-kInf, 0.0}};
  for (int i = 0; i < opts.shells; ++i) {
    double lr = opts.shells == 1 ? 0.5 * (opts.log_r_min + opts.log_r_max)
                                 : opts.log_r_min + (opts.log_r_max - opts.log_r_min) * i / (opts.shells - 1);
    for (int k = 0; k < opts.angles; ++k) probes.push_back({lr, kTwoPi * k / opts.angles});
  }
  auto gp = gS_eval_many(s, probes, opts.green);
  out.g_min = 0.0;  // g(infinity) = 0 belongs to the probe set
  out.g_max = 0.0;
  for (const auto& v : gp) {
    out.g_min = std::min(out.g_min, v.value);
    out.g_max = std::max(out.g_max, v.value);
  }
  const double half = 0.5 * out.self_energy;
  out.r_in = std::exp(-(out.g_max + half));
  out.r_out = std::exp(-(out.g_min + half));
  return out;
}

// ------------------------------------------------------------ equidistribution

ArchEquidist equidist_test_arch(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                std::uint64_t seed, const ArchEquidistOptions& opts) {
  auto ex = exceptional_set(s);
  if (std::find(ex.points.begin(), ex.points.end(), alpha) != ex.points.end())
    throw Error(ErrorCode::ExceptionalStart, alpha.str() + " lies in the exceptional set");
  ArchEquidist out;
  out.batch = backward_sample(s, alpha, n, samples, seed, opts.workers);
  EmpiricalCDF radial(log_radii(out.batch));

  if (auto law = monomial_radial_law(s)) {
    out.closed_form_reference = true;
    auto shared = std::make_shared<StationaryLaw>(*law);
    out.reference_cdf = [shared](double v) { return shared->cdf(v); };
    if (law->is_point_mass()) {
      out.point_mass_reference = true;
      out.ks_radial = point_mass_distance(radial, law->lo(), 1.0 / std::max(n, 1));
    } else {
      out.ks_radial = ks_distance(radial, out.reference_cdf);
    }
  } else {
    auto ref = std::make_shared<EmpiricalCDF>(
        log_radii(canonical_sample(s, n, 4 * samples, splitmix64(seed ^ 0xa5a5a5a5ULL), opts.workers)));
    out.reference_cdf = [ref](double v) { return (*ref)(v); };
    out.ks_radial = ks_two_sample(radial, *ref);
  }
  out.ks_angular = ks_distance(EmpiricalCDF(unit_angles(out.batch)),
                               [](double u) { return std::clamp(u, 0.0, 1.0); });

  std::vector<LogPolar> probes;
  for (auto z : opts.probes) probes.push_back(LogPolar::from_complex(z));
  auto g = gS_eval_many(s, probes, opts.green);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const ComplexVal z = opts.probes[i];
    CompensatedSum acc;
    std::size_t used = 0;
    for (const auto& w : out.batch.points) {
      if (w.is_infinity()) continue;
      ++used;
      if (w.log_abs > 600.0)
        acc.add(w.log_abs);
      else
        acc.add(std::log(std::abs(z - w.to_complex())));
    }
    if (used == 0) continue;
    double empirical = acc.value() / static_cast<double>(used);
    double expected = g[i].value + log_plus(probes[i]);
    out.potential_residual = std::max(out.potential_residual, std::fabs(empirical - expected));
  }
  return out;
}

std::string radial_cdf_csv(const ArchEquidist& result, int rows) {
  EmpiricalCDF e(log_radii(result.batch));
  double lo = INFINITY, hi = -INFINITY;
  for (double v : e.values())
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi - lo < 1e-9) {
    lo -= 0.1;
    hi += 0.1;
  }
  std::string out = "r,empirical_cdf,reference_cdf\n";
  char line[128];
  for (int i = 0; i < rows; ++i) {
    double v = lo + (hi - lo) * i / std::max(rows - 1, 1);
    double ref = result.reference_cdf ? result.reference_cdf(v) : NAN;
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", std::exp(v), e(v), ref);
    out += line;
  }
  return out;
}

}  // namespace stochdyn
