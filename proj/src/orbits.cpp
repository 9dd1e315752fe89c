#include "stochdyn/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

#include "stochdyn/parallel.hpp"

namespace stochdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

const ComplexVal kInfPoint{kInf, 0.0};

bool is_inf(ComplexVal z) { return std::isinf(z.real()) || std::isinf(z.imag()); }

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

LogPolar LogPolar::from_complex(ComplexVal z) {
  if (is_inf(z)) return {kInf, 0.0};
  double r = std::abs(z);
  if (r == 0.0) return {-kInf, 0.0};
  return {std::log(r), wrap_angle(std::arg(z))};
}

LogPolar LogPolar::from_point(const ProjPoint& p) {
  if (p.is_infinity()) return {kInf, 0.0};
  if (p.a() == 0) return {-kInf, 0.0};
  return {stochdyn::log_abs(p.a()) - stochdyn::log_abs(p.b()), p.a() < 0 ? std::numbers::pi : 0.0};
}

ComplexVal LogPolar::to_complex() const {
  if (is_infinity()) return kInfPoint;
  if (is_zero()) return 0.0;
  return std::polar(std::exp(log_abs), arg);
}

// ------------------------------------------------------------ exact roots

namespace {

struct ExactRoot {
  ComplexVal point;
  int mult = 1;
  std::optional<ProjPoint> exact;
  IntPoly factor;  // square-free primitive factor containing the root
};

/// Roots on P^1 of a nonzero binary form, with exact multiplicities.
std::vector<ExactRoot> form_roots(const HomogeneousForm& h) {
  std::vector<ExactRoot> out;
  IntPoly hx = h.dehomogenize();
  if (hx.is_zero()) throw Error(ErrorCode::InvalidArgument, "zero form has no isolated roots");
  int deficit = h.degree - hx.degree();
  if (deficit > 0) out.push_back({kInfPoint, deficit, ProjPoint::infinity(), {}});
  if (hx.degree() < 1) return out;
  for (const auto& [factor, mult] : square_free_decomposition(hx)) {
    IntPoly rest = factor;
    for (const auto& [r, m] : rational_roots(factor)) {
      ProjPoint p = ProjPoint::from_rational(r);
      IntPoly lin(std::vector<BigInt>{-p.a(), p.b()});
      out.push_back({p.embed(), mult, p, lin});
      if (auto q = divides_exactly(rest, lin)) rest = *q;
    }
    if (rest.degree() >= 1) {
      IntPoly prim = rest.primitive_part();
      for (const auto& z : square_free_roots(prim)) out.push_back({z, mult, std::nullopt, prim});
    }
  }
  return out;
}

}  // namespace

std::vector<Preimage> preimages(const RationalMap& phi, const ProjPoint& z) {
  HomogeneousForm h = z.b() * phi.F() + BigInt(-z.a()) * phi.G();
  std::vector<Preimage> out;
  for (auto& r : form_roots(h)) out.push_back({r.point, r.mult, r.exact});
  return out;
}

namespace {

/// Double coefficients of F and G, scaled by a common power of two.
struct MapCoeffs {
  std::vector<double> f, g;
  explicit MapCoeffs(const RationalMap& phi) {
    long top = 0;
    for (const auto* h : {&phi.F(), &phi.G()})
      for (const auto& c : h->coeffs)
        top = std::max(top, bit_length(c));
    long shift = std::max(0L, top - 900);
    for (const auto& c : phi.F().coeffs) f.push_back(to_double_scaled(c, shift));
    for (const auto& c : phi.G().coeffs) g.push_back(to_double_scaled(c, shift));
  }
};

/// Roots of F - zG (|z| <= 1) or uF - G with u = 1/z; deficit counts roots at infinity.
struct NumericRoots {
  std::vector<ComplexVal> finite;
  int at_infinity = 0;
};

NumericRoots numeric_preimages(const MapCoeffs& mc, const LogPolar& z) {
  const std::size_t n = mc.f.size();
  std::vector<ComplexVal> c(n);
  if (z.log_abs <= 0.0) {
    ComplexVal t = z.to_complex();
    for (std::size_t i = 0; i < n; ++i) c[i] = mc.f[i] - t * mc.g[i];
  } else {
    ComplexVal u = z.is_infinity() ? ComplexVal(0.0) : std::polar(std::exp(-z.log_abs), -z.arg);
    for (std::size_t i = 0; i < n; ++i) c[i] = u * mc.f[i] - mc.g[i];
  }
  NumericRoots out;
  while (!c.empty() && c.back() == ComplexVal(0.0)) {
    c.pop_back();
    ++out.at_infinity;
  }
  if (c.size() >= 2) out.finite = complex_poly_roots(c);
  return out;
}

struct MonomialStep {
  double log_coeff = 0.0;
  double arg_coeff = 0.0;
  int exponent = 0;
};

/// Per-map preimage sampler: closed form for a*z^(+-d), root finding otherwise.
class MapKernel {
 public:
  explicit MapKernel(const RationalMap& phi) : degree_(phi.degree()), coeffs_(phi) {
    if (auto m = phi.monomial()) {
      mono_ = MonomialStep{log_abs(m->coeff), m->coeff < 0 ? std::numbers::pi : 0.0, m->exponent};
    }
  }

  LogPolar step(const LogPolar& z, std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> pick(0, degree_ - 1);
    const int j = pick(rng);
    if (mono_) {
      const double d = degree_;
      if (mono_->exponent > 0)
        return {(z.log_abs - mono_->log_coeff) / d, wrap_angle((z.arg - mono_->arg_coeff + kTwoPi * j) / d)};
      return {(mono_->log_coeff - z.log_abs) / d, wrap_angle((mono_->arg_coeff - z.arg + kTwoPi * j) / d)};
    }
    NumericRoots r = numeric_preimages(coeffs_, z);
    if (static_cast<std::size_t>(j) < r.finite.size()) return LogPolar::from_complex(r.finite[static_cast<std::size_t>(j)]);
    return {kInf, 0.0};
  }

 private:
  int degree_;
  MapCoeffs coeffs_;
  std::optional<MonomialStep> mono_;
};

}  // namespace

std::vector<Preimage> preimages(const RationalMap& phi, ComplexVal z) {
  NumericRoots r = numeric_preimages(MapCoeffs(phi), LogPolar::from_complex(z));
  std::vector<Preimage> out;
  if (r.at_infinity > 0) out.push_back({kInfPoint, r.at_infinity, ProjPoint::infinity()});
  for (const auto& w : r.finite) out.push_back({w, 1, std::nullopt});
  return out;
}

LogPolar sample_preimage(const RationalMap& phi, const LogPolar& z, std::mt19937_64& rng) {
  return MapKernel(phi).step(z, rng);
}

// ------------------------------------------------------------ tree

BigRat TreeLevel::total_weight() const {
  BigRat t = 0;
  for (const auto& a : atoms) t += a.weight;
  return t;
}

std::pair<HomogeneousForm, HomogeneousForm> word_forms(const StochasticSystem& s, std::span<const int> word) {
  HomogeneousForm f(std::vector<BigInt>{0, 1}, 1), g(std::vector<BigInt>{1, 0}, 1);  // identity X, Y
  for (int i : word) {
    const auto& phi = s.map(static_cast<std::size_t>(i));
    std::tie(f, g) = compose_forms(phi.F(), phi.G(), f, g);
  }
  return {f, g};
}

namespace {

bool near(ComplexVal a, ComplexVal b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

bool has_root_near(const IntPoly& c, ComplexVal z, double tol) {
  if (c.degree() < 1) return false;
  if (c.degree() == 1) return near(to_double(ratio(-c[0], c[1])), z, tol);
  for (const auto& r : square_free_roots(c))
    if (near(r, z, tol)) return true;
  return false;
}

/// Merges atoms that represent the same point. Rational atoms merge exactly;
/// irrational atoms merge only when numerically coincident and their
/// polynomials share a factor with a root there.
TreeLevel merge_atoms(std::vector<Atom> raw, double tol) {
  TreeLevel level;
  std::map<ProjPoint, Atom> exact;
  std::vector<Atom> numeric;
  for (auto& a : raw) {
    if (a.exact) {
      auto [it, inserted] = exact.try_emplace(*a.exact, a);
      if (!inserted) {
        it->second.weight += a.weight;
        it->second.mult += a.mult;
      }
    } else {
      numeric.push_back(std::move(a));
    }
  }
  std::sort(numeric.begin(), numeric.end(), [](const Atom& x, const Atom& y) { return x.point.real() < y.point.real(); });
  std::vector<Atom> merged;
  std::vector<bool> used(numeric.size(), false);
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    if (used[i]) continue;
    Atom cur = numeric[i];
    const double reach = tol * std::max(1.0, std::abs(cur.point)) * 2.0;
    for (std::size_t j = i + 1; j < numeric.size() && numeric[j].point.real() - cur.point.real() <= reach; ++j) {
      if (used[j] || !near(cur.point, numeric[j].point, tol)) continue;
      const Atom& other = numeric[j];
      bool same_identity = cur.minpoly_hint == other.minpoly_hint ||
                           has_root_near(gcd(cur.minpoly_hint, other.minpoly_hint), cur.point, tol);
      if (!same_identity) continue;
      cur.weight += other.weight;
      cur.mult += other.mult;
      cur.tolerance_merged = true;
      used[j] = true;
    }
    if (cur.tolerance_merged) level.tolerance_merged = true;
    merged.push_back(std::move(cur));
  }
  for (auto& [p, a] : exact) level.atoms.push_back(std::move(a));
  for (auto& a : merged) level.atoms.push_back(std::move(a));
  return level;
}

}  // namespace

MeasureTree backward_tree(const StochasticSystem& s, const ProjPoint& alpha, int n, const TreeOptions& opts) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative depth");
  MeasureTree tree;
  tree.root = alpha;
  std::size_t nodes = 0;
  for (int k = 0; k <= n; ++k) {
    std::vector<Atom> raw;
    for_each_word(s, k, opts.node_budget, [&](const WordView& w) {
      auto [f, g] = word_forms(s, w.indices);
      HomogeneousForm h = alpha.b() * f + BigInt(-alpha.a()) * g;
      for (auto& r : form_roots(h)) {
        if (++nodes > opts.node_budget)
          throw Error(ErrorCode::NodeBudgetExceeded, "tree exceeds " + std::to_string(opts.node_budget) + " nodes");
        raw.push_back(Atom{r.point, r.exact, w.weight * ratio(r.mult, w.degree), r.mult, r.factor, false});
      }
    });
    tree.levels.push_back(merge_atoms(std::move(raw), opts.cluster_tol));
  }
  return tree;
}

BigRat well_distributed_stat(const MeasureTree& t, int level) {
  if (level < 0 || static_cast<std::size_t>(level) >= t.levels.size())
    throw Error(ErrorCode::InvalidArgument, "tree has no level " + std::to_string(level));
  BigRat acc = 0;
  for (const auto& a : t.levels[static_cast<std::size_t>(level)].atoms) acc += a.weight * a.weight;
  return acc;
}

// ------------------------------------------------------------ sigma at atoms

namespace {

struct WordCritical {
  BigRat weight;
  BigInt degree;
  std::vector<int> word;
  std::vector<std::pair<IntPoly, int>> critical;  // Yun factors of the Wronskian, dehomogenized
};

HomogeneousForm deriv_x(const HomogeneousForm& f) {
  std::vector<BigInt> v(static_cast<std::size_t>(f.degree));
  for (int i = 1; i <= f.degree; ++i) v[static_cast<std::size_t>(i - 1)] = f.coeffs[static_cast<std::size_t>(i)] * i;
  return HomogeneousForm(std::move(v), f.degree - 1);
}

HomogeneousForm deriv_y(const HomogeneousForm& f) {
  std::vector<BigInt> v(static_cast<std::size_t>(f.degree));
  for (int i = 0; i < f.degree; ++i)
    v[static_cast<std::size_t>(i)] = f.coeffs[static_cast<std::size_t>(i)] * (f.degree - i);
  return HomogeneousForm(std::move(v), f.degree - 1);
}

class SigmaContext {
 public:
  explicit SigmaContext(const StochasticSystem& s) : s_(s) {
    for_each_word(s, 3, kDefaultWordCap, [&](const WordView& w) {
      auto [f, g] = word_forms(s, w.indices);
      HomogeneousForm wr = deriv_x(f) * deriv_y(g) + BigInt(-1) * (deriv_y(f) * deriv_x(g));
      IntPoly wx = wr.dehomogenize();
      WordCritical wc{w.weight, w.degree, std::vector<int>(w.indices.begin(), w.indices.end()), {}};
      if (wx.degree() >= 1) wc.critical = square_free_decomposition(wx);
      words_.push_back(std::move(wc));
    });
  }

  BigRat sigma(const Atom& a) {
    if (a.exact) return sigma3(s_, *a.exact);
    BigRat total = 0;
    for (const auto& w : words_) {
      int order = 0;
      for (const auto& [b, i] : w.critical)
        if (shares_root(a, b)) order += i;
      total += w.weight * ratio(1 + order, w.degree);
    }
    return total;
  }

 private:
  bool shares_root(const Atom& a, const IntPoly& b) {
    std::string key = a.minpoly_hint.str() + "|" + b.str();
    auto it = common_.find(key);
    if (it == common_.end()) it = common_.emplace(key, gcd(a.minpoly_hint, b)).first;
    return has_root_near(it->second, a.point, 1e-6);
  }

  const StochasticSystem& s_;
  std::vector<WordCritical> words_;
  std::map<std::string, IntPoly> common_;
};

BigRat sup_weight(const TreeLevel& l) {
  BigRat m = 0;
  for (const auto& a : l.atoms) m = std::max(m, a.weight);
  return m;
}

}  // namespace

BigRat atom_sigma3(const StochasticSystem& s, const Atom& a) { return SigmaContext(s).sigma(a); }

std::vector<MassDecay> sup_mass_decay(const StochasticSystem& s, const MeasureTree& t) {
  if (t.levels.size() < 4) throw Error(ErrorCode::InvalidArgument, "mass decay needs a tree of depth >= 3");
  SigmaContext ctx(s);
  std::vector<MassDecay> out;
  for (std::size_t k = 1; 3 * k < t.levels.size(); ++k) {
    const auto& lvl = t.levels[3 * k];
    MassDecay md;
    md.k = static_cast<int>(k);
    md.sup_mass = sup_weight(lvl);
    md.ratio = md.sup_mass / sup_weight(t.levels[3 * (k - 1)]);
    md.certified_bound = 0;
    for (const auto& a : lvl.atoms) md.certified_bound = std::max(md.certified_bound, ctx.sigma(a));
    out.push_back(md);
  }
  return out;
}

DiscreteMeasure pushforward(const RationalMap& phi, const DiscreteMeasure& m) {
  std::vector<ProjPoint> pts;
  for (const auto& p : m.support()) pts.push_back(phi(p));
  return DiscreteMeasure(std::move(pts), m.weights());
}

// ------------------------------------------------------------ sampling

OrbitSampleBatch backward_sample_from(const StochasticSystem& s,
                                      const std::function<LogPolar(std::mt19937_64&)>& start, int n,
                                      std::size_t samples, std::uint64_t seed, unsigned workers) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative depth");
  std::vector<MapKernel> kernels;
  std::vector<double> probs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    kernels.emplace_back(s.map(i));
    probs.push_back(to_double(s.prob(i)));
  }
  const CategoricalSampler pick(probs);
  OrbitSampleBatch batch;
  batch.points.resize(samples);
  batch.depth = n;
  batch.seed = seed;
  batch.samples = samples;
  run_chunks(samples, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
    auto rng = stream_rng(seed, c);
    for (std::size_t k = begin; k < end; ++k) {
      LogPolar z = start(rng);
      for (int j = 0; j < n; ++j) z = kernels[pick(rng)].step(z, rng);
      batch.points[k] = z;
    }
  });
  return batch;
}

OrbitSampleBatch backward_sample(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                 std::uint64_t seed, unsigned workers) {
  const LogPolar a = LogPolar::from_point(alpha);
  return backward_sample_from(s, [a](std::mt19937_64&) { return a; }, n, samples, seed, workers);
}

std::string samples_csv(const OrbitSampleBatch& batch) {
  std::string out = "index,re,im,log_abs,depth\n";
  char buf[160];
  for (std::size_t i = 0; i < batch.points.size(); ++i) {
    ComplexVal z = batch.points[i].to_complex();
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d\n", i, z.real(), z.imag(), batch.points[i].log_abs,
                  batch.depth);
    out += buf;
  }
  return out;
}

}  // namespace stochdyn
