#include "stochdyn/levelheight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace stochdyn {

namespace {

/// Per-system data shared by all polynomials: bad primes, cached p-adic
/// escape values, and the archimedean accumulator.
class HeightContext {
 public:
  HeightContext(const StochasticSystem& s, double tol) : s_(s) {
    for (const auto& phi : s.maps()) {
      BadPrimes bp = bad_primes(phi);
      if (!bp.complete) throw Error(ErrorCode::UnsupportedStructure, "resultant " + phi.res().get_str() + " not fully factored");
      for (const auto& p : bp.primes)
        if (std::find(bad_.begin(), bad_.end(), p) == bad_.end()) bad_.push_back(p);
    }
    std::sort(bad_.begin(), bad_.end());
    for (const auto& p : bad_)
      if (classify_place(s, p).kind != PlaceKind::MonomialLike)
        throw Error(ErrorCode::UnsupportedStructure, "bad prime " + p.get_str() + " is not monomial-like");
    // Half the per-root budget to the archimedean series, the rest split over bad primes.
    arch_tol_ = bad_.empty() ? tol : tol / 2;
    padic_tol_ = bad_.empty() ? tol : tol / 2 / static_cast<double>(bad_.size());
  }

  /// Adds weight * sum of h_S over the roots of the binary form h.
  void add_form(const HomogeneousForm& h, double weight) {
    BigInt content = 0;
    for (const auto& c : h.coeffs) content = gcd(content, c);
    std::vector<BigInt> prim;
    for (const auto& c : h.coeffs) prim.push_back(BigInt(c / content));
    IntPoly q{prim};
    const int deficit = h.degree - q.degree();
    if (deficit > 0) {
      points_.push_back(LogPolar{std::numeric_limits<double>::infinity(), 0.0});
      point_weights_.push_back(weight * deficit);
      for (const auto& p : bad_) add_padic(p, ExtValuation{-1, 0}, weight * deficit);
    }
    if (q.degree() < 1) return;
    finite_ += weight * log_abs(q.lead());
    for (const auto& p : bad_) {
      finite_ -= weight * static_cast<double>(*padic_valuation(q.lead(), p)) * std::log(p.get_d());
      for (const auto& seg : newton_polygon(q, p)) {
        ExtValuation v = seg.root_valuation ? ExtValuation{0, *seg.root_valuation} : ExtValuation{1, 0};
        add_padic(p, v, weight * seg.length);
      }
    }
    for (const auto& r : poly_roots_complex(q)) {
      points_.push_back(LogPolar::from_complex(r.root));
      point_weights_.push_back(weight * r.multiplicity);
    }
  }

  double finish(double& error) {
    GreenConfig cfg;
    cfg.tol = arch_tol_;
    cfg.depth = escape_depth(s_, arch_tol_);
    auto g = escape_eval_many(s_, points_, cfg);
    CompensatedSum total;
    total.add(finite_);
    double w_total = 0.0, arch_tail = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      total.add(point_weights_[i] * g[i].value);
      w_total += point_weights_[i];
      arch_tail = std::max(arch_tail, g[i].tail_bound);
    }
    // A single root carries the archimedean tail plus one tail per bad prime.
    double padic_tail = 0.0;
    for (const auto& [p, t] : tail_by_prime_) padic_tail += t;
    error = w_total * (arch_tail + padic_tail);
    return total.value();
  }

 private:
  void add_padic(const BigInt& p, const ExtValuation& v, double weight) {
    const std::string key = p.get_str() + ":" + std::to_string(v.infinite) + ":" + v.v.get_str();
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      PadicEscape e = padic_escape(s_, p, v, padic_tol_);
      tail_by_prime_[p] = std::max(tail_by_prime_[p], e.tail_bound);
      it = cache_.emplace(key, e.value).first;
    }
    finite_ += weight * it->second;
  }

  const StochasticSystem& s_;
  double arch_tol_ = 0.0, padic_tol_ = 0.0;
  std::vector<BigInt> bad_;
  std::map<std::string, double> cache_;
  std::vector<LogPolar> points_;
  std::vector<double> point_weights_;
  double finite_ = 0.0;
  std::map<BigInt, double> tail_by_prime_;
};

}  // namespace

std::vector<LevelHeight> backward_orbit_heights(const StochasticSystem& s, const ProjPoint& alpha, int n,
                                                const LevelHeightOptions& opts) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "level must be >= 0");
  std::vector<LevelHeight> out;
  for (int k = 0; k <= n; ++k) {
    HeightContext ctx(s, opts.tol);
    LevelHeight lh;
    lh.level = k;
    for_each_word(s, k, opts.word_cap, [&](const WordView& w) {
      auto [f, g] = word_forms(s, w.indices);
      HomogeneousForm h = alpha.b() * f + BigInt(-alpha.a()) * g;
      ctx.add_form(h, to_double(w.weight) / w.degree.get_d());
      ++lh.words;
    });
    lh.value = ctx.finish(lh.error_bound);
    out.push_back(lh);
  }
  return out;
}

double root_heights_sum(const StochasticSystem& s, const IntPoly& f, double tol) {
  if (f.degree() < 1) throw Error(ErrorCode::InvalidArgument, "polynomial has no roots");
  HeightContext ctx(s, tol);
  ctx.add_form(HomogeneousForm::from_poly(f, f.degree()), 1.0);
  double err = 0.0;
  return ctx.finish(err);
}

}  // namespace stochdyn
