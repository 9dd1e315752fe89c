#include "stochdyn/dynsys.hpp"

#include <algorithm>

namespace stochdyn {

namespace {

BigInt form_content(const HomogeneousForm& f, const HomogeneousForm& g) {
  BigInt c = 0;
  for (const auto& x : f.coeffs) c = gcd(c, x);
  for (const auto& x : g.coeffs) c = gcd(c, x);
  return c;
}

HomogeneousForm divide_form(const HomogeneousForm& f, const BigInt& c) {
  std::vector<BigInt> v = f.coeffs;
  for (auto& x : v) x /= c;
  return HomogeneousForm(std::move(v), f.degree);
}

/// d/dX and d/dY of a binary form.
HomogeneousForm dX(const HomogeneousForm& f) {
  std::vector<BigInt> v(static_cast<std::size_t>(f.degree));
  for (int i = 1; i <= f.degree; ++i) v[static_cast<std::size_t>(i - 1)] = f.coeffs[static_cast<std::size_t>(i)] * i;
  return HomogeneousForm(std::move(v), f.degree - 1);
}

HomogeneousForm dY(const HomogeneousForm& f) {
  std::vector<BigInt> v(static_cast<std::size_t>(f.degree));
  for (int i = 0; i < f.degree; ++i)
    v[static_cast<std::size_t>(i)] = f.coeffs[static_cast<std::size_t>(i)] * (f.degree - i);
  return HomogeneousForm(std::move(v), f.degree - 1);
}

std::vector<HomogeneousForm> powers(const HomogeneousForm& f, int n) {
  std::vector<HomogeneousForm> out;
  out.emplace_back(std::vector<BigInt>{1}, 0);
  for (int k = 1; k <= n; ++k) out.push_back(out.back() * f);
  return out;
}

}  // namespace

RationalMap RationalMap::from_forms(HomogeneousForm f, HomogeneousForm g) {
  if (f.degree != g.degree) throw Error(ErrorCode::DegreeMismatch, "map forms must share a degree");
  if (f.is_zero() && g.is_zero()) throw Error(ErrorCode::DegenerateMap, "both forms vanish");
  IntPoly pf = f.dehomogenize(), pg = g.dehomogenize();
  IntPoly common = gcd(pf, pg);
  if (common.degree() >= 1) throw Error(ErrorCode::CommonFactor, "numerator and denominator share " + common.str());
  if (f.degree < 2) throw Error(ErrorCode::DegreeTooLow, "degree " + std::to_string(f.degree) + " < 2");
  BigInt c = form_content(f, g);
  if (c != 1) {
    f = divide_form(f, c);
    g = divide_form(g, c);
  }
  BigInt r = resultant(f, g, f.degree);
  if (r == 0) throw Error(ErrorCode::DegenerateMap, "resultant vanishes");
  return RationalMap(std::move(f), std::move(g), std::move(r));
}

RationalMap RationalMap::make(const IntPoly& num, const IntPoly& den) {
  if (num.is_zero() && den.is_zero()) throw Error(ErrorCode::DegenerateMap, "both polynomials are zero");
  if (den.is_zero()) throw Error(ErrorCode::DegenerateMap, "zero denominator");
  IntPoly common = gcd(num, den);
  if (common.degree() >= 1) throw Error(ErrorCode::CommonFactor, "numerator and denominator share " + common.str());
  int d = std::max(num.degree(), den.degree());
  if (d < 2) throw Error(ErrorCode::DegreeTooLow, "degree " + std::to_string(std::max(d, 0)) + " < 2");
  return from_forms(HomogeneousForm::from_poly(num, d), HomogeneousForm::from_poly(den, d));
}

ProjPoint RationalMap::operator()(const ProjPoint& p) const {
  return ProjPoint(f_.eval(p.a(), p.b()), g_.eval(p.a(), p.b()));
}

std::optional<RationalMap::Monomial> RationalMap::monomial() const {
  const int d = degree();
  auto only = [](const HomogeneousForm& h, int idx) {
    for (int i = 0; i <= h.degree; ++i)
      if ((i == idx) != (h.coeffs[static_cast<std::size_t>(i)] != 0)) return false;
    return true;
  };
  const auto sd = static_cast<std::size_t>(d);
  if (only(f_, d) && only(g_, 0)) return Monomial{ratio(f_.coeffs[sd], g_.coeffs[0]), d};
  if (only(f_, 0) && only(g_, d)) return Monomial{ratio(f_.coeffs[0], g_.coeffs[sd]), -d};
  return std::nullopt;
}

std::string RationalMap::str() const {
  return "(" + f_.dehomogenize().str() + ")/(" + g_.dehomogenize().str() + ")";
}

std::pair<HomogeneousForm, HomogeneousForm> compose_forms(const HomogeneousForm& outer_f,
                                                          const HomogeneousForm& outer_g,
                                                          const HomogeneousForm& inner_f,
                                                          const HomogeneousForm& inner_g) {
  const int d = outer_f.degree;
  const int e = inner_f.degree;
  auto pf = powers(inner_f, d);
  auto pg = powers(inner_g, d);
  HomogeneousForm rf(std::vector<BigInt>{}, d * e), rg(std::vector<BigInt>{}, d * e);
  for (int i = 0; i <= d; ++i) {
    const auto& a = outer_f.coeffs[static_cast<std::size_t>(i)];
    const auto& b = outer_g.coeffs[static_cast<std::size_t>(i)];
    if (a == 0 && b == 0) continue;
    HomogeneousForm term = pf[static_cast<std::size_t>(i)] * pg[static_cast<std::size_t>(d - i)];
    if (a != 0) rf = rf + a * term;
    if (b != 0) rg = rg + b * term;
  }
  return {rf, rg};
}

int ramification_index(const RationalMap& phi, const ProjPoint& p) {
  BigInt fa = phi.F().eval(p.a(), p.b());
  BigInt ga = phi.G().eval(p.a(), p.b());
  HomogeneousForm h = ga * phi.F() + BigInt(-fa) * phi.G();
  IntPoly hx = h.dehomogenize();
  if (p.is_infinity()) return phi.degree() - hx.degree();
  return root_multiplicity(hx, p);
}

BadPrimes bad_primes(const RationalMap& phi, unsigned long trial_bound) {
  Factorization fac = factorize(phi.res(), trial_bound);
  BadPrimes out;
  for (const auto& [p, e] : fac.factors) out.primes.push_back(p);
  out.complete = fac.complete;
  out.unfactored = fac.unfactored;
  return out;
}

StochasticSystem::StochasticSystem(std::vector<RationalMap> maps, std::vector<BigRat> probs)
    : maps_(std::move(maps)), probs_(std::move(probs)) {
  if (maps_.empty()) throw Error(ErrorCode::InvalidSystem, "empty system");
  if (maps_.size() != probs_.size()) throw Error(ErrorCode::InvalidSystem, "one probability per map required");
  BigRat total = 0;
  for (const auto& q : probs_) {
    if (q <= 0) throw Error(ErrorCode::InvalidSystem, "probability " + q.get_str() + " is not positive");
    total += q;
  }
  if (total != 1) throw Error(ErrorCode::InvalidSystem, "probabilities sum to " + total.get_str());
}

BigRat stochastic_degree(const StochasticSystem& s) {
  BigRat inv = 0;
  for (std::size_t i = 0; i < s.size(); ++i) inv += s.prob(i) / s.map(i).degree();
  return 1 / inv;
}

void for_each_word(const StochasticSystem& s, int n, std::size_t cap,
                   const std::function<void(const WordView&)>& visit) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative word length");
  BigInt count = 1;
  for (int k = 0; k < n; ++k) {
    count *= static_cast<unsigned long>(s.size());
    if (count > BigInt(static_cast<unsigned long>(cap)))
      throw Error(ErrorCode::WordCapExceeded, std::to_string(s.size()) + "^" + std::to_string(n) + " words exceed cap");
  }
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<BigRat> w(static_cast<std::size_t>(n) + 1, BigRat(1));
  std::vector<BigInt> deg(static_cast<std::size_t>(n) + 1, BigInt(1));
  // Iterative odometer with prefix products.
  int level = 0;
  while (true) {
    while (level < n) {
      auto l = static_cast<std::size_t>(level);
      w[l + 1] = w[l] * s.prob(static_cast<std::size_t>(idx[l]));
      deg[l + 1] = deg[l] * s.map(static_cast<std::size_t>(idx[l])).degree();
      ++level;
    }
    visit(WordView{idx, w[static_cast<std::size_t>(n)], deg[static_cast<std::size_t>(n)]});
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] + 1 == static_cast<int>(s.size())) {
      idx[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    level = k;
  }
}

int word_ramification(const StochasticSystem& s, std::span<const int> word, const ProjPoint& p) {
  int e = 1;
  ProjPoint z = p;
  for (int i : word) {
    const auto& phi = s.map(static_cast<std::size_t>(i));
    e *= ramification_index(phi, z);
    z = phi(z);
  }
  return e;
}

BigRat sigma3(const StochasticSystem& s, const ProjPoint& p, std::size_t cap) {
  BigRat total = 0;
  for_each_word(s, 3, cap, [&](const WordView& w) {
    total += w.weight * ratio(word_ramification(s, w.indices, p), w.degree);
  });
  return total;
}

bool is_exceptional_system(const StochasticSystem& s, const ProjPoint& p, std::size_t cap) {
  bool all = true;
  for_each_word(s, 3, cap, [&](const WordView& w) {
    if (all && BigInt(word_ramification(s, w.indices, p)) != w.degree) all = false;
  });
  return all;
}

ExceptionalSet exceptional_set(const StochasticSystem& s, std::size_t cap) {
  const RationalMap& phi = s.map(0);
  const int d = phi.degree();
  std::vector<ProjPoint> candidates;
  ExceptionalSet out;
  if (ramification_index(phi, ProjPoint::infinity()) == d) candidates.push_back(ProjPoint::infinity());
  HomogeneousForm w = dX(phi.F()) * dY(phi.G()) + BigInt(-1) * (dY(phi.F()) * dX(phi.G()));
  IntPoly wx = w.dehomogenize();
  if (wx.degree() >= 1) {
    for (const auto& [factor, mult] : square_free_decomposition(wx)) {
      if (mult != d - 1) continue;
      IntPoly rest = factor;
      for (const auto& [r, m] : rational_roots(factor)) {
        ProjPoint pt = ProjPoint::from_rational(r);
        if (ramification_index(phi, pt) == d) candidates.push_back(pt);
        IntPoly lin(std::vector<BigInt>{-pt.a(), pt.b()});
        // Gauss: a primitive linear factor divides a primitive polynomial in Z[x].
        if (auto q = divides_exactly(rest, lin)) rest = *q;
      }
      if (rest.degree() >= 1) out.irrational_candidates.push_back(rest.primitive_part());
    }
  }
  for (const auto& c : candidates)
    if (is_exceptional_system(s, c, cap)) out.points.push_back(c);
  std::sort(out.points.begin(), out.points.end());
  return out;
}

}  // namespace stochdyn
