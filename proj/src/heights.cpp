#include "stochdyn/heights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stochdyn {

Place Place::prime(BigInt p) {
  if (!is_probable_prime(p)) throw Error(ErrorCode::InvalidArgument, p.get_str() + " is not prime");
  Place v;
  v.p_ = std::move(p);
  return v;
}

double Place::log_abs(const BigRat& x) const {
  if (x == 0) return -std::numeric_limits<double>::infinity();
  if (is_arch()) return stochdyn::log_abs(x);
  return -static_cast<double>(*padic_valuation(x, p_)) * stochdyn::log_abs(p_);
}

// ---------------------------------------------------------------- LogSum

void LogSum::add(const BigInt& n, const BigRat& coeff) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "log of zero");
  BigInt m = abs(n);
  if (m == 1 || coeff == 0) return;
  raw_[m] += coeff;
}

void LogSum::add(const BigRat& q, const BigRat& coeff) {
  add(BigInt(q.get_num()), coeff);
  add(BigInt(q.get_den()), BigRat(-coeff));
}

LogSum& LogSum::operator+=(const LogSum& other) {
  for (const auto& [b, c] : other.raw_) raw_[b] += c;
  return *this;
}

LogSum& LogSum::operator-=(const LogSum& other) {
  for (const auto& [b, c] : other.raw_) raw_[b] -= c;
  return *this;
}

LogSum LogSum::scaled(const BigRat& c) const {
  LogSum out;
  if (c == 0) return out;
  for (const auto& [b, x] : raw_) out.raw_[b] = x * c;
  return out;
}

std::vector<std::pair<BigInt, BigRat>> LogSum::terms() const {
  std::map<BigInt, BigRat> basis;
  for (const auto& [b, c] : raw_)
    if (c != 0) basis[b] += c;
  // Coprime refinement: split any two bases sharing a factor g into b/g, g.
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto i = basis.begin(); i != basis.end() && !changed; ++i) {
      for (auto j = std::next(i); j != basis.end(); ++j) {
        BigInt g = gcd(i->first, j->first);
        if (g == 1) continue;
        BigInt bi = i->first / g, bj = j->first / g;
        BigRat ci = i->second, cj = j->second;
        basis.erase(j);
        basis.erase(i);
        if (bi != 1) basis[bi] += ci;
        if (bj != 1) basis[bj] += cj;
        basis[g] += ci + cj;
        changed = true;
        break;
      }
    }
  }
  std::vector<std::pair<BigInt, BigRat>> out;
  for (const auto& [b, c] : basis)
    if (c != 0) out.emplace_back(b, c);
  return out;
}

bool LogSum::is_zero() const { return terms().empty(); }

double LogSum::value() const {
  CompensatedSum acc;
  for (const auto& [b, c] : raw_) acc.add(to_double(c) * log_abs(b));
  return acc.value();
}

// ---------------------------------------------------------------- heights

double weil_height(const ProjPoint& p) { return log_abs(std::max(BigInt(abs(p.a())), BigInt(abs(p.b())))); }

double weil_height_minpoly(const IntPoly& f) {
  if (f.degree() < 1) throw Error(ErrorCode::InvalidArgument, "minimal polynomial must have degree >= 1");
  IntPoly g = f.primitive_part();
  if (g.degree() >= 2) {
    auto sf = square_free_decomposition(g);
    if (sf.size() != 1 || sf[0].second != 1) throw Error(ErrorCode::NotIrreducible, g.str() + " has a repeated factor");
    if (!rational_roots(g).empty()) throw Error(ErrorCode::NotIrreducible, g.str() + " has a rational root");
  }
  CompensatedSum acc;
  acc.add(log_abs(g.lead()));
  if (g.degree() == 1) {
    acc.add(std::max(0.0, log_abs(ratio(g[0], g[1]))));
  } else {
    for (const auto& z : square_free_roots(g)) acc.add(std::max(0.0, std::log(std::abs(z))));
  }
  return acc.value() / g.degree();
}

double local_height(const ProjPoint& p, const Place& v) {
  if (p.is_infinity()) throw Error(ErrorCode::InfinitePoint, "local height at infinity");
  if (v.is_arch()) return log_abs(BigInt(std::max(BigInt(abs(p.a())), p.b()))) - log_abs(p.b());
  return static_cast<double>(*padic_valuation(p.b(), v.p())) * log_abs(v.p());
}

// ---------------------------------------------------------------- measures

DiscreteMeasure::DiscreteMeasure(std::vector<ProjPoint> support, std::vector<BigRat> weights) {
  if (support.size() != weights.size() || support.empty())
    throw Error(ErrorCode::InvalidArgument, "measure needs one weight per support point");
  std::map<ProjPoint, BigRat> merged;
  BigRat total = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (weights[i] <= 0) throw Error(ErrorCode::InvalidArgument, "measure weights must be positive");
    merged[support[i]] += weights[i];
    total += weights[i];
  }
  if (total != 1) throw Error(ErrorCode::InvalidArgument, "measure weights sum to " + total.get_str());
  for (auto& [p, w] : merged) {
    support_.push_back(p);
    weights_.push_back(w);
  }
}

DiscreteMeasure DiscreteMeasure::mixture(const std::vector<DiscreteMeasure>& parts, const std::vector<BigRat>& t) {
  if (parts.size() != t.size()) throw Error(ErrorCode::InvalidArgument, "mixture needs one weight per part");
  std::vector<ProjPoint> pts;
  std::vector<BigRat> ws;
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (std::size_t i = 0; i < parts[k].size(); ++i) {
      pts.push_back(parts[k].support()[i]);
      ws.push_back(t[k] * parts[k].weights()[i]);
    }
  return DiscreteMeasure(std::move(pts), std::move(ws));
}

double measure_height(const DiscreteMeasure& m) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < m.size(); ++i) acc.add(to_double(m.weights()[i]) * weil_height(m.support()[i]));
  return acc.value();
}

LogSum measure_height_exact(const DiscreteMeasure& m) {
  LogSum out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& p = m.support()[i];
    out.add(std::max(BigInt(abs(p.a())), BigInt(abs(p.b()))), m.weights()[i]);
  }
  return out;
}

namespace {

void require_finite(const DiscreteMeasure& m) {
  for (const auto& p : m.support())
    if (p.is_infinity()) throw Error(ErrorCode::InfinitePoint, "measure charges infinity");
}

}  // namespace

double energy_pairing_discrete(const DiscreteMeasure& gamma, const DiscreteMeasure& delta, const Place& v) {
  require_finite(gamma);
  require_finite(delta);
  CompensatedSum acc;
  for (std::size_t m = 0; m < gamma.size(); ++m)
    for (std::size_t n = 0; n < delta.size(); ++n) {
      if (gamma.support()[m] == delta.support()[n]) continue;
      BigRat diff = gamma.support()[m].value() - delta.support()[n].value();
      acc.add(-to_double(gamma.weights()[m] * delta.weights()[n]) * v.log_abs(diff));
    }
  return acc.value();
}

LogSum product_formula_sum(const DiscreteMeasure& gamma, const DiscreteMeasure& delta) {
  require_finite(gamma);
  require_finite(delta);
  LogSum out;
  for (std::size_t m = 0; m < gamma.size(); ++m)
    for (std::size_t n = 0; n < delta.size(); ++n) {
      if (gamma.support()[m] == delta.support()[n]) continue;
      BigRat diff = gamma.support()[m].value() - delta.support()[n].value();
      BigRat st = gamma.weights()[m] * delta.weights()[n];
      // archimedean place: -st * log|diff|
      out.add(diff, BigRat(-st));
      // finite places: -st * log|diff|_p = st * v_p(diff) log p
      for (const BigInt& part : {BigInt(diff.get_num()), BigInt(diff.get_den())}) {
        Factorization fac = factorize(part);
        if (!fac.complete) throw Error(ErrorCode::InvalidArgument, "cannot factor " + part.get_str());
        for (const auto& [p, e] : fac.factors) out.add(p, st * *padic_valuation(diff, p));
      }
    }
  return out;
}

BigRat standard_energy_defect_padic(const DiscreteMeasure& m, const BigInt& p) {
  require_finite(m);
  BigRat acc = 0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += 2 * m.weights()[i] * *padic_valuation(m.support()[i].b(), p);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (i != j) acc += m.weights()[i] * m.weights()[j] * *padic_valuation(m.support()[i].value() - m.support()[j].value(), p);
  acc.canonicalize();
  return acc;
}

double standard_energy_defect(const DiscreteMeasure& m, const Place& v) {
  if (!v.is_arch()) return to_double(standard_energy_defect_padic(m, v.p())) * log_abs(v.p());
  require_finite(m);
  CompensatedSum acc;
  for (std::size_t i = 0; i < m.size(); ++i) acc.add(2.0 * to_double(m.weights()[i]) * local_height(m.support()[i], v));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i == j) continue;
      BigRat diff = m.support()[i].value() - m.support()[j].value();
      acc.add(-to_double(m.weights()[i] * m.weights()[j]) * v.log_abs(diff));
    }
  return acc.value();
}

// ---------------------------------------------------------------- C_phi

double map_green_local(const RationalMap& phi, const ProjPoint& z, const Place& v) {
  BigInt fz = phi.F().eval(z.a(), z.b());
  BigInt gz = phi.G().eval(z.a(), z.b());
  auto lg = [&](const BigInt& x) { return x == 0 ? -std::numeric_limits<double>::infinity() : v.log_abs(BigRat(x)); };
  double top = std::max(lg(fz), lg(gz));
  double base = std::max(lg(z.a()), lg(z.b()));
  return top / phi.degree() - base;
}

namespace {

long max_bits(const HomogeneousForm& f, const HomogeneousForm& g) {
  long b = 0;
  for (const auto* h : {&f, &g})
    for (const auto& c : h->coeffs)
      if (c != 0) b = std::max(b, static_cast<long>(mpz_sizeinbase(c.get_mpz_t(), 2)));
  return b;
}

IntPoly reversed(const HomogeneousForm& f) {
  std::vector<BigInt> v(f.coeffs.rbegin(), f.coeffs.rend());
  return IntPoly(std::move(v));
}

}  // namespace

double map_green_arch(const RationalMap& phi, ComplexVal z) {
  const long shift = max_bits(phi.F(), phi.G());
  const double d = phi.degree();
  const double offset = static_cast<double>(shift) * std::numbers::ln2 / d;
  auto lmax = [](ComplexVal a, ComplexVal b) { return std::log(std::max(std::abs(a), std::abs(b))); };
  if (std::isinf(z.real()) || std::isinf(z.imag()) || std::abs(z) > 1.0) {
    ComplexVal w = (std::isinf(z.real()) || std::isinf(z.imag())) ? ComplexVal(0.0) : 1.0 / z;
    return lmax(reversed(phi.F()).eval_scaled(w, shift), reversed(phi.G()).eval_scaled(w, shift)) / d + offset;
  }
  return lmax(phi.F().dehomogenize().eval_scaled(z, shift), phi.G().dehomogenize().eval_scaled(z, shift)) / d + offset;
}

namespace {

/// Solve the square linear system m x = rhs over Q.
std::vector<BigRat> solve_rational(std::vector<std::vector<BigRat>> m, std::vector<BigRat> rhs) {
  const std::size_t n = m.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    while (piv < n && m[piv][k] == 0) ++piv;
    if (piv == n) throw Error(ErrorCode::DegenerateMap, "singular Sylvester system");
    std::swap(m[k], m[piv]);
    std::swap(rhs[k], rhs[piv]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || m[i][k] == 0) continue;
      BigRat f = m[i][k] / m[k][k];
      for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
      rhs[i] -= f * rhs[k];
    }
  }
  std::vector<BigRat> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return x;
}

/// max over the two Bezout identities A F + B G = Res X^(2d-1), C F + D G = Res Y^(2d-1)
/// of ||A||_1 + ||B||_1.
BigRat bezout_norm(const RationalMap& phi) {
  const int d = phi.degree();
  const std::size_t n = 2 * static_cast<std::size_t>(d);
  // Unknown j < d: coefficient of X^j Y^(d-1-j) in A; j >= d: same in B.
  std::vector<std::vector<BigRat>> m(n, std::vector<BigRat>(n, BigRat(0)));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= d; ++i) {
      m[static_cast<std::size_t>(i + j)][static_cast<std::size_t>(j)] = phi.F().coeffs[static_cast<std::size_t>(i)];
      m[static_cast<std::size_t>(i + j)][static_cast<std::size_t>(j + d)] = phi.G().coeffs[static_cast<std::size_t>(i)];
    }
  BigRat best = 0;
  for (std::size_t target : {n - 1, std::size_t{0}}) {
    std::vector<BigRat> rhs(n, BigRat(0));
    rhs[target] = phi.res();
    auto x = solve_rational(m, rhs);
    BigRat norm = 0;
    for (const auto& c : x) norm += abs(c);
    best = std::max(best, norm);
  }
  return best;
}

double l1_norm_log(const HomogeneousForm& f) {
  BigInt s = 0;
  for (const auto& c : f.coeffs) s += abs(c);
  return log_abs(s);
}

/// sup_t |(1/d) max(alpha + d t, beta) - max(t, 0)|: piecewise linear with
/// slopes 0 at both ends, so extreme values sit at the breakpoints.
double monomial_sup(double alpha, double beta, int d) {
  double tstar = (beta - alpha) / d;
  double best = 0.0;
  for (double t : {0.0, tstar, std::min(0.0, tstar) - 1.0, std::max(0.0, tstar) + 1.0}) {
    double g = std::max(alpha + d * t, beta) / d - std::max(t, 0.0);
    best = std::max(best, std::fabs(g));
  }
  return best;
}

}  // namespace

CphiBound cphi_bound(const RationalMap& phi, const Place& v, std::size_t map_index) {
  CphiBound out;
  out.map_index = map_index;
  out.place = v;
  const int d = phi.degree();
  if (!v.is_arch() && !mpz_divisible_p(phi.res().get_mpz_t(), v.p().get_mpz_t())) {
    out.exact = true;  // good reduction: g vanishes identically
    return out;
  }
  if (auto mono = phi.monomial()) {
    // F = n X^d, G = m Y^d (or swapped for negative exponent).
    const auto sd = static_cast<std::size_t>(d);
    BigInt n = mono->exponent > 0 ? phi.F().coeffs[sd] : phi.G().coeffs[sd];
    BigInt m = mono->exponent > 0 ? phi.G().coeffs[0] : phi.F().coeffs[0];
    double s = monomial_sup(v.log_abs(BigRat(n)), v.log_abs(BigRat(m)), d);
    out.numeric_estimate = s;
    out.certified_upper = s;
    out.exact = true;
    return out;
  }
  if (v.is_arch()) {
    double upper = std::max(l1_norm_log(phi.F()), l1_norm_log(phi.G())) / d;
    double lower = (log_abs(phi.res()) - log_abs(bezout_norm(phi))) / d;
    out.certified_upper = std::max(std::fabs(upper), std::fabs(lower));
    long spread = max_bits(phi.F(), phi.G());
    double span = 2.0 + static_cast<double>(spread) * std::numbers::ln2;
    double best = std::max(std::fabs(map_green_arch(phi, 0.0)),
                           std::fabs(map_green_arch(phi, ComplexVal(std::numeric_limits<double>::infinity(), 0))));
    constexpr int kShells = 129, kAngles = 64;
    for (int i = 0; i < kShells; ++i) {
      double t = -span + 2.0 * span * i / (kShells - 1);
      for (int j = 0; j < kAngles; ++j) {
        double th = 2.0 * std::numbers::pi * j / kAngles;
        best = std::max(best, std::fabs(map_green_arch(phi, std::polar(std::exp(t), th))));
      }
    }
    out.numeric_estimate = best;
    return out;
  }
  const long vres = *padic_valuation(phi.res(), v.p());
  out.certified_upper = static_cast<double>(vres) * log_abs(v.p()) / d;
  // Lower estimate of the sup from rational probes of assorted valuations.
  double best = std::max(std::fabs(map_green_local(phi, ProjPoint(0, 1), v)),
                         std::fabs(map_green_local(phi, ProjPoint::infinity(), v)));
  const long reach = 2 + vres;
  const unsigned long pu = v.p().fits_ulong_p() ? v.p().get_ui() : 1000UL;
  for (long k = -reach; k <= reach; ++k) {
    BigInt pk;
    mpz_pow_ui(pk.get_mpz_t(), v.p().get_mpz_t(), static_cast<unsigned long>(std::labs(k)));
    for (unsigned long u = 1; u <= std::min(pu + 1, 64UL); ++u) {
      for (int sgn : {1, -1}) {
        ProjPoint z = k >= 0 ? ProjPoint(sgn * BigInt(u) * pk, 1) : ProjPoint(sgn * BigInt(u), pk);
        best = std::max(best, std::fabs(map_green_local(phi, z, v)));
      }
    }
  }
  out.numeric_estimate = best;
  return out;
}

double L1Control::at(const Place& v) const {
  for (const auto& [p, c] : per_place)
    if (p == v) return c;
  return 0.0;
}

L1Control l1_height_control_total(const StochasticSystem& s) {
  std::vector<Place> places{Place::arch()};
  for (const auto& phi : s.maps()) {
    BadPrimes bp = bad_primes(phi);
    if (!bp.complete) throw Error(ErrorCode::UnsupportedStructure, "resultant " + phi.res().get_str() + " not fully factored");
    for (const auto& p : bp.primes) {
      Place v = Place::prime(p);
      if (std::find(places.begin(), places.end(), v) == places.end()) places.push_back(v);
    }
  }
  std::sort(places.begin() + 1, places.end());
  L1Control out;
  CompensatedSum total;
  for (const auto& v : places) {
    CompensatedSum at;
    for (std::size_t i = 0; i < s.size(); ++i) at.add(to_double(s.prob(i)) * cphi_bound(s.map(i), v, i).certified_upper);
    out.per_place.emplace_back(v, at.value());
    total.add(at.value());
  }
  out.total = total.value();
  return out;
}

}  // namespace stochdyn
