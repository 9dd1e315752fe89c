#include "stochdyn/padicmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stochdyn/archpotential.hpp"
#include "stochdyn/heights.hpp"
#include "stochdyn/stochheight.hpp"
#include "stochdyn/parallel.hpp"

namespace stochdyn {

std::string_view to_string(PlaceKind k) {
  switch (k) {
    case PlaceKind::GoodReduction: return "GoodReduction";
    case PlaceKind::MonomialLike: return "MonomialLike";
    case PlaceKind::Unsupported: return "Unsupported";
  }
  return "?";
}

PlaceClass classify_place(const StochasticSystem& s, const BigInt& p) {
  if (!is_probable_prime(p)) throw Error(ErrorCode::InvalidArgument, p.get_str() + " is not prime");
  PlaceClass out;
  bool good = true, monomial = true;
  for (const auto& phi : s.maps()) {
    if (phi.res() % p == 0) good = false;
    if (auto m = phi.monomial()) {
      auto v = padic_valuation(m->coeff, p);
      out.maps.push_back({std::abs(m->exponent), *v, m->exponent > 0 ? 1 : -1});
    } else {
      monomial = false;
    }
  }
  if (!monomial) out.maps.clear();
  out.kind = good ? PlaceKind::GoodReduction : monomial ? PlaceKind::MonomialLike : PlaceKind::Unsupported;
  return out;
}

BigRat val_forward_step(const ValAffine& m, const BigRat& v) {
  BigRat r = BigRat(m.sign * m.d) * v + BigRat(m.shift);
  r.canonicalize();
  return r;
}

BigRat val_backward_step(const ValAffine& m, const BigRat& v, int) {
  BigRat r = m.sign > 0 ? BigRat((v - m.shift) / m.d) : BigRat((m.shift - v) / m.d);
  r.canonicalize();
  return r;
}

namespace {

std::vector<AffineBranch> branches(const StochasticSystem& s, const std::vector<ValAffine>& maps) {
  std::vector<AffineBranch> out;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& m = maps[i];
    const double d = m.d, sh = static_cast<double>(m.shift);
    if (m.sign > 0)
      out.push_back({1.0 / d, -sh / d, to_double(s.prob(i))});
    else
      out.push_back({-1.0 / d, sh / d, to_double(s.prob(i))});
  }
  return out;
}

}  // namespace

SegmentMeasure stationary_segment(const StochasticSystem& s, const BigInt& p) {
  PlaceClass c = classify_place(s, p);
  if (c.kind == PlaceKind::Unsupported)
    throw Error(ErrorCode::UnsupportedStructure, "no computable canonical measure at p = " + p.get_str());
  if (c.kind == PlaceKind::GoodReduction) return {StationaryLaw::point_mass(0.0)};
  for (const auto& m : c.maps)
    if (m.d != c.maps[0].d || m.sign != c.maps[0].sign)
      throw Error(ErrorCode::UnsupportedStructure, "monomial maps of mixed degree or exponent sign at p = " + p.get_str());
  return {StationaryLaw::solve(branches(s, c.maps))};
}

PadicEquidist equidist_test_padic(const StochasticSystem& s, const BigInt& p, const ProjPoint& alpha, int n,
                                  std::size_t samples, std::uint64_t seed, unsigned workers) {
  if (n < 0 || samples < 1) throw Error(ErrorCode::InvalidArgument, "need depth >= 0 and samples >= 1");
  auto ex = exceptional_set(s);
  if (std::find(ex.points.begin(), ex.points.end(), alpha) != ex.points.end())
    throw Error(ErrorCode::ExceptionalStart, alpha.str() + " lies in the exceptional set");
  if (alpha.is_infinity() || alpha.a() == 0)
    throw Error(ErrorCode::InvalidArgument, "v_p of the start must be finite");
  PlaceClass c = classify_place(s, p);
  if (c.maps.empty())
    throw Error(ErrorCode::UnsupportedStructure,
                "valuation walks need every map monomial; p = " + p.get_str() + " is " + std::string(to_string(c.kind)));
  PadicEquidist out;
  out.kind = c.kind;
  out.depth = n;
  out.reference = stationary_segment(s, p);
  const BigRat v0 = *padic_valuation(alpha.value(), p);

  std::vector<double> probs;
  for (const auto& q : s.probs()) probs.push_back(to_double(q));
  const CategoricalSampler pick(probs);
  out.valuations.resize(samples);
  run_chunks(samples, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    auto rng = stream_rng(seed, chunk);
    for (std::size_t k = begin; k < end; ++k) {
      BigRat v = v0;
      for (int j = 0; j < n; ++j) v = val_backward_step(c.maps[pick(rng)], v);
      out.valuations[k] = to_double(v);
    }
  });
  EmpiricalCDF e(out.valuations);
  if (out.reference.is_point_mass()) {
    out.point_mass_reference = true;
    out.ks = point_mass_distance(e, out.reference.v_lo(), 1.0 / std::max(n, 1));
  } else {
    const auto& ref = out.reference;
    out.ks = ks_distance(e, [&ref](double v) { return ref.cdf(v); });
  }
  return out;
}

ExtValuation ExtValuation::of(const ProjPoint& z, const BigInt& p) {
  if (z.is_infinity()) return {-1, 0};
  if (z.a() == 0) return {1, 0};
  return {0, *padic_valuation(z.value(), p)};
}

namespace {

struct EscapeWalk {
  const std::vector<ValAffine>& maps;
  const std::vector<BigRat>& probs;
  int n;
  BigRat acc = 0;  // sum over prefixes of nu * (-min valuation) / deg, a multiple of log p

  // Normalized lift has min(v(x), v(y)) = 0; returns the min after the step and the new state.
  static ExtValuation step(const ValAffine& m, const ExtValuation& u, BigRat& mu) {
    bool x_inf = u.infinite == 1, y_inf = u.infinite == -1;
    BigRat vx = (u.infinite == 0 && u.v > 0) ? u.v : BigRat(0);
    BigRat vy = (u.infinite == 0 && u.v < 0) ? BigRat(-u.v) : BigRat(0);
    bool nx_inf, ny_inf;
    BigRat nx, ny;
    if (m.sign > 0) {
      nx_inf = x_inf, nx = m.shift + m.d * vx;
      ny_inf = y_inf, ny = m.d * vy;
    } else {
      nx_inf = y_inf, nx = m.shift + m.d * vy;
      ny_inf = x_inf, ny = m.d * vx;
    }
    if (nx_inf) {
      mu = ny;
      return {1, 0};
    }
    if (ny_inf) {
      mu = nx;
      return {-1, 0};
    }
    mu = std::min(nx, ny);
    BigRat diff = nx - ny;
    diff.canonicalize();
    return {0, diff};
  }

  void walk(int k, const ExtValuation& u, const BigRat& weight, const BigInt& deg) {
    for (std::size_t i = 0; i < maps.size(); ++i) {
      BigRat mu;
      ExtValuation next = step(maps[i], u, mu);
      BigRat w = weight * probs[i];
      BigInt dd = deg * maps[i].d;
      acc -= w * mu / dd;
      if (k + 1 < n) walk(k + 1, next, w, dd);
    }
  }
};

}  // namespace

PadicEscape padic_escape(const StochasticSystem& s, const BigInt& p, const ExtValuation& z, double tol,
                         std::size_t word_cap) {
  PlaceClass c = classify_place(s, p);
  PadicEscape out;
  const double lp = std::log(p.get_d());
  // log+|z|_p = max(-v, 0) log p; the lift (1, 0) of infinity has norm 1.
  const BigRat base = z.infinite == 0 && z.v < 0 ? BigRat(-z.v) : BigRat(0);
  if (c.kind == PlaceKind::GoodReduction) {
    out.log_p_multiple = base;
    out.value = to_double(base) * lp;
    return out;
  }
  if (c.kind != PlaceKind::MonomialLike)
    throw Error(ErrorCode::UnsupportedStructure, "escape rate at p = " + p.get_str() + " needs monomial maps");
  CompensatedSum l1;
  for (std::size_t i = 0; i < s.size(); ++i)
    l1.add(to_double(s.prob(i)) * cphi_bound(s.map(i), Place::prime(p), i).certified_upper);
  const double delta = to_double(stochastic_degree(s));
  int n = 1;
  while (truncation_tail(l1.value(), delta, n) > tol) ++n;
  std::size_t words = 1;
  for (int k = 0; k < n; ++k) {
    if (words > word_cap / s.size()) throw Error(ErrorCode::WordCapExceeded, "p-adic escape needs depth " + std::to_string(n));
    words *= s.size();
  }
  EscapeWalk w{c.maps, s.probs(), n};
  w.walk(0, z, BigRat(1), BigInt(1));
  out.log_p_multiple = base + w.acc;
  out.log_p_multiple.canonicalize();
  out.value = to_double(out.log_p_multiple) * lp;
  out.tail_bound = truncation_tail(l1.value(), delta, n);
  out.depth = n;
  return out;
}

std::string valuation_cdf_csv(const PadicEquidist& r, int rows) {
  EmpiricalCDF e(r.valuations);
  double lo = std::min(e.values().front(), r.reference.v_lo());
  double hi = std::max(e.values().back(), r.reference.v_hi());
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::string out = "v,empirical_cdf,reference_cdf\n";
  char line[128];
  for (int i = 0; i < rows; ++i) {
    double v = lo + (hi - lo) * i / std::max(rows - 1, 1);
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", v, e(v), r.reference.cdf(v));
    out += line;
  }
  return out;
}

}  // namespace stochdyn
