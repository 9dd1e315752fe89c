#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stochdyn/exactnum.hpp"

using namespace stochdyn;

namespace {

// Reference determinant by cofactor expansion over rationals; independent of Bareiss.
BigInt cofactor_det(const std::vector<std::vector<BigInt>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  BigInt acc = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<BigInt>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<BigInt> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    BigInt term = m[0][c] * cofactor_det(minor);
    acc += (c % 2 == 0) ? term : BigInt(-term);
  }
  return acc;
}

// Resultant as lead(f)^d * prod over roots of g is awkward exactly; instead use
// Res(F,G) = a_d^d b_d^d prod (r_i - s_j) checked numerically for split forms.
HomogeneousForm random_form(std::mt19937_64& rng, int d) {
  std::uniform_int_distribution<int> u(-5, 5);
  std::vector<BigInt> c(static_cast<std::size_t>(d) + 1);
  for (auto& x : c) x = u(rng);
  return HomogeneousForm(c, d);
}

}  // namespace

TEST_CASE("normalize_point examples") {
  CHECK(normalize_point(2, 4) == ProjPoint(1, 2));
  CHECK(normalize_point(-3, -6).a() == 1);
  CHECK(normalize_point(-3, -6).b() == 2);
  CHECK(normalize_point(5, 0) == ProjPoint::infinity());
  CHECK(normalize_point(-5, 0) == ProjPoint::infinity());
  CHECK(normalize_point(0, -7) == ProjPoint(0, 1));
  CHECK_THROWS_AS(normalize_point(0, 0), Error);
  try {
    normalize_point(0, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroPoint);
  }
}

TEST_CASE("normalize_point is idempotent") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> u(-1000, 1000);
  for (int i = 0; i < 500; ++i) {
    long a = u(rng), b = u(rng);
    if (a == 0 && b == 0) continue;
    ProjPoint p = normalize_point(a, b);
    CHECK(normalize_point(p.a(), p.b()) == p);
    CHECK(gcd(p.a(), p.b()) == 1);
    CHECK((p.b() > 0 || (p.b() == 0 && p.a() == 1)));
  }
}

TEST_CASE("parse_point") {
  CHECK(parse_point("inf").is_infinity());
  CHECK(parse_point("6/4") == ProjPoint(3, 2));
  CHECK(parse_point("-2") == ProjPoint(-2, 1));
  CHECK_THROWS_AS(parse_point("1/0"), Error);
  CHECK_THROWS_AS(parse_point("abc"), Error);
}

TEST_CASE("resultant examples") {
  HomogeneousForm x2({0, 0, 1}, 2), y2({1, 0, 0}, 2), twox2({0, 0, 2}, 2);
  CHECK(resultant(x2, y2, 2) == 1);
  CHECK(resultant(twox2, y2, 2) == 4);
  HomogeneousForm x({0, 1}, 1);
  CHECK(resultant(x, x, 1) == 0);
  CHECK_THROWS_AS(resultant(x, y2, 2), Error);
  // X^2 + Y^2 against Y^2
  HomogeneousForm f({1, 0, 1}, 2);
  CHECK(resultant(f, y2, 2) == 1);
}

TEST_CASE("Bareiss determinant agrees with cofactor expansion") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(-9, 9);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    std::vector<std::vector<BigInt>> m(n, std::vector<BigInt>(n));
    for (auto& row : m)
      for (auto& x : row) x = (trial % 3 == 0 && u(rng) > 3) ? 0 : u(rng);
    CHECK(determinant(m) == cofactor_det(m));
  }
}

TEST_CASE("resultant antisymmetry (-1)^(d^2)") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 80; ++trial) {
    int d = 1 + trial % 4;
    auto f = random_form(rng, d), g = random_form(rng, d);
    BigInt sgn = (d * d) % 2 ? -1 : 1;
    CHECK(resultant(f, g, d) == sgn * resultant(g, f, d));
  }
}

TEST_CASE("resultant matches root product for split forms") {
  // F = prod (X - r_i Y), G = prod (X - s_j Y): Res = prod (r_i - s_j) up to the
  // Sylvester sign convention used here (leading coefficient in X first).
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(-6, 6);
  for (int trial = 0; trial < 40; ++trial) {
    int d = 1 + trial % 3;
    IntPoly f{1}, g{1};
    BigInt expect = 1;
    std::vector<long> r, s;
    for (int i = 0; i < d; ++i) {
      r.push_back(u(rng));
      s.push_back(u(rng));
    }
    for (long ri : r) f = f * IntPoly{-ri, 1};
    for (long sj : s) g = g * IntPoly{-sj, 1};
    for (long ri : r)
      for (long sj : s) expect *= (ri - sj);
    CHECK(resultant(HomogeneousForm::from_poly(f, d), HomogeneousForm::from_poly(g, d), d) == expect);
  }
}

TEST_CASE("padic_valuation examples and additivity") {
  CHECK(*padic_valuation(BigRat(8), BigInt(2)) == 3);
  CHECK(*padic_valuation(BigRat(3, 4), BigInt(2)) == -2);
  CHECK_FALSE(padic_valuation(BigRat(0), BigInt(5)).has_value());
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<long> u(1, 5000);
  for (int i = 0; i < 300; ++i) {
    BigRat q(u(rng), u(rng)), r(-u(rng), u(rng));
    q.canonicalize();
    r.canonicalize();
    for (long p : {2L, 3L, 5L, 7L}) {
      CHECK(*padic_valuation(BigRat(q * r), BigInt(p)) ==
            *padic_valuation(q, BigInt(p)) + *padic_valuation(r, BigInt(p)));
    }
  }
}

TEST_CASE("poly_roots_complex examples") {
  auto r1 = poly_roots_complex(IntPoly{-1, 0, 1});
  REQUIRE(r1.size() == 2);
  double lo = std::min(r1[0].root.real(), r1[1].root.real());
  CHECK(lo == doctest::Approx(-1.0));
  CHECK(r1[0].multiplicity == 1);

  auto r2 = poly_roots_complex(IntPoly{0, 0, 1});
  REQUIRE(r2.size() == 1);
  CHECK(r2[0].multiplicity == 2);
  CHECK(std::abs(r2[0].root) < 1e-14);

  auto r3 = poly_roots_complex(IntPoly{-1, 0, 2});
  REQUIRE(r3.size() == 2);
  for (const auto& z : r3) CHECK(std::fabs(std::fabs(z.root.real()) - std::sqrt(0.5)) < 1e-14);
}

TEST_CASE("multiplicities sum to degree and residuals are small") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> u(-7, 7);
  for (int trial = 0; trial < 60; ++trial) {
    // Product of random factors with repetition.
    IntPoly f{1};
    int nf = 1 + trial % 4;
    for (int k = 0; k < nf; ++k) {
      IntPoly fac{u(rng), u(rng), 1 + std::abs(u(rng))};
      if (fac.degree() < 1) continue;
      int rep = 1 + (trial + k) % 3;
      for (int j = 0; j < rep; ++j) f = f * fac;
    }
    if (f.degree() < 1) continue;
    auto roots = poly_roots_complex(f);
    int total = 0;
    for (const auto& r : roots) total += r.multiplicity;
    CHECK(total == f.degree());
    for (const auto& [part, mult] : square_free_decomposition(f)) {
      double scale = 0;
      for (const auto& c : part.coeffs()) scale = std::max(scale, std::fabs(c.get_d()));
      for (const auto& z : square_free_roots(part)) {
        double zm = std::max(1.0, std::abs(z));
        double s = scale * std::pow(zm, part.degree());
        CHECK(std::abs(part.eval_scaled(z, 0)) < 1e-10 * s);
      }
    }
  }
}

TEST_CASE("extended precision path") {
  RootOptions opts;
  opts.digits = 18;
  auto r = square_free_roots(IntPoly{-2, 0, 1}, opts);
  REQUIRE(r.size() == 2);
  CHECK(std::fabs(std::fabs(r[0].real()) - std::sqrt(2.0)) < 1e-15);
  opts.digits = 30;
  CHECK_THROWS_AS(square_free_roots(IntPoly{-2, 0, 1}, opts), Error);
}

TEST_CASE("huge coefficients stay finite") {
  BigInt big;
  mpz_ui_pow_ui(big.get_mpz_t(), 3, 2000);
  IntPoly f(std::vector<BigInt>{-2 * big, 0, big});
  auto r = square_free_roots(f);
  REQUIRE(r.size() == 2);
  for (auto z : r) CHECK(std::fabs(std::abs(z) - std::sqrt(2.0)) < 1e-14);
  BigInt mid;
  mpz_ui_pow_ui(mid.get_mpz_t(), 3, 400);
  IntPoly g(std::vector<BigInt>{-1, 0, mid});  // roots of modulus 3^-200
  auto rg = square_free_roots(g);
  for (auto z : rg) CHECK(std::fabs(std::log(std::abs(z)) + 200 * std::log(3.0)) < 1e-12 * 200);
}

TEST_CASE("square-free decomposition and rational roots") {
  IntPoly f = IntPoly{-1, 1} * IntPoly{-1, 1} * IntPoly{1, 2} * IntPoly{-2, 0, 1};
  auto sf = square_free_decomposition(f);
  REQUIRE(sf.size() == 2);
  CHECK(sf[0].second == 1);
  CHECK(sf[0].first.degree() == 3);
  CHECK(sf[1].second == 2);
  CHECK(sf[1].first == IntPoly{-1, 1});
  auto rr = rational_roots(f);
  REQUIRE(rr.size() == 2);
  CHECK(rr[0].first == BigRat(-1, 2));
  CHECK(rr[0].second == 1);
  CHECK(rr[1].first == BigRat(1));
  CHECK(rr[1].second == 2);
  CHECK(root_multiplicity(f, ProjPoint(1, 1)) == 2);
  CHECK(root_multiplicity(f, ProjPoint(-1, 2)) == 1);
  CHECK(root_multiplicity(f, ProjPoint(3, 1)) == 0);
}

TEST_CASE("rational roots with large denominators") {
  IntPoly f = IntPoly{7, -1000} * IntPoly{-3, 997} * IntPoly{1, 0, 1};
  auto rr = rational_roots(f);
  REQUIRE(rr.size() == 2);
  CHECK(rr[0].first == BigRat(3, 997));
  CHECK(rr[1].first == BigRat(7, 1000));
}

TEST_CASE("newton polygon") {
  // 2x^2 - 1 at p = 2: roots of valuation -1/2.
  auto np = newton_polygon(IntPoly{-1, 0, 2}, BigInt(2));
  REQUIRE(np.size() == 1);
  CHECK(np[0].length == 2);
  CHECK(*np[0].root_valuation == BigRat(-1, 2));
  // x(x - 4)(4x - 1): roots 0, valuation 2, valuation -2.
  auto np2 = newton_polygon(IntPoly{0, 1} * IntPoly{-4, 1} * IntPoly{-1, 4}, BigInt(2));
  REQUIRE(np2.size() == 3);
  CHECK_FALSE(np2[0].root_valuation.has_value());
  CHECK(*np2[1].root_valuation == BigRat(2));
  CHECK(*np2[2].root_valuation == BigRat(-2));
}

TEST_CASE("factorize") {
  auto f = factorize(BigInt(360));
  REQUIRE(f.factors.size() == 3);
  CHECK(f.factors[0] == std::pair<BigInt, int>(2, 3));
  CHECK(f.complete);
  auto g = factorize(BigInt("1000000000000000000000000000057") * BigInt("1000000000000000000000000000099"), 1000);
  CHECK_FALSE(g.complete);
}

TEST_CASE("log_abs and to_double for huge values") {
  BigInt big;
  mpz_ui_pow_ui(big.get_mpz_t(), 2, 5000);
  CHECK(log_abs(big) == doctest::Approx(5000 * std::log(2.0)));
  CHECK(to_double(BigRat(big + 1, big)) == doctest::Approx(1.0));
}
