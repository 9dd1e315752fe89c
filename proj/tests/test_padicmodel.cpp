#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "stochdyn/padicmodel.hpp"

using namespace stochdyn;

namespace {

StochasticSystem example_system() {
  return StochasticSystem({make_map({0, 0, 1}, {1}), make_map({0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
}
StochasticSystem single(const RationalMap& phi) { return StochasticSystem({phi}, {BigRat(1)}); }

}  // namespace

TEST_CASE("place classification") {
  auto s = example_system();
  CHECK(classify_place(s, 3).kind == PlaceKind::GoodReduction);
  auto two = classify_place(s, 2);
  CHECK(two.kind == PlaceKind::MonomialLike);
  REQUIRE(two.maps.size() == 2);
  CHECK(two.maps[0] == ValAffine{2, 0, 1});
  CHECK(two.maps[1] == ValAffine{2, 1, 1});
  StochasticSystem mixed({make_map({1, 0, 1}, {1}), make_map({0, 0, 1}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
  CHECK(classify_place(mixed, 2).kind == PlaceKind::GoodReduction);
  CHECK(classify_place(single(make_map({1, 0, 2}, {1})), 2).kind == PlaceKind::Unsupported);
  auto inv = classify_place(single(make_map({12}, {0, 0, 0, 1})), 2);
  CHECK(inv.kind == PlaceKind::MonomialLike);
  CHECK(inv.maps[0] == ValAffine{3, 2, -1});
  CHECK_THROWS_AS(classify_place(s, 4), Error);
}

TEST_CASE("valuation steps") {
  CHECK(val_backward_step({2, 0, 1}, BigRat(-1)) == BigRat(-1, 2));
  CHECK(val_backward_step({2, 1, 1}, BigRat(0)) == BigRat(-1, 2));
  CHECK(val_backward_step({2, 1, 1}, BigRat(-1)) == BigRat(-1));
  CHECK(val_backward_step({2, 1, 1}, BigRat(-1), 1) == val_backward_step({2, 1, 1}, BigRat(-1), 0));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<long> u(-50, 50);
  for (int k = 0; k < 500; ++k) {
    ValAffine m{static_cast<int>(u(rng) % 4 + 5), u(rng), k % 2 ? 1 : -1};
    BigRat v(u(rng), std::abs(u(rng)) + 1);
    v.canonicalize();
    CHECK(val_forward_step(m, val_backward_step(m, v)) == v);
    CHECK(val_backward_step(m, val_forward_step(m, v)) == v);
  }
}

TEST_CASE("stationary segment laws") {
  auto law = stationary_segment(example_system(), 2);
  CHECK(law.v_lo() == doctest::Approx(-1.0));
  CHECK(law.v_hi() == doctest::Approx(0.0));
  CHECK(law.cdf(-0.5) == doctest::Approx(0.5).epsilon(1e-9));
  for (double v : {-0.9, -0.3, -0.01}) CHECK(law.cdf(v) == doctest::Approx(v + 1.0).epsilon(1e-9));
  for (double d : law.law.density()) CHECK(d == doctest::Approx(1.0).epsilon(1e-6));

  auto gauss = stationary_segment(single(make_map({0, 0, 1}, {1})), 5);
  CHECK(gauss.is_point_mass());
  CHECK(gauss.v_lo() == 0.0);
  auto four = stationary_segment(single(make_map({0, 0, 4}, {1})), 2);
  CHECK(four.is_point_mass());
  CHECK(four.v_lo() == doctest::Approx(-2.0));

  CHECK_THROWS_AS(stationary_segment(single(make_map({1, 0, 2}, {1})), 2), Error);
  StochasticSystem mixed_deg({make_map({0, 0, 2}, {1}), make_map({0, 0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
  CHECK_THROWS_AS(stationary_segment(mixed_deg, 2), Error);
}

TEST_CASE("stationary law of an orientation-reversing walk against exact enumeration") {
  // 2/z^2 and 1/z^2 at p = 2: v -> (1 - v)/2 or -v/2.
  StochasticSystem s({make_map({2}, {0, 0, 1}), make_map({1}, {0, 0, 1})}, {BigRat(1, 3), BigRat(2, 3)});
  auto law = stationary_segment(s, 2);
  REQUIRE_FALSE(law.is_point_mass());
  // Exact law of 16 backward steps from 0 (all 2^16 paths), an independent oracle.
  std::map<BigRat, BigRat> mass{{BigRat(0), BigRat(1)}};
  auto c = classify_place(s, 2);
  for (int k = 0; k < 16; ++k) {
    std::map<BigRat, BigRat> next;
    for (const auto& [v, w] : mass)
      for (std::size_t i = 0; i < 2; ++i) next[val_backward_step(c.maps[i], v)] += w * s.prob(i);
    mass.swap(next);
  }
  double worst = 0.0, acc = 0.0;
  for (const auto& [v, w] : mass) {
    double x = to_double(v);
    worst = std::max(worst, std::fabs(law.cdf(x) - acc));
    acc += to_double(w);
    worst = std::max(worst, std::fabs(law.cdf(x) - acc));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("2-adic equidistribution") {
  auto s = example_system();
  auto r = equidist_test_padic(s, 2, ProjPoint(1, 1), 30, 100000, 3);
  CHECK(r.kind == PlaceKind::MonomialLike);
  CHECK_FALSE(r.point_mass_reference);
  CHECK(r.ks <= 0.02);
  for (double v : r.valuations) CHECK((v >= -1.0 && v <= 0.0));
  auto three = equidist_test_padic(s, 3, ProjPoint(1, 1), 30, 100000, 3);
  CHECK(three.kind == PlaceKind::GoodReduction);
  for (double v : three.valuations) CHECK(v == 0.0);
  CHECK(three.ks == 0.0);
  auto sq = equidist_test_padic(single(make_map({0, 0, 1}, {1})), 2, ProjPoint(2, 1), 30, 100000, 3);
  for (double v : sq.valuations) CHECK(std::fabs(v) <= std::ldexp(1.0, -30));
  CHECK(sq.ks == 0.0);
  CHECK_THROWS_AS(equidist_test_padic(s, 2, ProjPoint(0, 1), 30, 10, 3), Error);
  CHECK_THROWS_AS(equidist_test_padic(single(make_map({1, 0, 2}, {1})), 2, ProjPoint(1, 1), 3, 10, 3), Error);
  auto a = equidist_test_padic(s, 2, ProjPoint(3, 4), 12, 9000, 8, 1);
  auto b = equidist_test_padic(s, 2, ProjPoint(3, 4), 12, 9000, 8, 4);
  CHECK(a.valuations == b.valuations);
  CHECK(valuation_cdf_csv(a, 10).rfind("v,empirical_cdf,reference_cdf\n", 0) == 0);
}

TEST_CASE("p-adic escape rates") {
  auto s = example_system();
  const double l2 = std::log(2.0);
  auto inf = padic_escape(s, 2, ExtValuation{-1, 0}, 1e-7);
  CHECK(inf.value == doctest::Approx(-l2 / 2).epsilon(1e-6));
  CHECK(std::fabs(inf.value + l2 / 2) <= inf.tail_bound + 1e-15);  // the tail bound is sharp here
  // Units and zero: h_S(1) is carried entirely by the archimedean place.
  CHECK(std::fabs(padic_escape(s, 2, ExtValuation{0, 0}, 1e-7).value) <= 1e-7);
  CHECK(padic_escape(s, 2, ExtValuation{1, 0}, 1e-7).value == 0.0);
  // |z|_2 = 2 sits on the segment end where 2z^2 keeps |x| dominant: log 2 - (log 2)/2.
  auto two = padic_escape(s, 2, ExtValuation{0, BigRat(-1)}, 1e-7);
  CHECK(two.value == doctest::Approx(l2 - l2 / 2).epsilon(1e-6));
  // Good reduction: log+|z|_p exactly.
  auto three = padic_escape(s, 3, ExtValuation{0, BigRat(-2)});
  CHECK(three.log_p_multiple == 2);
  CHECK_THROWS_AS(padic_escape(single(make_map({1, 0, 2}, {1})), 2, ExtValuation{0, 0}), Error);
}
