#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stochdyn/levelheight.hpp"

using namespace stochdyn;

namespace {

StochasticSystem example_system() {
  return StochasticSystem({make_map({0, 0, 1}, {1}), make_map({0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
}

// Level-n atoms of the example from 1 are 2^x * (root of unity) with x = -e/2^n,
// e uniform on 0..2^n-1, and h_S(2^x zeta) = log 2 * E|x + U| for U uniform on [0,1].
double example_level_oracle(int n) {
  const long count = 1L << n;
  double acc = 0.0;
  for (long e = 0; e < count; ++e) {
    double y = -static_cast<double>(e) / static_cast<double>(count);
    acc += (y * y + (1 + y) * (1 + y)) / 2;
  }
  return acc / static_cast<double>(count) * std::log(2.0);
}

}  // namespace

TEST_CASE("example levels against the dyadic closed form") {
  auto levels = backward_orbit_heights(example_system(), ProjPoint(1, 1), 4);
  REQUIRE(levels.size() == 5);
  for (const auto& l : levels) {
    CHECK(l.words == (std::size_t{1} << l.level));
    CHECK(l.error_bound <= 1e-4);
    CHECK(std::fabs(l.value - example_level_oracle(l.level)) <= l.error_bound + 1e-9);
  }
  CHECK(example_level_oracle(1) == doctest::Approx(0.375 * std::log(2.0)));
}

TEST_CASE("a single map scales heights exactly along backward orbits") {
  StochasticSystem s({make_map({1, 0, 1}, {1})}, {BigRat(1)});
  const double h0 = stoch_height(s, ProjPoint(2, 1), 1e-7).value;
  auto levels = backward_orbit_heights(s, ProjPoint(2, 1), 3);
  for (const auto& l : levels)
    CHECK(std::fabs(l.value - h0 / std::pow(2.0, l.level)) <= l.error_bound + 2e-7);
}

TEST_CASE("heights of roots") {
  auto s = example_system();
  CHECK(root_heights_sum(s, IntPoly{-1, 0, 2}) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-4));
  CHECK(root_heights_sum(s, IntPoly{-2, 1}) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-4));
  CHECK(std::fabs(root_heights_sum(s, IntPoly{0, 1})) <= 1e-4);
  StochasticSystem bad({make_map({1, 0, 2}, {1})}, {BigRat(1)});
  CHECK_THROWS_AS(backward_orbit_heights(bad, ProjPoint(1, 1), 1), Error);
}
