#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stochdyn/stochheight.hpp"

using namespace stochdyn;

namespace {

const double kLog2 = std::log(2.0);

StochasticSystem example_system() {
  return StochasticSystem({make_map({0, 0, 1}, {1}), make_map({0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
}

// Under z^2 and 2z^2 the point 2^c maps to 2^(2c) or 2^(2c+1). Enumerate all
// 2^n bit strings and average c_n / 2^n.
double exponent_oracle(long c0, int n) {
  double acc = 0;
  const unsigned long words = 1UL << n;
  for (unsigned long w = 0; w < words; ++w) {
    long double c = c0;
    for (int k = 0; k < n; ++k) c = 2 * c + ((w >> k) & 1UL);
    acc += static_cast<double>(c / std::ldexp(1.0L, n));
  }
  return acc / static_cast<double>(words) * kLog2;
}

}  // namespace

TEST_CASE("exponent oracle matches the closed form") {
  for (int n : {1, 4, 12}) {
    CHECK(exponent_oracle(0, n) == doctest::Approx((1 - std::ldexp(1.0, -n)) * kLog2 / 2).epsilon(1e-14));
    CHECK(exponent_oracle(1, n) == doctest::Approx((1.5 - std::ldexp(1.0, -n - 1)) * kLog2).epsilon(1e-14));
  }
}

TEST_CASE("exact stochastic heights of the example") {
  auto s = example_system();
  for (int n : {1, 2, 5, 12}) {
    auto e1 = stoch_height_exact(s, ProjPoint(1, 1), n);
    CHECK(e1.mode == EstimateMode::Exact);
    CHECK(e1.stderr_ == 0.0);
    CHECK(std::fabs(e1.value / exponent_oracle(0, n) - 1) < 1e-12);
    auto e2 = stoch_height_exact(s, ProjPoint(2, 1), n);
    CHECK(std::fabs(e2.value / exponent_oracle(1, n) - 1) < 1e-12);
    CHECK(stoch_height_exact(s, ProjPoint(0, 1), n).value == 0.0);
  }
  auto e = stoch_height_exact(s, ProjPoint(1, 1), 12);
  CHECK(e.tail_bound == doctest::Approx(0.5 * kLog2 * std::ldexp(1.0, -11)));
  CHECK(e.samples == 4096);
}

TEST_CASE("exact refinement is geometric and values are nonnegative") {
  std::vector<StochasticSystem> systems{example_system()};
  systems.emplace_back(std::vector<RationalMap>{make_map({1, 0, 1}, {1}), make_map({0, 0, 0, 3}, {2})},
                       std::vector<BigRat>{BigRat(1, 3), BigRat(2, 3)});
  systems.emplace_back(std::vector<RationalMap>{make_map({1}, {0, 0, 2}), make_map({-1, 0, 1}, {3})},
                       std::vector<BigRat>{BigRat(1, 2), BigRat(1, 2)});
  for (const auto& s : systems) {
    const double l1 = l1_height_control_total(s).total;
    const double delta = to_double(stochastic_degree(s));
    for (const auto& a : {ProjPoint(1, 1), ProjPoint(2, 3), ProjPoint(-5, 2)}) {
      double prev = stoch_height_exact(s, a, 1).value;
      for (int n = 1; n <= 6; ++n) {
        double next = stoch_height_exact(s, a, n + 1).value;
        CHECK(std::fabs(next - prev) <= l1 * std::pow(delta, 1.0 - n) + 1e-12);
        CHECK(next >= 0.0);
        prev = next;
      }
    }
  }
}

TEST_CASE("Monte Carlo heights") {
  StochasticSystem sq({make_map({0, 0, 1}, {1})}, {BigRat(1)});
  auto z = stoch_height_mc(sq, ProjPoint(2, 1), 5, 1000, 3);
  CHECK(z.value == doctest::Approx(kLog2).epsilon(1e-15));
  CHECK(z.stderr_ == 0.0);

  auto s = example_system();
  auto mc = stoch_height_mc(s, ProjPoint(1, 1), 12, 10000, 0);
  double exact = (1 - std::ldexp(1.0, -12)) * kLog2 / 2;
  CHECK(mc.stderr_ > 0.0);
  CHECK(std::fabs(mc.value - exact) <= 4 * mc.stderr_);
  auto zero = stoch_height_mc(s, ProjPoint(0, 1), 8, 500, 1);
  CHECK(zero.value == 0.0);
  CHECK(zero.stderr_ == 0.0);
}

TEST_CASE("Monte Carlo agrees with enumeration in most seeded trials") {
  auto s = example_system();
  int within = 0, trials = 0;
  for (int n = 1; n <= 6; ++n) {
    double exact = stoch_height_exact(s, ProjPoint(5, 1), n).value;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto mc = stoch_height_mc(s, ProjPoint(5, 1), n, 2000, seed * 7919 + static_cast<std::uint64_t>(n));
      ++trials;
      if (std::fabs(mc.value - exact) <= 4 * mc.stderr_) ++within;
    }
  }
  CHECK(static_cast<double>(within) >= 0.99 * trials);
}

TEST_CASE("Monte Carlo is reproducible and independent of worker count") {
  auto s = example_system();
  StochHeightOptions one, four;
  one.workers = 1;
  four.workers = 4;
  auto a = stoch_height_mc(s, ProjPoint(1, 1), 9, 20000, 42, one);
  auto b = stoch_height_mc(s, ProjPoint(1, 1), 9, 20000, 42, four);
  auto c = stoch_height_mc(s, ProjPoint(1, 1), 9, 20000, 43, one);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  CHECK(a.value != c.value);
}

TEST_CASE("tolerance driven heights") {
  auto s = example_system();
  auto h1 = stoch_height(s, ProjPoint(1, 1), 1e-3);
  CHECK(std::fabs(h1.value - kLog2 / 2) <= 1e-3);
  CHECK(h1.tail_bound <= 1e-3);
  auto h2 = stoch_height(s, ProjPoint(2, 1), 1e-3);
  CHECK(std::fabs(h2.value - 1.5 * kLog2) <= 1e-3);
  StochasticSystem sq({make_map({0, 0, 1}, {1})}, {BigRat(1)});
  auto h3 = stoch_height(sq, ProjPoint(3, 2), 1e-9);
  CHECK(h3.depth == 1);
  CHECK(h3.value == doctest::Approx(std::log(3.0)).epsilon(1e-15));

  // Force sampling with a tiny word cap.
  StochHeightOptions opts;
  opts.word_cap = 16;
  auto mc = stoch_height(s, ProjPoint(1, 1), 5e-3, opts, 9);
  CHECK(mc.mode == EstimateMode::MonteCarlo);
  CHECK(mc.stderr_ <= 5e-3);
  CHECK(std::fabs(mc.value - kLog2 / 2) <= mc.tail_bound + 4 * mc.stderr_);
}

TEST_CASE("scaling identity and Weil comparison") {
  auto s = example_system();
  CHECK(scaling_residual(s, ProjPoint(1, 1), 1e-3) <= 2e-3);
  CHECK(scaling_residual(s, ProjPoint(0, 1), 1e-3) == 0.0);
  StochasticSystem sq({make_map({0, 0, 1}, {1})}, {BigRat(1)});
  CHECK(scaling_residual(sq, ProjPoint(3, 2), 1e-6) <= 2e-6);

  auto w1 = weil_comparison_residual(s, ProjPoint(1, 1));
  CHECK(w1.diff == doctest::Approx(kLog2 / 2).epsilon(1e-3));
  CHECK(w1.budget == doctest::Approx(3 * kLog2));
  auto w2 = weil_comparison_residual(s, ProjPoint(2, 1));
  CHECK(w2.diff == doctest::Approx(kLog2 / 2).epsilon(1e-3));
  auto w3 = weil_comparison_residual(sq, ProjPoint(7, 3));
  CHECK(w3.diff < 1e-12);
  CHECK(w3.budget == 0.0);
}

TEST_CASE("bit budget and word cap errors") {
  auto s = example_system();
  StochHeightOptions tight;
  tight.bit_budget = 64;
  CHECK_THROWS_AS(stoch_height_exact(s, ProjPoint(3, 1), 8, tight), Error);
  StochHeightOptions cap;
  cap.word_cap = 100;
  CHECK_THROWS_AS(stoch_height_exact(s, ProjPoint(3, 1), 8, cap), Error);
  // Depth selection respects the bit budget instead of failing.
  auto h = stoch_height(s, ProjPoint(3, 1), 1e-6, tight);
  CHECK(h.depth < 20);
  CHECK(h.tail_bound > 1e-6);
}
