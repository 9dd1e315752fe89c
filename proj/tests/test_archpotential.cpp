#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stochdyn/archpotential.hpp"

using namespace stochdyn;

namespace {

const double kLn2 = std::numbers::ln2;

StochasticSystem example_system() {
  return StochasticSystem({make_map({0, 0, 1}, {1}), make_map({0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
}
StochasticSystem squaring() { return StochasticSystem({make_map({0, 0, 1}, {1})}, {BigRat(1)}); }
StochasticSystem doubled_square() { return StochasticSystem({make_map({0, 0, 2}, {1})}, {BigRat(1)}); }

// Potential of the radial law dr/(r log 2) on [1/2, 1], integrated by hand.
double example_green(double r) {
  if (r >= 1) return 0.0;
  if (r <= 0.5) return -kLn2 / 2;
  double l = std::log(r);
  return l + l * l / (2 * kLn2);
}

}  // namespace

TEST_CASE("one-step Green's function") {
  CHECK(std::fabs(g1_eval(squaring(), ComplexVal(0.3, 4.0))) < 1e-15);
  for (double r : {1.0, 2.0, 1e5}) CHECK(g1_eval(example_system(), ComplexVal(0.0, r)) == doctest::Approx(kLn2 / 4));
  CHECK(g1_eval(example_system(), ComplexVal(0.0)) == 0.0);
  CHECK(g1_eval(example_system(), LogPolar{std::numeric_limits<double>::infinity(), 0}) == doctest::Approx(kLn2 / 4));
}

TEST_CASE("Green's function of the example against the radial potential") {
  auto s = example_system();
  CHECK(gS_eval(s, ComplexVal(0.0)).value == doctest::Approx(-kLn2 / 2).epsilon(1e-4));
  for (double r : {1.0, 2.0, 10.0}) CHECK(std::fabs(gS_eval(s, ComplexVal(r, 0)).value) < 1e-4);
  CHECK(std::fabs(gS_eval(s, LogPolar{std::numeric_limits<double>::infinity(), 0}).value) < 1e-15);
  for (double r : {0.3, 0.5, 0.6, 0.7071, 0.8, 0.95}) {
    auto g = gS_eval(s, std::polar(r, 1.234));
    CHECK(g.mode == EstimateMode::Exact);
    CHECK(std::fabs(g.value - example_green(r)) <= g.tail_bound + 1e-9);
    CHECK(g.tail_bound <= 1e-4 / 2);
  }
  CHECK(potential_eval(s, ComplexVal(0.0)).value == doctest::Approx(-kLn2 / 2).epsilon(1e-4));
  CHECK(potential_eval(s, ComplexVal(2.0)).value == doctest::Approx(kLn2).epsilon(1e-4));
  CHECK(potential_eval(squaring(), ComplexVal(3.0, 4.0)).value == doctest::Approx(std::log(5.0)));
  CHECK(potential_eval(squaring(), ComplexVal(0.3, 0.4)).value == doctest::Approx(0.0));
}

TEST_CASE("Green's function of 2z^2 in closed form") {
  auto s = doubled_square();
  for (double r : {0.1, 0.5, 0.75, 1.0, 3.0}) {
    double expect = std::log(std::max(2 * r, 1.0)) - std::max(std::log(r), 0.0) - kLn2;
    auto g = gS_eval(s, std::polar(r, 2.0));
    CHECK(std::fabs(g.value - expect) <= g.tail_bound);
  }
}

TEST_CASE("Green's function of z^2 + 1 against direct escape rate") {
  StochasticSystem s({make_map({1, 0, 1}, {1})}, {BigRat(1)});
  for (ComplexVal z0 : {ComplexVal(0.0), ComplexVal(0.2, 0.3), ComplexVal(-0.5, 1.5)}) {
    // Iterate until far out, then the escape rate is 2^-n log|z_n| up to O(|z_n|^-2 2^-n).
    std::complex<long double> z(z0.real(), z0.imag());
    long double scale = 1.0L;
    int n = 0;
    while (std::abs(z) < 1e30L && n < 60) {
      z = z * z + 1.0L;
      scale /= 2;
      ++n;
    }
    double escape = static_cast<double>(scale * std::log(std::abs(z)));
    double expect = escape - std::max(0.0, std::log(std::abs(z0)));
    CHECK(gS_eval(s, z0, GreenConfig{0, 0, 1e-8}).value == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("bounds and geometric truncation") {
  auto s = example_system();
  StochasticSystem mixed({make_map({1, 0, 1}, {1}), make_map({0, 0, 3}, {1, 0, 0, 1}), make_map({2, 0, -1}, {0, 0, 1})},
                         {BigRat(1, 3), BigRat(1, 2), BigRat(1, 6)});
  std::mt19937_64 rng(3);
  for (const auto* sys : {&s, &mixed}) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < sys->size(); ++i)
      l1 += to_double(sys->prob(i)) * cphi_bound(sys->map(i), Place::arch()).certified_upper;
    double delta = to_double(stochastic_degree(*sys));
    for (int k = 0; k < 20; ++k) {
      LogPolar z{std::uniform_real_distribution<double>(-3, 3)(rng), std::uniform_real_distribution<double>(0, 6)(rng)};
      auto g = gS_eval(*sys, z, GreenConfig{0, 0, 1e-3});
      CHECK(std::fabs(g.value) <= 2 * l1 + g.tail_bound + 4 * g.stderr_);
      double prev = gS_eval(*sys, z, GreenConfig{1}).value;
      for (int n = 2; n <= 8; ++n) {
        double cur = gS_eval(*sys, z, GreenConfig{n}).value;
        CHECK(std::fabs(cur - prev) <= 2 * l1 / std::pow(delta, n - 1) + 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("Monte Carlo over words agrees with enumeration") {
  StochasticSystem s({make_map({1, 0, 1}, {1}), make_map({0, 0, 3}, {1, 0, 0, 1}), make_map({2, 0, -1}, {0, 0, 1})},
                     {BigRat(1, 3), BigRat(1, 2), BigRat(1, 6)});
  for (ComplexVal z : {ComplexVal(0.4, 0.1), ComplexVal(-2.0, 1.0)}) {
    auto exact = gS_eval(s, z, GreenConfig{9});
    auto mc = gS_eval(s, z, GreenConfig{9, 200000, 1e-4, 15, 7});
    CHECK(mc.mode == EstimateMode::MonteCarlo);
    CHECK(exact.mode == EstimateMode::Exact);
    CHECK(std::fabs(mc.value - exact.value) <= 4 * mc.stderr_ + 1e-12);
    auto mc1 = gS_eval(s, z, GreenConfig{9, 50000, 1e-4, 15, 7, 1});
    auto mc3 = gS_eval(s, z, GreenConfig{9, 50000, 1e-4, 15, 7, 3});
    CHECK(mc1.value == mc3.value);
  }
  CHECK_THROWS_AS(gS_eval(s, ComplexVal(1.0), GreenConfig{0, 0, 1e-13}), Error);
  CHECK_THROWS_AS(gS_eval(s, ComplexVal(1.0), GreenConfig{0, 0, 1e-4, 18}), Error);
}

TEST_CASE("KS helpers") {
  std::vector<double> q;
  for (int i = 1; i <= 100; ++i) q.push_back((i - 0.5) / 100);
  EmpiricalCDF e(q);
  CHECK(ks_distance(e, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.005));
  CHECK(ks_two_sample(e, e) == 0.0);
  EmpiricalCDF half(std::vector<double>{0, 0, 1, 1});
  CHECK(ks_two_sample(half, EmpiricalCDF(std::vector<double>{0})) == doctest::Approx(0.5));
  auto step = [](double x) { return x >= 0 ? 1.0 : 0.0; };
  auto step_left = [](double x) { return x > 0 ? 1.0 : 0.0; };
  CHECK(ks_distance(EmpiricalCDF(std::vector<double>{0, 0, 0}), step, step_left) == 0.0);
  CHECK(point_mass_distance(EmpiricalCDF(std::vector<double>{0, 0.05, 0.5, 2}), 0.0, 0.1) == 0.5);
}

TEST_CASE("canonical sampling") {
  auto circle = canonical_sample(squaring(), 7, 2000, 4);
  for (const auto& p : circle.points) CHECK(std::fabs(p.log_abs) < 1e-12);
  CHECK(ks_distance(EmpiricalCDF(unit_angles(circle)), [](double u) { return std::clamp(u, 0.0, 1.0); }) < 0.05);
  auto s = example_system();
  for (const auto& p : canonical_sample(s, 0, 100, 1).points) CHECK(p.log_abs == 0.0);
  auto deep = canonical_sample(s, 30, 100000, 9);
  auto radial = [](double lr) { return std::clamp(1.0 + lr / kLn2, 0.0, 1.0); };
  CHECK(ks_distance(EmpiricalCDF(log_radii(deep)), radial) <= 0.02);
}

TEST_CASE("pullback invariance residual") {
  CHECK(pullback_invariance_residual(squaring(), 5, 10000, 2) <= 2 * 1.36 * std::sqrt(2.0 / 10000));
  auto s = example_system();
  CHECK(pullback_invariance_residual(s, 30, 100000, 11) <= 0.01);
  CHECK(pullback_invariance_residual(s, 0, 10000, 11) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("regularized energies") {
  CHECK(regularize({{ComplexVal(2.0, 1.0)}, {1.0}}, 0.01).total == doctest::Approx(-std::log(0.01)).epsilon(1e-10));
  CHECK(std::fabs(regularize({{ComplexVal(2.0, 1.0)}, {1.0}}, 1.0).total) < 1e-12);
  auto two = regularize({{ComplexVal(0.0), ComplexVal(3.0)}, {0.5, 0.5}}, 0.1);
  CHECK(two.total == doctest::Approx(0.25 * -std::log(0.1) * 2 + 2 * 0.25 * -std::log(3.0)).epsilon(1e-10));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 300; ++k) {
    ComplexVal d(u(rng), u(rng));
    double eps = std::uniform_real_distribution<double>(0.01, 0.2)(rng);
    double e = circle_mutual_energy(d, eps);
    CHECK(-e >= std::max(std::log(std::abs(d)), std::log(eps)) - 1e-10);
    if (std::abs(d) >= 2 * eps) CHECK(e == doctest::Approx(-std::log(std::abs(d))).epsilon(1e-10));
  }
  CHECK(circle_mutual_energy(0.0, 0.3) == doctest::Approx(-std::log(0.3)));
  CHECK_THROWS_AS(regularize({{ComplexVal(0.0)}, {1.0}}, 0.0), Error);
}

TEST_CASE("closed-form radial law of monomial systems") {
  auto law = monomial_radial_law(example_system());
  REQUIRE(law);
  CHECK(law->lo() == doctest::Approx(-kLn2));
  CHECK(law->hi() == doctest::Approx(0.0));
  for (double t : {0.1, 0.25, 0.5, 0.9}) CHECK(law->cdf(-kLn2 * (1 - t)) == doctest::Approx(t).epsilon(1e-9));
  auto point = monomial_radial_law(squaring());
  REQUIRE(point);
  CHECK(point->is_point_mass());
  CHECK_FALSE(monomial_radial_law(StochasticSystem({make_map({1, 0, 1}, {1})}, {BigRat(1)})));
}

TEST_CASE("radii") {
  auto sq = radii(squaring());
  CHECK(sq.r_in == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sq.r_out == doctest::Approx(1.0).epsilon(1e-9));
  auto ex = radii(example_system());
  CHECK(ex.self_energy == doctest::Approx(kLn2 / 3).epsilon(0.02));
  CHECK(ex.r_in == doctest::Approx(std::pow(2.0, -1.0 / 6)).epsilon(0.01));
  CHECK(ex.r_out == doctest::Approx(std::pow(2.0, 1.0 / 3)).epsilon(0.01));
  auto dbl = radii(doubled_square());
  CHECK(dbl.r_in == doctest::Approx(std::pow(2.0, -0.5)).epsilon(0.01));
  CHECK(dbl.r_out == doctest::Approx(std::pow(2.0, 0.5)).epsilon(0.01));
}

TEST_CASE("archimedean equidistribution") {
  auto s = example_system();
  auto r = equidist_test_arch(s, ProjPoint(1, 1), 30, 100000, 5);
  CHECK(r.closed_form_reference);
  CHECK(r.ks_radial <= 0.02);
  CHECK(r.ks_angular <= 0.02);
  CHECK(r.potential_residual <= 0.01);
  std::string csv = radial_cdf_csv(r, 50);
  CHECK(csv.rfind("r,empirical_cdf,reference_cdf\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK_THROWS_AS(equidist_test_arch(s, ProjPoint(0, 1), 5, 100, 1), Error);
  CHECK_THROWS_AS(equidist_test_arch(s, ProjPoint::infinity(), 5, 100, 1), Error);
  auto sq = equidist_test_arch(squaring(), ProjPoint(3, 2), 20, 100000, 5);
  CHECK(sq.point_mass_reference);
  CHECK(sq.ks_radial == 0.0);
  // No closed form: reference is a larger canonical sample.
  StochasticSystem poly({make_map({-1, 0, 1}, {1}), make_map({1, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
  auto pr = equidist_test_arch(poly, ProjPoint(1, 1), 25, 20000, 5);
  CHECK_FALSE(pr.closed_form_reference);
  CHECK(pr.ks_radial <= 0.04);
}
