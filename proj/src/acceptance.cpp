#include "stochdyn/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>

#include "stochdyn/archpotential.hpp"
#include "stochdyn/levelheight.hpp"
#include "stochdyn/padicmodel.hpp"

namespace stochdyn {

namespace {

const double kLn2 = std::numbers::ln2;

// Pinned tolerances.
constexpr double kRadialKs = 0.02;
constexpr double kAngularKs = 0.02;
constexpr double kSegmentKs = 0.02;
constexpr double kExactRel = 1e-12;
constexpr double kDecaySlack = 1e-3;
constexpr double kAtomTol = 1e-4;
constexpr double kArchDefectSlack = 1e-12;
constexpr double kGreenTol = 1e-3;
constexpr double kRadiiRel = 0.01;
constexpr double kRadiiUnit = 1e-9;
constexpr double kPullbackKs = 0.01;
constexpr double kRadialSeconds = 60.0;
constexpr double kGreenSeconds = 30.0;

StochasticSystem example_system() {
  return StochasticSystem({make_map({0, 0, 1}, {1}), make_map({0, 0, 2}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ProjPoint random_point(std::mt19937_64& rng, long bound) {
  std::uniform_int_distribution<long> u(-bound, bound);
  while (true) {
    long a = u(rng), b = u(rng);
    if (b == 0) continue;
    return ProjPoint(a, b);
  }
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int max_atoms, long bound) {
  std::uniform_int_distribution<int> na(1, max_atoms), w(1, 12);
  const int k = na(rng);
  std::vector<ProjPoint> pts;
  std::vector<BigRat> ws;
  BigRat tot = 0;
  for (int i = 0; i < k; ++i) {
    pts.push_back(random_point(rng, bound));
    ws.emplace_back(w(rng));
    tot += ws.back();
  }
  for (auto& x : ws) x /= tot;
  return DiscreteMeasure(pts, ws);
}

using Check = std::function<void(CriterionResult&, const AcceptanceOptions&)>;

void radial_law(CriterionResult& r, const AcceptanceOptions& o) {
  auto t0 = std::chrono::steady_clock::now();
  ArchEquidistOptions eo;
  eo.workers = o.workers;
  auto res = equidist_test_arch(example_system(), ProjPoint(1, 1), 30, 100000, o.seed, eo);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = res.closed_form_reference && res.ks_radial <= kRadialKs && secs < kRadialSeconds;
  r.detail = fmt("KS = %.5f vs 1 + log2(r)", res.ks_radial) + fmt(" (limit 0.02), run %.1f s", secs);
}

void angular(CriterionResult& r, const AcceptanceOptions& o) {
  ArchEquidistOptions eo;
  eo.workers = o.workers;
  auto res = equidist_test_arch(example_system(), ProjPoint(1, 1), 30, 100000, o.seed, eo);
  r.pass = res.ks_angular <= kAngularKs;
  r.detail = fmt("KS = %.5f vs uniform angle (limit 0.02)", res.ks_angular);
}

void segment(CriterionResult& r, const AcceptanceOptions& o) {
  auto res = equidist_test_padic(example_system(), 2, ProjPoint(1, 1), 30, 100000, o.seed, o.workers);
  r.pass = res.kind == PlaceKind::MonomialLike && !res.point_mass_reference && res.ks <= kSegmentKs;
  r.detail = fmt("KS = %.5f vs uniform on [-1, 0] (limit 0.02)", res.ks);
}

void exact_heights(CriterionResult& r, const AcceptanceOptions&) {
  auto s = example_system();
  const int n = 12;
  // Brute force over all 2^12 words on exponents: alpha = 2^x, z^2: x -> 2x, 2z^2: x -> 2x + 1.
  auto brute = [&](long x0) {
    double acc = 0.0;
    for (long word = 0; word < (1L << n); ++word) {
      long x = x0;
      for (int k = 0; k < n; ++k) x = 2 * x + ((word >> k) & 1);
      acc += std::fabs(static_cast<double>(x)) * kLn2 / std::ldexp(1.0, n);
    }
    return acc / std::ldexp(1.0, n);
  };
  const double want1 = (1 - std::ldexp(1.0, -12)) * kLn2 / 2;
  const double want2 = (1.5 - std::ldexp(1.0, -13)) * kLn2;
  const double got1 = stoch_height_exact(s, ProjPoint(1, 1), n).value;
  const double got2 = stoch_height_exact(s, ProjPoint(2, 1), n).value;
  const double e1 = std::fabs(got1 - want1) / want1, e2 = std::fabs(got2 - want2) / want2;
  const double b1 = std::fabs(brute(0) - want1) / want1, b2 = std::fabs(brute(1) - want2) / want2;
  r.pass = e1 <= kExactRel && e2 <= kExactRel && b1 <= kExactRel && b2 <= kExactRel;
  r.detail = fmt("rel err alpha=1: %.2e", e1) + fmt(", alpha=2: %.2e", e2) +
             fmt("; brute-force oracle rel err %.2e", std::max(b1, b2));
}

void decay(CriterionResult& r, const AcceptanceOptions&) {
  LevelHeightOptions lo;
  lo.tol = kAtomTol;
  auto levels = backward_orbit_heights(example_system(), ProjPoint(1, 1), 6, lo);
  r.pass = true;
  std::string worst;
  for (const auto& l : levels) {
    const double bound = kLn2 / 2 * std::ldexp(1.0, -l.level) + kDecaySlack;
    const bool ok = l.value <= bound && l.error_bound <= kAtomTol;
    if (!ok && r.pass) worst = "first violation at n = " + std::to_string(l.level);
    r.pass = r.pass && ok;
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(l.level) + fmt(" h=%.5f", l.value) +
                fmt(" bound=%.5f", bound);
  }
  if (!r.pass) r.detail += "; " + worst;
}

void product_formula(CriterionResult& r, const AcceptanceOptions& o) {
  std::mt19937_64 rng(o.seed ^ 6);
  int zero = 0;
  for (int t = 0; t < 100; ++t) {
    auto g = random_measure(rng, 5, 1000), h = random_measure(rng, 5, 1000);
    if (product_formula_sum(g, h).is_zero()) ++zero;
  }
  r.pass = zero == 100;
  r.detail = std::to_string(zero) + "/100 sums exactly zero";
}

void linearity(CriterionResult& r, const AcceptanceOptions& o) {
  std::mt19937_64 rng(o.seed ^ 7);
  std::uniform_int_distribution<int> w(1, 9);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<DiscreteMeasure> parts;
    std::vector<BigRat> ts;
    BigRat tot = 0;
    for (int k = 0; k < 1 + t % 4; ++k) {
      parts.push_back(random_measure(rng, 5, 30));
      ts.emplace_back(w(rng));
      tot += ts.back();
    }
    for (auto& x : ts) x /= tot;
    LogSum diff = measure_height_exact(DiscreteMeasure::mixture(parts, ts));
    for (std::size_t k = 0; k < parts.size(); ++k) diff -= measure_height_exact(parts[k]).scaled(ts[k]);
    if (diff.is_zero()) ++exact;
  }
  r.pass = exact == 100;
  r.detail = std::to_string(exact) + "/100 combinations exactly linear";
}

void pairing_bounds(CriterionResult& r, const AcceptanceOptions& o) {
  std::mt19937_64 rng(o.seed ^ 8);
  double arch_min = INFINITY;
  BigRat fin_min = 1000;
  for (int t = 0; t < 1000; ++t) {
    auto m = random_measure(rng, 6, 12);
    arch_min = std::min(arch_min, standard_energy_defect(m, Place::arch()));
    for (long p : {2L, 3L, 5L, 7L, 11L}) fin_min = std::min(fin_min, standard_energy_defect_padic(m, p));
  }
  r.pass = arch_min >= -kLn2 + kArchDefectSlack && fin_min >= 0;
  r.detail = fmt("min arch defect %.6f", arch_min) + fmt(" (floor %.6f)", -kLn2 + kArchDefectSlack) +
             ", min finite defect " + fin_min.get_str() + " log p";
}

void exceptionality(CriterionResult& r, const AcceptanceOptions&) {
  auto ex = exceptional_set(example_system());
  const bool set_ok = ex.points == std::vector<ProjPoint>{ProjPoint(0, 1), ProjPoint::infinity()} &&
                      ex.irrational_candidates.empty();
  StochasticSystem remark({make_map({1}, {0, 0, 1}), make_map({1, 0, 1}, {1})}, {BigRat(1, 2), BigRat(1, 2)});
  const ProjPoint inf = ProjPoint::infinity();
  int total = 0, words = 0;
  for_each_word(remark, 2, 16, [&](const WordView& w) {
    ++words;
    if (BigInt(word_ramification(remark, w.indices, inf)) == w.degree) ++total;
  });
  const bool not_exc = !is_exceptional_system(remark, inf);
  r.pass = set_ok && words == 4 && total == 4 && not_exc;
  std::string pts;
  for (const auto& p : ex.points) pts += (pts.empty() ? "" : ", ") + p.str();
  r.detail = "E_S = {" + pts + "}; depth-2 words totally ramified at inf: " + std::to_string(total) + "/" +
             std::to_string(words) + "; exceptional(inf) = " + (not_exc ? "false" : "true");
}

void green_values(CriterionResult& r, const AcceptanceOptions&) {
  auto t0 = std::chrono::steady_clock::now();
  auto s = example_system();
  GreenConfig cfg;
  cfg.tol = kGreenTol / 10;
  double worst = std::fabs(gS_eval(s, ComplexVal(0.0), cfg).value + kLn2 / 2);
  for (double m : {1.0, 2.0, 10.0}) worst = std::max(worst, std::fabs(gS_eval(s, std::polar(m, 0.7), cfg).value));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = worst <= kGreenTol && secs < kGreenSeconds;
  r.detail = fmt("max deviation %.2e (limit 1e-3)", worst) + fmt(", run %.2f s", secs);
}

void radii_check(CriterionResult& r, const AcceptanceOptions& o) {
  RadiiOptions ro;
  ro.green.seed = o.seed;
  ro.green.workers = o.workers;
  auto ex = radii(example_system(), ro);
  auto sq = radii(StochasticSystem({make_map({0, 0, 1}, {1})}, {BigRat(1)}), ro);
  const double want_in = std::pow(2.0, -1.0 / 6), want_out = std::pow(2.0, 1.0 / 3);
  const double e_in = std::fabs(ex.r_in / want_in - 1), e_out = std::fabs(ex.r_out / want_out - 1);
  const double e_sq = std::max(std::fabs(sq.r_in - 1), std::fabs(sq.r_out - 1));
  r.pass = e_in <= kRadiiRel && e_out <= kRadiiRel && e_sq <= kRadiiUnit;
  r.detail = fmt("example (%.5f,", ex.r_in) + fmt(" %.5f)", ex.r_out) + fmt(" rel err %.2e", std::max(e_in, e_out)) +
             fmt("; z^2 deviation %.1e", e_sq);
}

void weil(CriterionResult& r, const AcceptanceOptions& o) {
  auto s = example_system();
  std::mt19937_64 rng(o.seed ^ 12);
  std::uniform_int_distribution<long> num(-10, 10), den(1, 10);
  double worst = 0.0, budget = 0.0;
  int ok = 0;
  for (int t = 0; t < 50; ++t) {
    ProjPoint a(num(rng), den(rng));
    auto w = weil_comparison_residual(s, a);
    budget = w.budget;
    worst = std::max(worst, w.diff);
    if (w.diff <= w.budget) ++ok;
  }
  r.pass = ok == 50 && std::fabs(budget - 3 * kLn2) <= 1e-12;
  r.detail = std::to_string(ok) + "/50 within budget" + fmt(" %.5f", budget) + fmt(", max |h_S - h| = %.5f", worst);
}

void well_distributed(CriterionResult& r, const AcceptanceOptions&) {
  auto tree = backward_tree(example_system(), ProjPoint(1, 1), 6);
  bool monotone = true;
  std::string seq;
  for (int k = 0; k <= 6; ++k) {
    if (k > 0 && well_distributed_stat(tree, k) > well_distributed_stat(tree, k - 1)) monotone = false;
    seq += (seq.empty() ? "" : ", ") + well_distributed_stat(tree, k).get_str();
  }
  const BigRat w0 = well_distributed_stat(tree, 0);
  bool decays = true;
  for (int k = 0; k <= 2; ++k) {
    BigRat cap = w0 / BigRat(BigInt(1) << (2 * k));
    if (well_distributed_stat(tree, 3 * k) > cap) decays = false;
  }
  r.pass = monotone && decays;
  r.detail = "W = [" + seq + "]";
}

void pullback(CriterionResult& r, const AcceptanceOptions& o) {
  double res = pullback_invariance_residual(example_system(), 30, 100000, o.seed, o.workers);
  r.pass = res <= kPullbackKs;
  r.detail = fmt("KS(depth 30, depth 31) = %.5f (limit 0.01)", res);
}

struct Entry {
  const char* title;
  Check run;
};

const Entry kCriteria[kCriteriaCount] = {
    {"example radial law", radial_law},
    {"angular uniformity", angular},
    {"2-adic segment law", segment},
    {"exact stochastic heights", exact_heights},
    {"geometric height decay of backward orbits", decay},
    {"product formula", product_formula},
    {"height linearity", linearity},
    {"pairing lower bounds", pairing_bounds},
    {"exceptionality", exceptionality},
    {"Green's function spot values", green_values},
    {"radii", radii_check},
    {"Weil comparison", weil},
    {"well-distributedness", well_distributed},
    {"pullback invariance", pullback},
};

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opts) {
  if (id < 1 || id > kCriteriaCount) throw Error(ErrorCode::InvalidArgument, "no criterion " + std::to_string(id));
  const Entry& e = kCriteria[id - 1];
  CriterionResult r;
  r.id = id;
  r.title = e.title;
  auto t0 = std::chrono::steady_clock::now();
  try {
    e.run(r, opts);
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("error: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriteriaCount; ++id) out.push_back(run_criterion(id, opts));
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "[%s] %02d ", r.pass ? "PASS" : "FAIL", r.id);
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.2f s)", r.seconds);
  return head + r.title + ": " + r.detail + tail;
}

}  // namespace stochdyn
