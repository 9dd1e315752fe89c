#include "stochdyn/stochheight.hpp"

#include <cmath>
#include <numbers>

#include "stochdyn/parallel.hpp"

namespace stochdyn {

std::string_view to_string(EstimateMode m) { return m == EstimateMode::Exact ? "exact" : "monte_carlo"; }

double truncation_tail(double l1_total, double delta, int n) {
  if (l1_total == 0.0) return 0.0;
  return l1_total * std::pow(delta, 1.0 - n) / (delta - 1.0);
}

double truncation_tail(const StochasticSystem& s, int n) {
  return truncation_tail(l1_height_control_total(s).total, to_double(stochastic_degree(s)), n);
}

namespace {

std::size_t point_bits(const ProjPoint& p) {
  return std::max(mpz_sizeinbase(p.a().get_mpz_t(), 2), mpz_sizeinbase(p.b().get_mpz_t(), 2));
}

ProjPoint step(const RationalMap& phi, const ProjPoint& p, std::size_t budget) {
  ProjPoint q = phi(p);
  if (point_bits(q) > budget)
    throw Error(ErrorCode::IntegerOverflowBudget,
                "forward orbit exceeds " + std::to_string(budget) + " bits per coordinate");
  return q;
}

struct ExactWalk {
  const StochasticSystem& s;
  std::size_t budget;
  int depth;
  std::vector<double> probs;
  CompensatedSum acc;

  void visit(const ProjPoint& z, int level, double weight, double degree) {
    if (level == depth) {
      acc.add(weight * weil_height(z) / degree);
      return;
    }
    for (std::size_t i = 0; i < s.size(); ++i)
      visit(step(s.map(i), z, budget), level + 1, weight * probs[i], degree * s.map(i).degree());
  }
};

/// Upper bound on the coordinate bit size after n steps of the fastest-growing map.
int depth_within_budget(const StochasticSystem& s, const ProjPoint& alpha, std::size_t budget, int max_depth) {
  double bits = static_cast<double>(point_bits(alpha));
  double dmax = 0, cmax = 0;
  for (const auto& phi : s.maps()) {
    dmax = std::max(dmax, static_cast<double>(phi.degree()));
    for (const auto* f : {&phi.F(), &phi.G()}) {
      BigInt l1 = 0;
      for (const auto& c : f->coeffs) l1 += abs(c);
      cmax = std::max(cmax, static_cast<double>(mpz_sizeinbase(l1.get_mpz_t(), 2)));
    }
  }
  int n = 0;
  while (n < max_depth) {
    double next = dmax * bits + cmax + 1;
    if (next > static_cast<double>(budget)) break;
    bits = next;
    ++n;
  }
  return n;
}

}  // namespace

StochHeightEstimate stoch_height_exact(const StochasticSystem& s, const ProjPoint& alpha, int n,
                                       const StochHeightOptions& opts) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative depth");
  BigInt words = 1;
  for (int k = 0; k < n; ++k) {
    words *= static_cast<unsigned long>(s.size());
    if (words > BigInt(static_cast<unsigned long>(opts.word_cap)))
      throw Error(ErrorCode::WordCapExceeded, "exact enumeration exceeds the word cap");
  }
  ExactWalk walk{s, opts.bit_budget, n, {}, {}};
  for (const auto& p : s.probs()) walk.probs.push_back(to_double(p));
  walk.visit(alpha, 0, 1.0, 1.0);
  StochHeightEstimate est;
  est.value = walk.acc.value();
  est.depth = n;
  est.mode = EstimateMode::Exact;
  est.samples = static_cast<std::size_t>(words.get_ui());
  est.tail_bound = truncation_tail(s, n);
  return est;
}

StochHeightEstimate stoch_height_mc(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                    std::uint64_t seed, const StochHeightOptions& opts) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  std::vector<double> probs;
  for (const auto& p : s.probs()) probs.push_back(to_double(p));
  const CategoricalSampler pick(probs);
  const std::size_t chunks = (samples + kChunkSize - 1) / kChunkSize;
  // Per-chunk accumulators, merged in chunk order.
  std::vector<RunningMoments> parts(chunks);
  run_chunks(samples, opts.workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
    auto rng = stream_rng(seed, c);
    for (std::size_t k = begin; k < end; ++k) {
      ProjPoint z = alpha;
      double deg = 1.0;
      for (int j = 0; j < n; ++j) {
        const auto& phi = s.map(pick(rng));
        z = step(phi, z, opts.bit_budget);
        deg *= phi.degree();
      }
      parts[c].add(weil_height(z) / deg);
    }
  });
  RunningMoments all;
  for (const auto& m : parts) all.merge(m);
  StochHeightEstimate est;
  est.value = all.mean;
  est.stderr_ = all.stderr_of_mean();
  est.depth = n;
  est.mode = EstimateMode::MonteCarlo;
  est.samples = samples;
  est.tail_bound = truncation_tail(s, n);
  return est;
}

StochHeightEstimate stoch_height(const StochasticSystem& s, const ProjPoint& alpha, double tol,
                                 const StochHeightOptions& opts, std::uint64_t seed) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  const double l1 = l1_height_control_total(s).total;
  const double delta = to_double(stochastic_degree(s));
  int n = 1;
  while (n < opts.max_depth && truncation_tail(l1, delta, n) > tol) ++n;
  n = std::min(n, std::max(1, depth_within_budget(s, alpha, opts.bit_budget, opts.max_depth)));
  BigInt words = 1;
  for (int k = 0; k < n; ++k) words *= static_cast<unsigned long>(s.size());
  if (words <= BigInt(static_cast<unsigned long>(opts.word_cap))) return stoch_height_exact(s, alpha, n, opts);
  const std::size_t pilot_n = std::min<std::size_t>(opts.max_samples, 4000);
  StochHeightEstimate pilot = stoch_height_mc(s, alpha, n, pilot_n, seed, opts);
  if (pilot.stderr_ <= tol) return pilot;
  double sd = pilot.stderr_ * std::sqrt(static_cast<double>(pilot_n));
  auto need = static_cast<std::size_t>(std::ceil(1.1 * (sd / tol) * (sd / tol)));
  return stoch_height_mc(s, alpha, n, std::clamp(need, pilot_n, opts.max_samples), seed, opts);
}

double scaling_residual(const StochasticSystem& s, const ProjPoint& alpha, double tol,
                        const StochHeightOptions& opts) {
  const double part_tol = tol / (2.0 * static_cast<double>(s.size()));
  double lhs = stoch_height(s, alpha, part_tol, opts).value;
  CompensatedSum rhs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double h = stoch_height(s, s.map(i)(alpha), part_tol, opts).value;
    rhs.add(to_double(s.prob(i)) * h / s.map(i).degree());
  }
  return std::fabs(lhs - rhs.value());
}

WeilComparison weil_comparison_residual(const StochasticSystem& s, const ProjPoint& alpha, double tol,
                                        const StochHeightOptions& opts) {
  WeilComparison out;
  out.estimate = stoch_height(s, alpha, tol, opts);
  out.diff = std::fabs(out.estimate.value - weil_height(alpha));
  out.budget = 6.0 * l1_height_control_total(s).total;
  return out;
}

}  // namespace stochdyn
