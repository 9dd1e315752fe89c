#pragma once

// Stochastic heights of rational points: exact averages over all words of a
// given length, Monte Carlo over sampled words, and the identity checks that
// tie them to the Weil height.

#include <cstdint>
#include <string>

#include "stochdyn/heights.hpp"

namespace stochdyn {

enum class EstimateMode { Exact, MonteCarlo };
std::string_view to_string(EstimateMode m);

struct StochHeightEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // sampling error; zero in exact mode
  int depth = 0;
  EstimateMode mode = EstimateMode::Exact;
  std::size_t samples = 0;
  double tail_bound = 0.0;  // truncation error bound at this depth
};

struct StochHeightOptions {
  std::size_t word_cap = kDefaultWordCap;
  std::size_t bit_budget = std::size_t{1} << 20;  // per coordinate of a forward orbit point
  unsigned workers = 0;                            // 0: hardware concurrency
  std::size_t max_samples = 4'000'000;
  int max_depth = 60;
};

/// (int C_S) * delta^(1-n) / (delta - 1).
double truncation_tail(const StochasticSystem& s, int n);
double truncation_tail(double l1_total, double delta, int n);

StochHeightEstimate stoch_height_exact(const StochasticSystem& s, const ProjPoint& alpha, int n,
                                       const StochHeightOptions& opts = {});
StochHeightEstimate stoch_height_mc(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                    std::uint64_t seed, const StochHeightOptions& opts = {});
/// Chooses the depth from the tail bound and the bit budget, then enumerates
/// exactly when the word cap allows, else samples until stderr <= tol.
StochHeightEstimate stoch_height(const StochasticSystem& s, const ProjPoint& alpha, double tol,
                                 const StochHeightOptions& opts = {}, std::uint64_t seed = 0);

/// |h_S(alpha) - E_S h_S(phi(alpha)) / deg phi|.
double scaling_residual(const StochasticSystem& s, const ProjPoint& alpha, double tol,
                        const StochHeightOptions& opts = {});

struct WeilComparison {
  double diff = 0.0;    // |h_S(alpha) - h(alpha)|
  double budget = 0.0;  // 6 * int C_S
  StochHeightEstimate estimate;
};
WeilComparison weil_comparison_residual(const StochasticSystem& s, const ProjPoint& alpha, double tol = 1e-4,
                                        const StochHeightOptions& opts = {});

}  // namespace stochdyn
