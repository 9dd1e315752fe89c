#pragma once

// Stochastic heights of backward orbit measures. The level-n measure is a
// sum over words of the roots of b*F_gamma - a*G_gamma; its height is the
// sum over places of the escape rates at those roots, which only needs the
// complex roots (archimedean part), the leading coefficient (good primes)
// and the Newton polygon at each bad prime.

#include <vector>

#include "stochdyn/archpotential.hpp"
#include "stochdyn/padicmodel.hpp"

namespace stochdyn {

struct LevelHeight {
  int level = 0;
  double value = 0.0;
  double error_bound = 0.0;  // truncation of the escape series, weighted
  std::size_t words = 0;
};

struct LevelHeightOptions {
  double tol = 1e-4;  // per-atom accuracy of h_S
  std::size_t word_cap = 1'000'000;
};

/// h_S(Delta_{k, alpha}) for k = 0..n. Every bad prime of the system must be
/// monomial-like, otherwise UnsupportedStructure.
std::vector<LevelHeight> backward_orbit_heights(const StochasticSystem& s, const ProjPoint& alpha, int n,
                                                const LevelHeightOptions& opts = {});

/// h_S of every root of the primitive integer polynomial f, summed with multiplicity.
double root_heights_sum(const StochasticSystem& s, const IntPoly& f, double tol = 1e-4);

}  // namespace stochdyn
