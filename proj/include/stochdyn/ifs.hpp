#pragma once

// Stationary laws of finite affine iterated function systems on the line,
// v -> scale * v + offset with |scale| < 1. Both the log-modulus dynamics of
// monomial maps and their p-adic valuation dynamics have this shape.

#include <vector>

namespace stochdyn {

struct AffineBranch {
  double scale = 0.5;
  double offset = 0.0;
  double prob = 1.0;
  double apply(double v) const { return scale * v + offset; }
};

/// CDF of the stationary law, stored on a uniform grid over the attractor
/// hull and interpolated linearly (a piecewise-constant density).
class StationaryLaw {
 public:
  StationaryLaw() = default;
  static StationaryLaw solve(const std::vector<AffineBranch>& branches, std::size_t grid = 4096);
  static StationaryLaw point_mass(double at);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool is_point_mass() const { return cdf_.empty(); }
  double cdf(double v) const;
  /// Density on each grid cell; empty for a point mass.
  std::vector<double> density() const;
  const std::vector<double>& grid_cdf() const { return cdf_; }

 private:
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> cdf_;
};

}  // namespace stochdyn
