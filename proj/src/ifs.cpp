#include "stochdyn/ifs.hpp"

#include <algorithm>
#include <cmath>

#include "stochdyn/error.hpp"

namespace stochdyn {

StationaryLaw StationaryLaw::point_mass(double at) {
  StationaryLaw law;
  law.lo_ = law.hi_ = at;
  return law;
}

StationaryLaw StationaryLaw::solve(const std::vector<AffineBranch>& branches, std::size_t grid) {
  if (branches.empty()) throw Error(ErrorCode::InvalidArgument, "empty function system");
  double total = 0.0;
  for (const auto& b : branches) {
    if (!(std::fabs(b.scale) < 1.0)) throw Error(ErrorCode::InvalidArgument, "branch is not a contraction");
    if (!(b.prob > 0.0)) throw Error(ErrorCode::InvalidArgument, "branch probability must be positive");
    total += b.prob;
  }
  // Attractor hull: grow the hull of the fixed points until it is invariant.
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& b : branches) {
    double fix = b.offset / (1.0 - b.scale);
    lo = std::min(lo, fix);
    hi = std::max(hi, fix);
  }
  for (int it = 0; it < 10000; ++it) {
    double nlo = lo, nhi = hi;
    for (const auto& b : branches) {
      double x = b.apply(lo), y = b.apply(hi);
      nlo = std::min({nlo, x, y});
      nhi = std::max({nhi, x, y});
    }
    bool done = nlo >= lo - 1e-15 * (1 + std::fabs(lo)) && nhi <= hi + 1e-15 * (1 + std::fabs(hi));
    lo = nlo;
    hi = nhi;
    if (done) break;
  }
  if (hi - lo <= 1e-13 * std::max(1.0, std::fabs(lo))) return point_mass(0.5 * (lo + hi));

  StationaryLaw law;
  law.lo_ = lo;
  law.hi_ = hi;
  law.cdf_.resize(grid + 1);
  for (std::size_t i = 0; i <= grid; ++i) law.cdf_[i] = static_cast<double>(i) / static_cast<double>(grid);
  std::vector<double> next(grid + 1);
  const double h = (hi - lo) / static_cast<double>(grid);
  // F(x) = sum_i p_i P(T_i V <= x); increasing branches read F at the
  // preimage of x, decreasing ones read the complementary tail.
  for (int it = 0; it < 2000; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i <= grid; ++i) {
      double x = lo + h * static_cast<double>(i);
      double acc = 0.0;
      for (const auto& b : branches) {
        if (b.scale == 0.0) {
          acc += b.prob * (b.offset <= x ? 1.0 : 0.0);
          continue;
        }
        double pre = (x - b.offset) / b.scale;
        acc += b.prob * (b.scale > 0 ? law.cdf(pre) : 1.0 - law.cdf(pre));
      }
      next[i] = acc / total;
      change = std::max(change, std::fabs(next[i] - law.cdf_[i]));
    }
    next.front() = std::min(next.front(), next[1]);
    next.back() = 1.0;
    law.cdf_.swap(next);
    if (change < 1e-13) break;
  }
  return law;
}

double StationaryLaw::cdf(double v) const {
  if (is_point_mass()) return v >= lo_ ? 1.0 : 0.0;
  if (v < lo_) return 0.0;
  if (v >= hi_) return 1.0;
  const double pos = (v - lo_) / (hi_ - lo_) * static_cast<double>(cdf_.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), cdf_.size() - 2);
  const double t = pos - static_cast<double>(i);
  return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
}

std::vector<double> StationaryLaw::density() const {
  std::vector<double> d;
  if (is_point_mass()) return d;
  const double h = (hi_ - lo_) / static_cast<double>(cdf_.size() - 1);
  for (std::size_t i = 0; i + 1 < cdf_.size(); ++i) d.push_back((cdf_[i + 1] - cdf_[i]) / h);
  return d;
}

}  // namespace stochdyn
