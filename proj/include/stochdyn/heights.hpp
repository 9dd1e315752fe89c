#pragma once

// Weil and local heights on P^1(Q), heights and energy pairings of finitely
// supported measures, and the sup-norm constants of per-map Green functions.

#include <map>
#include <vector>

#include "stochdyn/dynsys.hpp"

namespace stochdyn {

class Place {
 public:
  static Place arch() { return Place(); }
  static Place prime(BigInt p);

  bool is_arch() const { return p_ == 0; }
  const BigInt& p() const { return p_; }
  /// log|x|_v for x != 0.
  double log_abs(const BigRat& x) const;
  std::string str() const { return is_arch() ? "arch" : p_.get_str(); }

  friend bool operator==(const Place&, const Place&) = default;
  friend bool operator<(const Place& x, const Place& y) { return x.p_ < y.p_; }

 private:
  Place() = default;
  BigInt p_ = 0;
};

/// An exact Q-linear combination of logarithms of positive integers.
/// Canonical form uses a pairwise coprime set of bases, on which the logs are
/// linearly independent over Q; so zero testing is exact.
class LogSum {
 public:
  /// Adds coeff * log|n| (n != 0).
  void add(const BigInt& n, const BigRat& coeff);
  /// Adds coeff * log|q| (q != 0).
  void add(const BigRat& q, const BigRat& coeff);
  LogSum& operator+=(const LogSum& other);
  LogSum& operator-=(const LogSum& other);
  LogSum scaled(const BigRat& c) const;

  bool is_zero() const;
  double value() const;
  /// Canonical (coprime base, nonzero coefficient) terms, ascending base.
  std::vector<std::pair<BigInt, BigRat>> terms() const;

 private:
  std::map<BigInt, BigRat> raw_;
};

double weil_height(const ProjPoint& p);
/// Throws NotIrreducible on an evident factorization (rational root or repeated factor).
double weil_height_minpoly(const IntPoly& f);
/// log+|a/b|_v; throws InfinitePoint at [1:0].
double local_height(const ProjPoint& p, const Place& v);

/// A probability measure with exact weights on distinct points of P^1(Q).
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Merges repeated points; throws InvalidArgument unless weights are positive and sum to 1.
  DiscreteMeasure(std::vector<ProjPoint> support, std::vector<BigRat> weights);
  static DiscreteMeasure dirac(const ProjPoint& p) { return DiscreteMeasure({p}, {BigRat(1)}); }
  /// sum_n t_n Delta_n with atoms merged.
  static DiscreteMeasure mixture(const std::vector<DiscreteMeasure>& parts, const std::vector<BigRat>& t);

  const std::vector<ProjPoint>& support() const { return support_; }
  const std::vector<BigRat>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }

 private:
  std::vector<ProjPoint> support_;
  std::vector<BigRat> weights_;
};

double measure_height(const DiscreteMeasure& m);
LogSum measure_height_exact(const DiscreteMeasure& m);

/// -sum over off-diagonal pairs of s_m t_n log|z_m - w_n|_v.
double energy_pairing_discrete(const DiscreteMeasure& gamma, const DiscreteMeasure& delta, const Place& v);

/// Sum over all places of the pairing, expanded place by place (archimedean
/// term plus one term per prime dividing each difference) and kept exact.
LogSum product_formula_sum(const DiscreteMeasure& gamma, const DiscreteMeasure& delta);

/// (lambda_v - Delta, lambda_v - Delta)_v for finitely supported Delta.
double standard_energy_defect(const DiscreteMeasure& m, const Place& v);
/// The finite-place defect as an exact multiple of log p.
BigRat standard_energy_defect_padic(const DiscreteMeasure& m, const BigInt& p);

/// g_{phi,v}(z) = (1/d) log max(|F|,|G|)_v - log max(|a|,|b|)_v at a
/// rational point (homogeneous, so infinity is allowed).
double map_green_local(const RationalMap& phi, const ProjPoint& z, const Place& v);
/// Archimedean g_phi at a complex point; z = infinity is accepted.
double map_green_arch(const RationalMap& phi, ComplexVal z);

struct CphiBound {
  std::size_t map_index = 0;
  Place place = Place::arch();
  double numeric_estimate = 0.0;
  double certified_upper = 0.0;
  bool exact = false;  // numeric_estimate is the true supremum
};
CphiBound cphi_bound(const RationalMap& phi, const Place& v, std::size_t map_index = 0);

struct L1Control {
  double total = 0.0;
  std::vector<std::pair<Place, double>> per_place;  // E_S C_phi(v), arch first
  double at(const Place& v) const;
};
L1Control l1_height_control_total(const StochasticSystem& s);

}  // namespace stochdyn
