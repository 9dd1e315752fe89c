#pragma once

// Exact integer/rational arithmetic, integer polynomials, projective points
// of P^1(Q), resultants, p-adic valuations and complex root isolation.

#include <gmpxx.h>

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochdyn/error.hpp"

namespace stochdyn {

using BigInt = mpz_class;
using BigRat = mpq_class;
using ComplexVal = std::complex<double>;

/// Natural log of |x| for arbitrarily large x; -inf for zero.
double log_abs(const BigInt& x);
/// log|q| = log|num| - log(den); -inf for zero.
double log_abs(const BigRat& q);
/// Nearest double to a rational without overflow of the intermediate parts.
double to_double(const BigRat& q);
/// x * 2^-shift as a double, without forming x as a double first.
double to_double_scaled(const BigInt& x, long shift);
/// Bit length of |x| (0 for zero).
long bit_length(const BigInt& x);

BigRat parse_rational(const std::string& text);
/// n/d in lowest terms with positive denominator.
inline BigRat ratio(const BigInt& n, const BigInt& d) {
  BigRat q(n, d);
  q.canonicalize();
  return q;
}

/// A point [a : b] of P^1(Q) in canonical form: gcd(|a|,|b|) = 1, b > 0,
/// or [1 : 0] for the point at infinity.
class ProjPoint {
 public:
  ProjPoint() : a_(0), b_(1) {}
  ProjPoint(BigInt a, BigInt b);

  static ProjPoint infinity() { return ProjPoint(1, 0); }
  static ProjPoint from_rational(const BigRat& q) { return ProjPoint(q.get_num(), q.get_den()); }

  const BigInt& a() const { return a_; }
  const BigInt& b() const { return b_; }
  bool is_infinity() const { return b_ == 0; }
  /// The affine coordinate a/b; throws InfinitePoint at [1:0].
  BigRat value() const;
  ComplexVal embed() const;
  std::string str() const;

  friend bool operator==(const ProjPoint& x, const ProjPoint& y) {
    return x.a_ == y.a_ && x.b_ == y.b_;
  }
  /// Orders by affine value with infinity last.
  friend bool operator<(const ProjPoint& x, const ProjPoint& y) {
    if (x.is_infinity() || y.is_infinity()) return !x.is_infinity() && y.is_infinity();
    return x.a_ * y.b_ < y.a_ * x.b_;
  }

 private:
  BigInt a_;
  BigInt b_;
};

ProjPoint normalize_point(const BigInt& a, const BigInt& b);
/// Parses "a/b", "a" or "inf".
ProjPoint parse_point(const std::string& text);

struct ProjPointHash {
  std::size_t operator()(const ProjPoint& p) const;
};

/// Dense univariate integer polynomial, coefficients in ascending order.
/// Canonical form has no trailing zeros; the zero polynomial is empty.
class IntPoly {
 public:
  IntPoly() = default;
  explicit IntPoly(std::vector<BigInt> coeffs);
  IntPoly(std::initializer_list<long> coeffs);

  static IntPoly monomial(const BigInt& c, int degree);

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const std::vector<BigInt>& coeffs() const { return c_; }
  const BigInt& operator[](std::size_t i) const { return c_[i]; }
  BigInt coeff(int i) const;
  const BigInt& lead() const { return c_.back(); }

  BigInt content() const;
  IntPoly primitive_part() const;
  IntPoly derivative() const;
  BigRat eval(const BigRat& x) const;
  /// Evaluates with coefficients rescaled by 2^-shift so that huge
  /// coefficients stay representable; returns the value times 2^-shift.
  ComplexVal eval_scaled(ComplexVal x, long shift) const;

  friend IntPoly operator+(const IntPoly& x, const IntPoly& y);
  friend IntPoly operator-(const IntPoly& x, const IntPoly& y);
  friend IntPoly operator*(const IntPoly& x, const IntPoly& y);
  friend IntPoly operator*(const BigInt& s, const IntPoly& x);
  friend bool operator==(const IntPoly& x, const IntPoly& y) { return x.c_ == y.c_; }

  std::string str() const;

 private:
  void trim();
  std::vector<BigInt> c_;
};

/// Returns the integral quotient if `divisor` divides `dividend` in Z[x].
std::optional<IntPoly> divides_exactly(const IntPoly& dividend, const IntPoly& divisor);
/// Primitive gcd with positive leading coefficient.
IntPoly gcd(const IntPoly& x, const IntPoly& y);

/// Yun square-free decomposition: returns (a_i, i) with f = c * prod a_i^i,
/// each a_i primitive, square-free, pairwise coprime and of positive degree.
std::vector<std::pair<IntPoly, int>> square_free_decomposition(const IntPoly& f);

/// Multiplicity of the rational root a/b ([a:b] with b != 0) of f.
int root_multiplicity(const IntPoly& f, const ProjPoint& root);

/// Binary form sum_i c[i] X^i Y^(d-i) of formal degree d.
struct HomogeneousForm {
  std::vector<BigInt> coeffs;  // size degree + 1
  int degree = 0;

  HomogeneousForm() = default;
  HomogeneousForm(std::vector<BigInt> c, int d);
  static HomogeneousForm from_poly(const IntPoly& p, int d);

  IntPoly dehomogenize() const { return IntPoly(coeffs); }
  BigInt eval(const BigInt& x, const BigInt& y) const;
  bool is_zero() const;

  friend HomogeneousForm operator*(const HomogeneousForm& x, const HomogeneousForm& y);
  friend HomogeneousForm operator+(const HomogeneousForm& x, const HomogeneousForm& y);
  friend HomogeneousForm operator*(const BigInt& s, const HomogeneousForm& x);
  friend bool operator==(const HomogeneousForm&, const HomogeneousForm&) = default;
};

/// Sylvester resultant of two binary forms of the same formal degree d.
BigInt resultant(const HomogeneousForm& f, const HomogeneousForm& g, int d);

/// Determinant via fraction-free Bareiss elimination.
BigInt determinant(std::vector<std::vector<BigInt>> m);

/// v_p(q); nullopt encodes +infinity (q = 0).
std::optional<long> padic_valuation(const BigRat& q, const BigInt& p);
std::optional<long> padic_valuation(const BigInt& x, const BigInt& p);

bool is_probable_prime(const BigInt& n);

struct Factorization {
  std::vector<std::pair<BigInt, int>> factors;  // ascending primes
  bool complete = true;
  BigInt unfactored = 1;  // composite cofactor left when incomplete
};

/// Trial division up to `trial_bound`, then a primality test on the
/// cofactor. A composite cofactor is reported, flagged incomplete.
Factorization factorize(BigInt n, unsigned long trial_bound = 1000000);

struct RootOptions {
  int digits = 15;  // requested significant digits; up to 18 supported
  int max_iterations = 800;
};

struct RootWithMultiplicity {
  ComplexVal root;
  int multiplicity = 1;
};

/// All complex roots with exact multiplicities (square-free decomposition
/// over Q), each square-free factor solved by simultaneous iteration.
std::vector<RootWithMultiplicity> poly_roots_complex(const IntPoly& f, RootOptions opts = {});

/// Roots of a square-free integer polynomial.
std::vector<ComplexVal> square_free_roots(const IntPoly& f, RootOptions opts = {});

/// Rational roots of f, found exactly (numeric candidates verified by exact
/// evaluation), with multiplicities.
std::vector<std::pair<BigRat, int>> rational_roots(const IntPoly& f);

/// Roots of a complex-coefficient polynomial (ascending coefficients,
/// nonzero leading coefficient) by Aberth-Ehrlich iteration.
std::vector<ComplexVal> complex_poly_roots(std::span<const ComplexVal> coeffs, RootOptions opts = {});

/// Lower Newton polygon of f at p: (number of roots, valuation of those roots)
/// per segment. Roots at 0 are reported with valuation nullopt (+infinity).
struct NewtonSegment {
  int length = 0;
  std::optional<BigRat> root_valuation;
};
std::vector<NewtonSegment> newton_polygon(const IntPoly& f, const BigInt& p);

/// Compensated (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace stochdyn
