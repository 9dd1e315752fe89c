#include "stochdyn/exactnum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace stochdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroPoint: return "ZeroPoint";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DegenerateMap: return "DegenerateMap";
    case ErrorCode::DegreeTooLow: return "DegreeTooLow";
    case ErrorCode::CommonFactor: return "CommonFactor";
    case ErrorCode::InvalidSystem: return "InvalidSystem";
    case ErrorCode::WordCapExceeded: return "WordCapExceeded";
    case ErrorCode::IntegerOverflowBudget: return "IntegerOverflowBudget";
    case ErrorCode::InfinitePoint: return "InfinitePoint";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::NodeBudgetExceeded: return "NodeBudgetExceeded";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ExceptionalStart: return "ExceptionalStart";
    case ErrorCode::UnsupportedStructure: return "UnsupportedStructure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- scalars

double log_abs(const BigInt& x) {
  if (x == 0) return -std::numeric_limits<double>::infinity();
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log(std::fabs(mant)) + static_cast<double>(exp) * std::numbers::ln2;
}

double log_abs(const BigRat& q) {
  if (q == 0) return -std::numeric_limits<double>::infinity();
  return log_abs(q.get_num()) - log_abs(q.get_den());
}

double to_double_scaled(const BigInt& x, long shift) {
  if (x == 0) return 0.0;
  long e = 0;
  double m = mpz_get_d_2exp(&e, x.get_mpz_t());
  return std::ldexp(m, static_cast<int>(std::clamp(e - shift, -100000L, 100000L)));
}

long bit_length(const BigInt& x) { return x == 0 ? 0 : static_cast<long>(mpz_sizeinbase(x.get_mpz_t(), 2)); }

double to_double(const BigRat& q) {
  if (q == 0) return 0.0;
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, q.get_num_mpz_t());
  double md = mpz_get_d_2exp(&ed, q.get_den_mpz_t());
  return std::ldexp(mn / md, static_cast<int>(en - ed));
}

BigRat parse_rational(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
  if (t.empty()) throw Error(ErrorCode::ParseError, "empty rational");
  BigRat q;
  auto slash = t.find('/');
  try {
    if (slash == std::string::npos) {
      q = BigRat(BigInt(t), 1);
    } else {
      BigInt den(t.substr(slash + 1));
      if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + text + "'");
      q = BigRat(BigInt(t.substr(0, slash)), den);
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::ParseError, "not a rational: '" + text + "'");
  }
  q.canonicalize();
  return q;
}

// ---------------------------------------------------------------- ProjPoint

ProjPoint::ProjPoint(BigInt a, BigInt b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_ == 0 && b_ == 0) throw Error(ErrorCode::ZeroPoint, "[0 : 0] is not a projective point");
  if (b_ == 0) {
    a_ = 1;
    return;
  }
  BigInt g = ::gcd(a_, b_);
  a_ /= g;
  b_ /= g;
  if (b_ < 0) {
    a_ = -a_;
    b_ = -b_;
  }
}

ProjPoint normalize_point(const BigInt& a, const BigInt& b) { return ProjPoint(a, b); }

ProjPoint parse_point(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
  if (t == "inf" || t == "infinity" || t == "oo") return ProjPoint::infinity();
  BigRat q = parse_rational(t);
  return ProjPoint::from_rational(q);
}

BigRat ProjPoint::value() const {
  if (is_infinity()) throw Error(ErrorCode::InfinitePoint, "affine value of [1:0]");
  return BigRat(a_, b_);
}

ComplexVal ProjPoint::embed() const {
  if (is_infinity()) return {std::numeric_limits<double>::infinity(), 0.0};
  return {to_double(BigRat(a_, b_)), 0.0};
}

std::string ProjPoint::str() const {
  if (is_infinity()) return "inf";
  if (b_ == 1) return a_.get_str();
  return a_.get_str() + "/" + b_.get_str();
}

std::size_t ProjPointHash::operator()(const ProjPoint& p) const {
  std::size_t h1 = std::hash<std::string>{}(p.a().get_str(16));
  std::size_t h2 = std::hash<std::string>{}(p.b().get_str(16));
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

// ---------------------------------------------------------------- IntPoly

IntPoly::IntPoly(std::vector<BigInt> coeffs) : c_(std::move(coeffs)) { trim(); }

IntPoly::IntPoly(std::initializer_list<long> coeffs) {
  for (long c : coeffs) c_.emplace_back(c);
  trim();
}

IntPoly IntPoly::monomial(const BigInt& c, int degree) {
  std::vector<BigInt> v(static_cast<std::size_t>(degree) + 1, BigInt(0));
  v.back() = c;
  return IntPoly(std::move(v));
}

void IntPoly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

BigInt IntPoly::coeff(int i) const {
  if (i < 0 || i > degree()) return 0;
  return c_[static_cast<std::size_t>(i)];
}

BigInt IntPoly::content() const {
  BigInt g = 0;
  for (const auto& c : c_) g = ::gcd(g, c);
  return g;
}

IntPoly IntPoly::primitive_part() const {
  if (is_zero()) return *this;
  BigInt g = content();
  if (lead() < 0) g = -g;
  std::vector<BigInt> v = c_;
  for (auto& c : v) c /= g;
  return IntPoly(std::move(v));
}

IntPoly IntPoly::derivative() const {
  if (c_.size() <= 1) return {};
  std::vector<BigInt> v(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) v[i - 1] = c_[i] * static_cast<unsigned long>(i);
  return IntPoly(std::move(v));
}

BigRat IntPoly::eval(const BigRat& x) const {
  BigRat acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + BigRat(*it);
  return acc;
}

namespace {

long bit_length(const BigInt& x) {
  if (x == 0) return 0;
  return static_cast<long>(mpz_sizeinbase(x.get_mpz_t(), 2));
}

template <class T>
T scaled_to_float(const BigInt& c, long shift) {
  if (c == 0) return T(0);
  long bits = bit_length(c);
  long drop = std::max(0L, bits - 64);
  BigInt top = c >> static_cast<mp_bitcnt_t>(drop);
  // |top| < 2^64; split into two exact 32-bit halves.
  BigInt mag = abs(top);
  BigInt hi = mag >> 32;
  BigInt lo = mag - (hi << 32);
  T v = static_cast<T>(hi.get_ui()) * T(4294967296.0) + static_cast<T>(lo.get_ui());
  if (c < 0) v = -v;
  return std::ldexp(v, static_cast<int>(drop - shift));
}

}  // namespace

ComplexVal IntPoly::eval_scaled(ComplexVal x, long shift) const {
  ComplexVal acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + scaled_to_float<double>(*it, shift);
  return acc;
}

IntPoly operator+(const IntPoly& x, const IntPoly& y) {
  std::vector<BigInt> v(std::max(x.c_.size(), y.c_.size()), BigInt(0));
  for (std::size_t i = 0; i < x.c_.size(); ++i) v[i] += x.c_[i];
  for (std::size_t i = 0; i < y.c_.size(); ++i) v[i] += y.c_[i];
  return IntPoly(std::move(v));
}

IntPoly operator-(const IntPoly& x, const IntPoly& y) {
  std::vector<BigInt> v(std::max(x.c_.size(), y.c_.size()), BigInt(0));
  for (std::size_t i = 0; i < x.c_.size(); ++i) v[i] += x.c_[i];
  for (std::size_t i = 0; i < y.c_.size(); ++i) v[i] -= y.c_[i];
  return IntPoly(std::move(v));
}

IntPoly operator*(const IntPoly& x, const IntPoly& y) {
  if (x.is_zero() || y.is_zero()) return {};
  std::vector<BigInt> v(x.c_.size() + y.c_.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < x.c_.size(); ++i)
    for (std::size_t j = 0; j < y.c_.size(); ++j) v[i + j] += x.c_[i] * y.c_[j];
  return IntPoly(std::move(v));
}

IntPoly operator*(const BigInt& s, const IntPoly& x) {
  std::vector<BigInt> v = x.c_;
  for (auto& c : v) c *= s;
  return IntPoly(std::move(v));
}

std::string IntPoly::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int i = degree(); i >= 0; --i) {
    const BigInt& c = c_[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    BigInt m = abs(c);
    if (m != 1 || i == 0) os << m.get_str();
    if (i >= 1) os << "x";
    if (i >= 2) os << "^" << i;
    first = false;
  }
  return os.str();
}

// ------------------------------------------------- rational polynomial helpers

namespace {

using QPoly = std::vector<BigRat>;  // ascending, trimmed

void qtrim(QPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

QPoly to_q(const IntPoly& f) {
  QPoly p;
  for (const auto& c : f.coeffs()) p.emplace_back(c);
  return p;
}

IntPoly to_primitive_int(const QPoly& p) {
  if (p.empty()) return {};
  BigInt l = 1;
  for (const auto& c : p) l = lcm(l, BigInt(c.get_den()));
  std::vector<BigInt> v;
  v.reserve(p.size());
  for (const auto& c : p) v.emplace_back(BigInt(c * l));
  return IntPoly(std::move(v)).primitive_part();
}

QPoly qderiv(const QPoly& p) {
  QPoly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<unsigned long>(i));
  qtrim(d);
  return d;
}

QPoly qsub(const QPoly& x, const QPoly& y) {
  QPoly v(std::max(x.size(), y.size()), BigRat(0));
  for (std::size_t i = 0; i < x.size(); ++i) v[i] += x[i];
  for (std::size_t i = 0; i < y.size(); ++i) v[i] -= y[i];
  qtrim(v);
  return v;
}

/// Long division over Q; returns (quotient, remainder).
std::pair<QPoly, QPoly> qdivmod(QPoly a, const QPoly& b) {
  if (b.empty()) throw Error(ErrorCode::InvalidArgument, "polynomial division by zero");
  qtrim(a);
  if (a.size() < b.size()) return {QPoly{}, a};
  QPoly q(a.size() - b.size() + 1, BigRat(0));
  const BigRat& lb = b.back();
  for (std::size_t k = q.size(); k-- > 0;) {
    BigRat coef = a[k + b.size() - 1] / lb;
    q[k] = coef;
    if (coef == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) a[k + j] -= coef * b[j];
  }
  a.resize(b.size() - 1);
  qtrim(a);
  qtrim(q);
  return {q, a};
}

QPoly qmonic(QPoly p) {
  if (p.empty()) return p;
  BigRat l = p.back();
  for (auto& c : p) c /= l;
  return p;
}

QPoly qgcd(QPoly a, QPoly b) {
  qtrim(a);
  qtrim(b);
  while (!b.empty()) {
    auto r = qdivmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return qmonic(a);
}

QPoly qexact_div(const QPoly& a, const QPoly& b) {
  auto [q, r] = qdivmod(a, b);
  if (!r.empty()) throw Error(ErrorCode::InvalidArgument, "inexact polynomial division");
  return q;
}

}  // namespace

std::optional<IntPoly> divides_exactly(const IntPoly& dividend, const IntPoly& divisor) {
  auto [q, r] = qdivmod(to_q(dividend), to_q(divisor));
  if (!r.empty()) return std::nullopt;
  std::vector<BigInt> v;
  for (const auto& c : q) {
    if (c.get_den() != 1) return std::nullopt;
    v.emplace_back(c.get_num());
  }
  return IntPoly(std::move(v));
}

IntPoly gcd(const IntPoly& x, const IntPoly& y) {
  if (x.is_zero()) return y.primitive_part();
  if (y.is_zero()) return x.primitive_part();
  return to_primitive_int(qgcd(to_q(x), to_q(y)));
}

std::vector<std::pair<IntPoly, int>> square_free_decomposition(const IntPoly& f) {
  std::vector<std::pair<IntPoly, int>> out;
  if (f.degree() < 1) return out;
  QPoly a = to_q(f);
  QPoly b = qderiv(a);
  QPoly c = qgcd(a, b);
  QPoly w = qexact_div(a, c);
  QPoly y = qexact_div(b, c);
  QPoly z = qsub(y, qderiv(w));
  int i = 1;
  while (w.size() > 1) {
    QPoly d = qgcd(w, z);
    if (d.size() > 1) out.emplace_back(to_primitive_int(d), i);
    w = qexact_div(w, d);
    y = qexact_div(z, d);
    z = qsub(y, qderiv(w));
    ++i;
  }
  return out;
}

int root_multiplicity(const IntPoly& f, const ProjPoint& root) {
  if (root.is_infinity()) throw Error(ErrorCode::InfinitePoint, "root_multiplicity at infinity");
  if (f.is_zero()) throw Error(ErrorCode::InvalidArgument, "multiplicity in the zero polynomial");
  IntPoly lin{std::vector<BigInt>{-root.a(), root.b()}};
  IntPoly cur = f;
  int m = 0;
  while (cur.degree() >= 1) {
    auto q = divides_exactly(cur, lin);
    if (!q) break;
    cur = std::move(*q);
    ++m;
  }
  return m;
}

// ---------------------------------------------------------- HomogeneousForm

HomogeneousForm::HomogeneousForm(std::vector<BigInt> c, int d) : coeffs(std::move(c)), degree(d) {
  if (d < 0) throw Error(ErrorCode::InvalidArgument, "negative form degree");
  if (coeffs.size() > static_cast<std::size_t>(d) + 1) {
    for (std::size_t i = static_cast<std::size_t>(d) + 1; i < coeffs.size(); ++i)
      if (coeffs[i] != 0) throw Error(ErrorCode::DegreeMismatch, "form has terms above its degree");
  }
  coeffs.resize(static_cast<std::size_t>(d) + 1, BigInt(0));
}

HomogeneousForm HomogeneousForm::from_poly(const IntPoly& p, int d) {
  if (p.degree() > d) throw Error(ErrorCode::DegreeMismatch, "polynomial degree exceeds form degree");
  return HomogeneousForm(p.coeffs(), d);
}

BigInt HomogeneousForm::eval(const BigInt& x, const BigInt& y) const {
  // Horner in x with y-powers carried along.
  BigInt acc = 0;
  BigInt ypow = 1;
  std::vector<BigInt> ypows(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    ypows[k] = ypow;
    ypow *= y;
  }
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    acc = acc * x + coeffs[i] * ypows[coeffs.size() - 1 - i];
  }
  return acc;
}

bool HomogeneousForm::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](const BigInt& c) { return c == 0; });
}

HomogeneousForm operator*(const HomogeneousForm& x, const HomogeneousForm& y) {
  std::vector<BigInt> v(x.coeffs.size() + y.coeffs.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < x.coeffs.size(); ++i) {
    if (x.coeffs[i] == 0) continue;
    for (std::size_t j = 0; j < y.coeffs.size(); ++j) v[i + j] += x.coeffs[i] * y.coeffs[j];
  }
  return HomogeneousForm(std::move(v), x.degree + y.degree);
}

HomogeneousForm operator+(const HomogeneousForm& x, const HomogeneousForm& y) {
  if (x.degree != y.degree) throw Error(ErrorCode::DegreeMismatch, "adding forms of different degree");
  std::vector<BigInt> v = x.coeffs;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += y.coeffs[i];
  return HomogeneousForm(std::move(v), x.degree);
}

HomogeneousForm operator*(const BigInt& s, const HomogeneousForm& x) {
  std::vector<BigInt> v = x.coeffs;
  for (auto& c : v) c *= s;
  return HomogeneousForm(std::move(v), x.degree);
}

BigInt determinant(std::vector<std::vector<BigInt>> m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  int sign = 1;
  BigInt prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t piv = k + 1;
      while (piv < n && m[piv][k] == 0) ++piv;
      if (piv == n) return 0;
      std::swap(m[k], m[piv]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
      }
      m[i][k] = 0;
    }
    prev = m[k][k];
  }
  BigInt det = m[n - 1][n - 1];
  return sign < 0 ? BigInt(-det) : det;
}

BigInt resultant(const HomogeneousForm& f, const HomogeneousForm& g, int d) {
  if (f.degree != d || g.degree != d)
    throw Error(ErrorCode::DegreeMismatch, "resultant requires both forms of degree " + std::to_string(d));
  if (d == 0) return 1;
  const std::size_t n = 2 * static_cast<std::size_t>(d);
  std::vector<std::vector<BigInt>> s(n, std::vector<BigInt>(n, BigInt(0)));
  // Rows 0..d-1: shifts of f (highest power first); rows d..2d-1: shifts of g.
  for (std::size_t r = 0; r < static_cast<std::size_t>(d); ++r) {
    for (std::size_t k = 0; k <= static_cast<std::size_t>(d); ++k) {
      s[r][r + k] = f.coeffs[static_cast<std::size_t>(d) - k];
      s[r + static_cast<std::size_t>(d)][r + k] = g.coeffs[static_cast<std::size_t>(d) - k];
    }
  }
  return determinant(std::move(s));
}

// ---------------------------------------------------------------- valuations

std::optional<long> padic_valuation(const BigInt& x, const BigInt& p) {
  if (x == 0) return std::nullopt;
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "valuation base must be >= 2");
  BigInt y = abs(x);
  long v = static_cast<long>(mpz_remove(y.get_mpz_t(), y.get_mpz_t(), p.get_mpz_t()));
  return v;
}

std::optional<long> padic_valuation(const BigRat& q, const BigInt& p) {
  if (q == 0) return std::nullopt;
  return *padic_valuation(BigInt(q.get_num()), p) - *padic_valuation(BigInt(q.get_den()), p);
}

bool is_probable_prime(const BigInt& n) {
  if (n < 2) return false;
  return mpz_probab_prime_p(n.get_mpz_t(), 30) > 0;
}

Factorization factorize(BigInt n, unsigned long trial_bound) {
  Factorization out;
  n = abs(n);
  if (n <= 1) return out;
  auto strip = [&](unsigned long p) {
    int e = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
      ++e;
    }
    if (e > 0) out.factors.emplace_back(BigInt(p), e);
  };
  strip(2);
  for (unsigned long p = 3; p <= trial_bound && n > 1; p += 2) {
    if (BigInt(p) * p > n) break;
    strip(p);
  }
  if (n > 1) {
    if (is_probable_prime(n)) {
      out.factors.emplace_back(n, 1);
    } else {
      out.complete = false;
      out.unfactored = n;
    }
  }
  return out;
}

// ---------------------------------------------------------------- root finding

namespace {

template <class T>
struct Horner {
  std::complex<T> p, dp;
};

template <class T>
Horner<T> horner(std::span<const std::complex<T>> a, std::complex<T> z) {
  std::complex<T> p = a.back(), dp = 0;
  for (std::size_t i = a.size() - 1; i-- > 0;) {
    dp = dp * z + p;
    p = p * z + a[i];
  }
  return {p, dp};
}

/// Newton correction p(z)/p'(z), evaluated on the reversed polynomial for
/// |z| > 1 so that large roots do not overflow. Also returns a backward
/// error ratio |p(z)| / sum |a_i||z|^i.
template <class T>
std::pair<std::complex<T>, T> newton_ratio(std::span<const std::complex<T>> a,
                                           std::span<const std::complex<T>> rev, std::complex<T> z) {
  const T n = static_cast<T>(a.size() - 1);
  if (std::abs(z) <= T(1)) {
    auto h = horner<T>(a, z);
    T scale = 0;
    T az = std::abs(z);
    for (std::size_t i = a.size(); i-- > 0;) scale = scale * az + std::abs(a[i]);
    T berr = scale > 0 ? std::abs(h.p) / scale : T(0);
    if (h.dp == std::complex<T>(0)) return {std::complex<T>(0), berr};
    return {h.p / h.dp, berr};
  }
  std::complex<T> y = T(1) / z;
  auto h = horner<T>(rev, y);
  T scale = 0;
  T ay = std::abs(y);
  for (std::size_t i = rev.size(); i-- > 0;) scale = scale * ay + std::abs(rev[i]);
  T berr = scale > 0 ? std::abs(h.p) / scale : T(0);
  // p(z) = z^n q(y), p'(z) = n z^{n-1} q(y) - z^{n-2} q'(y)
  std::complex<T> denom = n * h.p - y * h.dp;
  if (denom == std::complex<T>(0)) return {std::complex<T>(0), berr};
  return {z * h.p / denom, berr};
}

/// Initial approximations on circles whose radii come from the upper convex
/// hull of (i, log|a_i|) (the standard Bini initialization).
template <class T>
std::vector<std::complex<T>> initial_guesses(std::span<const std::complex<T>> a) {
  const int n = static_cast<int>(a.size()) - 1;
  std::vector<std::pair<int, T>> pts;
  for (int i = 0; i <= n; ++i) {
    T m = std::abs(a[static_cast<std::size_t>(i)]);
    if (m > 0) pts.emplace_back(i, std::log(m));
  }
  std::vector<std::pair<int, T>> hull;
  for (const auto& pt : pts) {
    while (hull.size() >= 2) {
      const auto& p1 = hull[hull.size() - 2];
      const auto& p2 = hull.back();
      T cross = (p2.first - p1.first) * (pt.second - p1.second) - (p2.second - p1.second) * (pt.first - p1.first);
      if (cross >= 0) hull.pop_back();
      else break;
    }
    hull.push_back(pt);
  }
  std::vector<std::complex<T>> z;
  z.reserve(static_cast<std::size_t>(n));
  const T two_pi = T(2) * std::numbers::pi_v<T>;
  // Roots at zero come from leading zero coefficients below the first hull point.
  for (int i = 0; i < hull.front().first; ++i) z.emplace_back(0);
  for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
    int k0 = hull[s].first, k1 = hull[s + 1].first;
    int cnt = k1 - k0;
    T r = std::exp((hull[s].second - hull[s + 1].second) / static_cast<T>(cnt));
    for (int j = 0; j < cnt; ++j) {
      T ang = two_pi * static_cast<T>(j) / static_cast<T>(cnt) + two_pi * static_cast<T>(s + 1) / static_cast<T>(n) + T(0.4);
      z.push_back(std::polar(r, ang));
    }
  }
  return z;
}

template <class T>
std::vector<std::complex<T>> aberth(std::vector<std::complex<T>> a, int max_iter, T eps) {
  while (!a.empty() && a.back() == std::complex<T>(0)) a.pop_back();
  if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "root finding needs degree >= 1");
  const std::size_t n = a.size() - 1;
  // Strip exact roots at zero.
  std::size_t zeros = 0;
  while (a[zeros] == std::complex<T>(0)) ++zeros;
  std::vector<std::complex<T>> roots(zeros, std::complex<T>(0));
  if (zeros == n) return roots;
  std::vector<std::complex<T>> b(a.begin() + static_cast<long>(zeros), a.end());
  const std::size_t m = b.size() - 1;
  if (m == 1) {
    roots.push_back(-b[0] / b[1]);
    return roots;
  }
  if (m == 2) {
    // Cancellation-free quadratic formula.
    std::complex<T> disc = std::sqrt(b[1] * b[1] - T(4) * b[2] * b[0]);
    std::complex<T> q = b[1] + (std::real(std::conj(b[1]) * disc) >= 0 ? disc : -disc);
    q *= T(-0.5);
    if (q == std::complex<T>(0)) {
      roots.emplace_back(0);
      roots.emplace_back(0);
    } else {
      roots.push_back(q / b[2]);
      roots.push_back(b[0] / q);
    }
    return roots;
  }
  std::vector<std::complex<T>> rev(b.rbegin(), b.rend());
  auto z = initial_guesses<T>(b);
  std::vector<bool> done(m, false);
  std::size_t remaining = m;
  for (int it = 0; it < max_iter && remaining > 0; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      if (done[i]) continue;
      auto [ratio, berr] = newton_ratio<T>(b, rev, z[i]);
      if (berr <= eps * T(4) * static_cast<T>(m)) {
        done[i] = true;
        --remaining;
        continue;
      }
      std::complex<T> sum = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) sum += T(1) / (z[i] - z[j]);
      std::complex<T> w = ratio / (T(1) - ratio * sum);
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) w = ratio;
      z[i] -= w;
      if (std::abs(w) <= eps * std::abs(z[i])) {
        done[i] = true;
        --remaining;
      }
    }
  }
  if (remaining > 0) {
    // Accept stagnated residuals near the attainable floor.
    for (std::size_t i = 0; i < m; ++i) {
      if (done[i]) continue;
      auto [ratio, berr] = newton_ratio<T>(b, rev, z[i]);
      (void)ratio;
      if (!(berr <= std::sqrt(eps))) throw Error(ErrorCode::ConvergenceFailure, "Aberth iteration did not converge");
    }
  }
  roots.insert(roots.end(), z.begin(), z.end());
  return roots;
}

/// Coefficients of f(2^k y) / 2^m as floating values, with k chosen so the
/// root moduli are centred on 1 and m so the largest coefficient is O(1).
struct ScaledPoly {
  std::vector<long> exps;       // binary exponent of each coefficient after scaling
  std::vector<double> mants;    // signed mantissa in [0.5, 1)
  long var_shift = 0;           // k
};

ScaledPoly scale_poly(const IntPoly& f) {
  ScaledPoly s;
  const auto& c = f.coeffs();
  const int n = f.degree();
  std::vector<long> raw(c.size(), 0);
  s.mants.assign(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    long e = 0;
    s.mants[i] = mpz_get_d_2exp(&e, c[i].get_mpz_t());
    raw[i] = e;
  }
  int low = 0;
  while (c[static_cast<std::size_t>(low)] == 0) ++low;
  if (n > low) {
    double t = static_cast<double>(raw[static_cast<std::size_t>(low)] - raw.back()) / (n - low);
    s.var_shift = std::lround(t);
  }
  long top = std::numeric_limits<long>::min();
  s.exps.assign(c.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    s.exps[i] = raw[i] + s.var_shift * static_cast<long>(i);
    top = std::max(top, s.exps[i]);
  }
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0) s.exps[i] -= top;
  return s;
}

template <class T>
std::vector<std::complex<T>> to_complex(const ScaledPoly& s) {
  std::vector<std::complex<T>> a(s.mants.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (s.mants[i] == 0.0) continue;
    a[i] = std::ldexp(static_cast<T>(s.mants[i]), static_cast<int>(std::max(s.exps[i], -100000L)));
  }
  return a;
}

template <class T>
T eps_for_digits(int digits) {
  T eps = std::numeric_limits<T>::epsilon();
  return std::max(eps, static_cast<T>(std::pow(10.0L, -static_cast<long double>(digits))) * T(0.1));
}

}  // namespace

std::vector<ComplexVal> complex_poly_roots(std::span<const ComplexVal> coeffs, RootOptions opts) {
  std::vector<ComplexVal> a(coeffs.begin(), coeffs.end());
  return aberth<double>(std::move(a), opts.max_iterations, std::numeric_limits<double>::epsilon());
}

std::vector<ComplexVal> square_free_roots(const IntPoly& f, RootOptions opts) {
  if (f.degree() < 1) throw Error(ErrorCode::InvalidArgument, "poly_roots_complex needs degree >= 1");
  if (opts.digits > 18) throw Error(ErrorCode::ConvergenceFailure, "precision above 18 digits is not supported");
  ScaledPoly s = scale_poly(f);
  long lowest = 0;
  for (std::size_t i = 0; i < s.exps.size(); ++i)
    if (s.mants[i] != 0.0) lowest = std::min(lowest, s.exps[i]);
  // Wide coefficient spreads would flush small terms to zero in double.
  bool extended = opts.digits > 15 || lowest < -1000;
  std::vector<ComplexVal> out;
  if (!extended) {
    auto r = aberth<double>(to_complex<double>(s), opts.max_iterations, std::numeric_limits<double>::epsilon());
    for (const auto& z : r) out.push_back(std::ldexp(1.0, static_cast<int>(s.var_shift)) * z);
  } else {
    if (lowest < -16000) throw Error(ErrorCode::ConvergenceFailure, "coefficient spread exceeds extended range");
    auto r = aberth<long double>(to_complex<long double>(s), opts.max_iterations,
                                 eps_for_digits<long double>(std::max(opts.digits, 15)));
    for (const auto& z : r) {
      auto w = std::ldexp(1.0L, static_cast<int>(s.var_shift)) * z;
      out.emplace_back(static_cast<double>(w.real()), static_cast<double>(w.imag()));
    }
  }
  return out;
}

std::vector<RootWithMultiplicity> poly_roots_complex(const IntPoly& f, RootOptions opts) {
  if (f.degree() < 1) throw Error(ErrorCode::InvalidArgument, "poly_roots_complex needs degree >= 1");
  std::vector<RootWithMultiplicity> out;
  for (const auto& [factor, mult] : square_free_decomposition(f)) {
    for (const auto& z : square_free_roots(factor, opts)) out.push_back({z, mult});
  }
  return out;
}

namespace {

/// Continued-fraction convergents of x with denominator <= qmax.
std::vector<BigRat> convergents(double x, const BigInt& qmax) {
  std::vector<BigRat> out;
  BigInt h0 = 1, h1 = 0, k0 = 0, k1 = 1;  // h_{-1}=1,h_{-2}=0 ; k_{-1}=0,k_{-2}=1
  double r = x;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(r);
    if (!std::isfinite(fl) || std::fabs(fl) > 1e300) break;
    BigInt a(fl);
    BigInt h = a * h0 + h1;
    BigInt k = a * k0 + k1;
    if (k > qmax) break;
    out.emplace_back(h, k);
    out.back().canonicalize();
    h1 = h0;
    h0 = h;
    k1 = k0;
    k0 = k;
    double frac = r - fl;
    if (frac < 1e-300) break;
    r = 1.0 / frac;
  }
  return out;
}

}  // namespace

std::vector<std::pair<BigRat, int>> rational_roots(const IntPoly& f) {
  std::vector<std::pair<BigRat, int>> out;
  if (f.degree() < 1) return out;
  for (const auto& [factor, mult] : square_free_decomposition(f)) {
    if (factor.degree() == 1) {
      BigRat r(-factor[0], factor[1]);
      r.canonicalize();
      out.emplace_back(r, mult);
      continue;
    }
    if (factor[0] == 0) out.emplace_back(BigRat(0), mult);
    const BigInt qmax = abs(factor.lead());
    std::vector<BigRat> found;
    for (const auto& z : square_free_roots(factor)) {
      if (std::fabs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z))) continue;
      for (const auto& cand : convergents(z.real(), qmax)) {
        if (factor.eval(cand) == 0 && std::find(found.begin(), found.end(), cand) == found.end()) {
          found.push_back(cand);
        }
      }
    }
    for (auto& r : found)
      if (r != 0) out.emplace_back(r, mult);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

std::vector<NewtonSegment> newton_polygon(const IntPoly& f, const BigInt& p) {
  std::vector<NewtonSegment> out;
  if (f.degree() < 1) return out;
  std::vector<std::pair<int, long>> pts;
  for (int i = 0; i <= f.degree(); ++i) {
    auto v = padic_valuation(f[static_cast<std::size_t>(i)], p);
    if (v) pts.emplace_back(i, *v);
  }
  if (pts.front().first > 0) out.push_back({pts.front().first, std::nullopt});
  std::vector<std::pair<int, long>> hull;
  for (const auto& pt : pts) {
    while (hull.size() >= 2) {
      const auto& p1 = hull[hull.size() - 2];
      const auto& p2 = hull.back();
      // Pop p2 if it lies on or above the chord p1 -> pt.
      BigInt lhs = BigInt(p2.second - p1.second) * (pt.first - p1.first);
      BigInt rhs = BigInt(pt.second - p1.second) * (p2.first - p1.first);
      if (lhs >= rhs) hull.pop_back();
      else break;
    }
    hull.push_back(pt);
  }
  for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
    int len = hull[s + 1].first - hull[s].first;
    BigRat slope(BigInt(hull[s + 1].second - hull[s].second), BigInt(len));
    slope.canonicalize();
    out.push_back({len, BigRat(-slope)});
  }
  return out;
}

void CompensatedSum::add(double x) {
  double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) comp_ += (sum_ - t) + x;
  else comp_ += (x - t) + sum_;
  sum_ = t;
}

}  // namespace stochdyn
