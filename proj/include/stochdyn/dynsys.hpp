#pragma once

// Rational maps of P^1 over Q given by coprime binary forms, finite
// stochastic families of such maps, ramification and exceptional points.
//
// Exceptional points are decided at depth three: P is exceptional for the
// family iff every length-three word is totally ramified at P. If every word
// of length three is totally ramified at P then P lies in the exceptional set.
// Conversely the exceptional set is a finite union of grand orbits that every
// map sends into itself, and a point of a finite completely invariant set of
// size at most two is totally ramified for each map; chaining this along any
// word keeps the images inside the set, so each word is totally ramified.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stochdyn/exactnum.hpp"

namespace stochdyn {

inline constexpr std::size_t kDefaultWordCap = 1'000'000;

class RationalMap {
 public:
  /// Builds z -> num(z)/den(z); throws DegenerateMap, DegreeTooLow or CommonFactor.
  static RationalMap make(const IntPoly& num, const IntPoly& den);
  /// From forms of equal degree; same checks as make.
  static RationalMap from_forms(HomogeneousForm f, HomogeneousForm g);

  const HomogeneousForm& F() const { return f_; }
  const HomogeneousForm& G() const { return g_; }
  int degree() const { return f_.degree; }
  const BigInt& res() const { return res_; }

  ProjPoint operator()(const ProjPoint& p) const;

  /// Non-null when the map is a*z^d or a*z^-d (a rational): returns a and
  /// the signed exponent.
  struct Monomial {
    BigRat coeff;
    int exponent = 0;
  };
  std::optional<Monomial> monomial() const;

  std::string str() const;
  friend bool operator==(const RationalMap&, const RationalMap&) = default;

 private:
  RationalMap(HomogeneousForm f, HomogeneousForm g, BigInt res)
      : f_(std::move(f)), g_(std::move(g)), res_(std::move(res)) {}
  HomogeneousForm f_;
  HomogeneousForm g_;
  BigInt res_;
};

inline RationalMap make_map(const IntPoly& num, const IntPoly& den) { return RationalMap::make(num, den); }
inline ProjPoint eval_map(const RationalMap& phi, const ProjPoint& p) { return phi(p); }

/// Forms of outer o inner (not reduced by content).
std::pair<HomogeneousForm, HomogeneousForm> compose_forms(const HomogeneousForm& outer_f,
                                                          const HomogeneousForm& outer_g,
                                                          const HomogeneousForm& inner_f,
                                                          const HomogeneousForm& inner_g);

/// Multiplicity of P as a root of F*G(P) - G*F(P).
int ramification_index(const RationalMap& phi, const ProjPoint& p);

struct BadPrimes {
  std::vector<BigInt> primes;
  bool complete = true;
  BigInt unfactored = 1;
};
BadPrimes bad_primes(const RationalMap& phi, unsigned long trial_bound = 1000000);

class StochasticSystem {
 public:
  /// Throws InvalidSystem unless probabilities are positive and sum to 1.
  StochasticSystem(std::vector<RationalMap> maps, std::vector<BigRat> probs);

  std::size_t size() const { return maps_.size(); }
  const RationalMap& map(std::size_t i) const { return maps_[i]; }
  const BigRat& prob(std::size_t i) const { return probs_[i]; }
  const std::vector<RationalMap>& maps() const { return maps_; }
  const std::vector<BigRat>& probs() const { return probs_; }

 private:
  std::vector<RationalMap> maps_;
  std::vector<BigRat> probs_;
};

/// Harmonic mean of degrees weighted by probability.
BigRat stochastic_degree(const StochasticSystem& s);

struct WordView {
  std::span<const int> indices;  // maps applied first-to-last
  const BigRat& weight;
  const BigInt& degree;
};

/// Visits every word of length n in lexicographic order. Throws
/// WordCapExceeded if |S|^n > cap.
void for_each_word(const StochasticSystem& s, int n, std::size_t cap,
                   const std::function<void(const WordView&)>& visit);

/// Ramification of the word at p via the chain rule.
int word_ramification(const StochasticSystem& s, std::span<const int> word, const ProjPoint& p);

BigRat sigma3(const StochasticSystem& s, const ProjPoint& p, std::size_t cap = kDefaultWordCap);
bool is_exceptional_system(const StochasticSystem& s, const ProjPoint& p, std::size_t cap = kDefaultWordCap);

struct ExceptionalSet {
  std::vector<ProjPoint> points;
  /// Irreducible factors whose roots are totally ramified for the first map
  /// but irrational; these are not tested.
  std::vector<IntPoly> irrational_candidates;
};
ExceptionalSet exceptional_set(const StochasticSystem& s, std::size_t cap = kDefaultWordCap);

}  // namespace stochdyn
