#pragma once

// Backward orbit measures: exact leveled trees built from the preimage
// polynomials of each word, a path sampler whose marginal at depth n is the
// level-n measure, and mass-concentration statistics.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "stochdyn/heights.hpp"

namespace stochdyn {

/// A point of P^1(C) stored as (log|z|, arg z); log_abs is -inf at 0 and
/// +inf at infinity. Keeps orbits usable where doubles would under/overflow.
struct LogPolar {
  double log_abs = 0.0;
  double arg = 0.0;  // in [0, 2pi)

  static LogPolar from_complex(ComplexVal z);
  static LogPolar from_point(const ProjPoint& p);
  bool is_zero() const { return log_abs == -std::numeric_limits<double>::infinity(); }
  bool is_infinity() const { return log_abs == std::numeric_limits<double>::infinity(); }
  ComplexVal to_complex() const;
};

double wrap_angle(double a);

struct Preimage {
  ComplexVal point;  // infinity encoded as (inf, 0)
  int mult = 1;
  std::optional<ProjPoint> exact;
};

/// Exact multiplicities; rational preimages are returned exactly.
std::vector<Preimage> preimages(const RationalMap& phi, const ProjPoint& z);
/// Roots of F(w,1) - z G(w,1) (or the reversed chart for large |z|), each
/// listed once per root with multiplicity 1; preimages at infinity counted
/// by the degree deficit.
std::vector<Preimage> preimages(const RationalMap& phi, ComplexVal z);

/// Draws one preimage of z, uniformly among the d preimages counted with
/// multiplicity.
LogPolar sample_preimage(const RationalMap& phi, const LogPolar& z, std::mt19937_64& rng);

struct Atom {
  ComplexVal point;
  std::optional<ProjPoint> exact;
  BigRat weight;
  int mult = 0;  // total preimage multiplicity merged into this atom
  /// Primitive square-free integer polynomial having this point as a simple
  /// root; empty for infinity.
  IntPoly minpoly_hint;
  bool tolerance_merged = false;
};

struct TreeLevel {
  std::vector<Atom> atoms;
  bool tolerance_merged = false;
  BigRat total_weight() const;
};

struct MeasureTree {
  ProjPoint root;
  std::vector<TreeLevel> levels;  // levels[k] is the depth-k measure
};

struct TreeOptions {
  std::size_t node_budget = 1'000'000;
  double cluster_tol = 1e-8;  // relative
};

MeasureTree backward_tree(const StochasticSystem& s, const ProjPoint& alpha, int n, const TreeOptions& opts = {});

/// Forms of the word phi_n o ... o phi_1 (indices in application order).
std::pair<HomogeneousForm, HomogeneousForm> word_forms(const StochasticSystem& s, std::span<const int> word);

struct OrbitSampleBatch {
  std::vector<LogPolar> points;
  int depth = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

OrbitSampleBatch backward_sample(const StochasticSystem& s, const ProjPoint& alpha, int n, std::size_t samples,
                                 std::uint64_t seed, unsigned workers = 0);
/// Same kernel applied to caller-supplied starting points, one per sample.
OrbitSampleBatch backward_sample_from(const StochasticSystem& s,
                                      const std::function<LogPolar(std::mt19937_64&)>& start, int n,
                                      std::size_t samples, std::uint64_t seed, unsigned workers = 0);

/// CSV with columns index,re,im,log_abs,depth.
std::string samples_csv(const OrbitSampleBatch& batch);

BigRat well_distributed_stat(const MeasureTree& t, int level);

struct MassDecay {
  int k = 0;
  BigRat sup_mass;        // largest atom weight at level 3k
  BigRat ratio;           // sup_mass / sup at level 3(k-1)
  BigRat certified_bound; // max sigma over the level-3k support
};
std::vector<MassDecay> sup_mass_decay(const StochasticSystem& s, const MeasureTree& t);

/// sigma(w) for a tree atom, using exact critical polynomials of all depth-3
/// words when the atom is irrational.
BigRat atom_sigma3(const StochasticSystem& s, const Atom& a);

DiscreteMeasure pushforward(const RationalMap& phi, const DiscreteMeasure& m);

}  // namespace stochdyn
