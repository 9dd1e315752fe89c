#pragma once

// Deterministic chunked parallelism. Work is cut into fixed-size chunks, each
// chunk draws from its own generator seeded from (seed, chunk index), and
// results are merged in chunk order, so output does not depend on how many
// threads ran.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace stochdyn {

inline constexpr std::size_t kChunkSize = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Draws an index with the given probabilities by inverse-CDF search.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& probs) {
    double acc = 0.0;
    for (double p : probs) cdf_.push_back(acc += p);
    for (auto& c : cdf_) c /= acc;
  }
  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

/// Welford mean/variance; partial results combine with merge().
struct RunningMoments {
  double count = 0, mean = 0, m2 = 0;
  void add(double x) {
    count += 1;
    double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const RunningMoments& o) {
    if (o.count == 0) return;
    double n = count + o.count;
    double delta = o.mean - mean;
    mean += delta * o.count / n;
    m2 += o.m2 + delta * delta * count * o.count / n;
    count = n;
  }
  double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
  double stderr_of_mean() const { return count > 0 ? std::sqrt(variance() / count) : 0.0; }
};

/// Number of worker threads to use when the caller passes 0.
inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(chunk, begin, end) over [0, n) in chunks of kChunkSize.
/// Exceptions from workers are rethrown (the first by chunk order).
void run_chunks(std::size_t n, unsigned workers,
                const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

}  // namespace stochdyn
