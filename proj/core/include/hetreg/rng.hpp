#pragma once

// Deterministic randomness.
//
// Every random choice in the library flows from a single master seed through
// derive_seed(master, parts...), which mixes the parts with splitmix64.  Work
// that may run concurrently (permutation replicates, forest trees, random
// benchmark subsets) derives one seed per task from the task's index, so
// results are identical no matter how the tasks are scheduled.
//
// Draws use std::mt19937_64 (its output sequence is fixed by the standard)
// but NOT std::uniform_int_distribution and friends, whose algorithms are
// implementation-defined; the bounded-int and real helpers below are spelled
// out so that a seed pins the exact byte stream everywhere.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hetreg {

// splitmix64 finalizer: bijective 64-bit mix with good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds an ordered list of parts (task indices, replicate numbers, ...)
// into the master seed.  Order-sensitive: derive(s,{1,2}) != derive(s,{2,1}).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1): 53 random bits, so every double is equally likely.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], unbiased via rejection sampling.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo + 1;  // hi >= lo; span==0 means full range
    if (span == 0) return next_u64();
    std::uint64_t reject_below = (0 - span) % span;  // 2^64 mod span
    std::uint64_t r = next_u64();
    while (r < reject_below) r = next_u64();
    return lo + r % span;
  }

  int index(int n) { return static_cast<int>(uniform_int(0, static_cast<std::uint64_t>(n) - 1)); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller (no rejection, so the draw count per call is fixed).
  double normal(double mean = 0.0, double stddev = 1.0);

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, i - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from {0,...,n-1} via partial Fisher-Yates, sorted
  // ascending for stable downstream iteration order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hetreg
