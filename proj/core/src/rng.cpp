#include "hetreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetreg/errors.hpp"

namespace hetreg {

double Rng::normal(double mean, double stddev) {
  // Box-Muller; clamp u1 away from 0 so log() stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

int Rng::poisson(double lambda) {
  if (lambda < 0.0) throw ConfigError("poisson rate must be >= 0");
  if (lambda == 0.0) return 0;
  double limit = std::exp(-lambda);
  int k = 0;
  double prod = uniform();
  while (prod > limit) {
    ++k;
    prod *= uniform();
  }
  return k;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (k < 0 || k > n) throw ConfigError("sample size out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(uniform_int(0, static_cast<std::uint64_t>(n - i) - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace hetreg
