#include <algorithm>
#include <cmath>
#include <string>

#include "hetreg/dataset.hpp"
#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

// Stream tag separating the split's RNG use from other consumers of a seed.
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;  // "split"

// Largest-remainder allotment of `total` rows over 3 parts, after the
// reserved minima.  Remainder ties go to the lowest part index.
std::array<int, 3> allot(int total, const double fractions[3], const int minima[3]) {
  int reserved = minima[0] + minima[1] + minima[2];
  int remaining = total - reserved;

  std::array<int, 3> counts{minima[0], minima[1], minima[2]};
  double targets[3];
  int assigned = 0;
  for (int k = 0; k < 3; ++k) {
    targets[k] = fractions[k] * remaining;
    int base = static_cast<int>(std::floor(targets[k]));
    counts[k] += base;
    assigned += base;
  }

  int leftover = remaining - assigned;
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return targets[a] - std::floor(targets[a]) > targets[b] - std::floor(targets[b]);
  });
  for (int i = 0; i < leftover; ++i) counts[order[static_cast<std::size_t>(i)]] += 1;
  return counts;
}

}  // namespace

SplitResult split_stratified(const Dataset& d, const SplitSpec& spec) {
  double frac_sum = spec.fractions[0] + spec.fractions[1] + spec.fractions[2];
  for (double f : spec.fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be >= 0");
  }
  if (std::abs(frac_sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  for (int m : spec.min_per_agent) {
    if (m < 0) throw ConfigError("min_per_agent entries must be >= 0");
  }

  int n_agents = d.n_agents();
  std::vector<std::vector<int>> rows_of_agent(static_cast<std::size_t>(n_agents));
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    rows_of_agent[static_cast<std::size_t>(d.agent_index[r])].push_back(static_cast<int>(r));
  }

  int reserved = spec.min_per_agent[0] + spec.min_per_agent[1] + spec.min_per_agent[2];
  std::vector<int> part_rows[3];
  SplitResult result;
  result.per_agent_counts.resize(static_cast<std::size_t>(n_agents));

  for (int a = 0; a < n_agents; ++a) {
    auto& rows = rows_of_agent[static_cast<std::size_t>(a)];
    if (static_cast<int>(rows.size()) < reserved) {
      throw DataError("agent '" + d.agent_names[static_cast<std::size_t>(a)] + "' has " +
                      std::to_string(rows.size()) + " rows but min_per_agent needs " +
                      std::to_string(reserved));
    }
    std::array<int, 3> counts =
        allot(static_cast<int>(rows.size()), spec.fractions, spec.min_per_agent);

    Rng rng(derive_seed(spec.seed, {kSplitStream, static_cast<std::uint64_t>(a)}));
    rng.shuffle(rows);

    std::size_t cursor = 0;
    for (int k = 0; k < 3; ++k) {
      for (int i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) {
        part_rows[k].push_back(rows[cursor++]);
      }
    }
    result.per_agent_counts[static_cast<std::size_t>(a)] = counts;
  }

  // Keep original row order within each part so splits are stable views.
  for (auto& rows : part_rows) std::sort(rows.begin(), rows.end());
  result.train = subset(d, part_rows[0]);
  result.validation = subset(d, part_rows[1]);
  result.test = subset(d, part_rows[2]);
  result.train_rows = std::move(part_rows[0]);
  result.validation_rows = std::move(part_rows[1]);
  result.test_rows = std::move(part_rows[2]);
  return result;
}

}  // namespace hetreg
