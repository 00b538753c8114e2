#include "hetreg/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "hetreg/errors.hpp"
#include "hetreg/parallel.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kSubsetStream = 0x737562736574ULL;   // "subset"
constexpr std::uint64_t kFoldStream = 0x666f6c64ULL;         // "fold"
constexpr std::uint64_t kShuffleStream = 0x7368756666ULL;    // "shuff"

}  // namespace

RegionBenchmark benchmark_region(const Region& region, const Model& f, const Dataset& train,
                                 const Dataset& test, int n_random, std::uint64_t seed,
                                 int jobs) {
  if (n_random < 2) throw ConfigError("benchmark_region: n_random must be >= 2");

  Residuals r_train = residuals(f, train);
  Residuals r_test = residuals(f, test);

  Membership train_members = region_membership(region, train.features);
  Membership test_members = region_membership(region, test.features);

  RegionBenchmark out;
  out.n_random = n_random;
  for (std::uint8_t m : train_members) out.train_members += m;
  for (std::uint8_t m : test_members) out.test_members += m;
  if (out.train_members == 0) {
    throw ComputeError("benchmark_region: the region contains no training rows");
  }
  if (out.test_members == 0) {
    throw ComputeError("benchmark_region: the region contains no test rows");
  }

  out.l_train = l_hat(r_train, train_members);
  out.l_test = l_hat(r_test, test_members);

  // Null reference: uniformly random test-row subsets of the same size.
  std::size_t n_test = test.n_rows();
  int k = static_cast<int>(out.test_members);
  out.random_values.assign(static_cast<std::size_t>(n_random), 0.0);
  parallel_for(static_cast<std::size_t>(n_random), jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {kSubsetStream, static_cast<std::uint64_t>(i)}));
    std::vector<int> rows = rng.sample_without_replacement(static_cast<int>(n_test), k);
    Membership s(n_test, 0);
    for (int row : rows) s[static_cast<std::size_t>(row)] = 1;
    out.random_values[i] = l_hat(r_test, s);
  });

  double mean = 0.0;
  for (double v : out.random_values) mean += v;
  mean /= static_cast<double>(n_random);
  double ss = 0.0;
  for (double v : out.random_values) ss += (v - mean) * (v - mean);
  double stddev = std::sqrt(ss / static_cast<double>(n_random));

  out.random_mean = mean;
  out.random_std = stddev;
  if (stddev == 0.0) {
    throw ComputeError("benchmark_region: the random-subset null has zero spread");
  }
  out.z_score = (out.l_test - mean) / stddev;
  return out;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

FoldSplit make_fold_split(const Dataset& pool, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold split: k must be >= 2");
  if (static_cast<std::size_t>(k) > pool.n_rows()) {
    throw ConfigError("fold split: k exceeds the number of rows");
  }

  FoldSplit split;
  split.portions.assign(static_cast<std::size_t>(k), {});

  // Deal each agent's rows round-robin after a seeded shuffle; agents with
  // fewer than k rows simply miss some portions.
  std::vector<std::vector<int>> rows_of_agent(static_cast<std::size_t>(pool.n_agents()));
  for (std::size_t i = 0; i < pool.n_rows(); ++i) {
    rows_of_agent[static_cast<std::size_t>(pool.agent_index[i])].push_back(
        static_cast<int>(i));
  }
  for (std::size_t a = 0; a < rows_of_agent.size(); ++a) {
    auto& rows = rows_of_agent[a];
    Rng rng(derive_seed(seed, {kFoldStream, static_cast<std::uint64_t>(a)}));
    rng.shuffle(rows);
    int start = static_cast<int>(a) % k;  // stagger so small agents spread out
    for (std::size_t i = 0; i < rows.size(); ++i) {
      split.portions[static_cast<std::size_t>((start + static_cast<int>(i)) % k)].push_back(
          rows[i]);
    }
  }
  for (auto& portion : split.portions) std::sort(portion.begin(), portion.end());
  return split;
}

StabilityReport stability(const Dataset& pool, const FoldSplit& folds, const Dataset& test,
                          const DiscoverConfig& config, std::uint64_t seed, int jobs) {
  int k = static_cast<int>(folds.portions.size());
  if (k < 2) throw ConfigError("stability: need at least 2 folds");
  std::size_t n = pool.n_rows();
  bool have_test = test.n_rows() > 0;

  std::vector<std::uint8_t> heldout_fold(n, 0);
  std::vector<std::uint8_t> is_heldout(n, 0);
  for (int f = 0; f < k; ++f) {
    for (int row : folds.portions[static_cast<std::size_t>(f)]) {
      if (row < 0 || static_cast<std::size_t>(row) >= n) {
        throw ConfigError("stability: portion row index out of range");
      }
      if (is_heldout[static_cast<std::size_t>(row)]) {
        throw ConfigError("stability: portions must be disjoint");
      }
      is_heldout[static_cast<std::size_t>(row)] = 1;
      heldout_fold[static_cast<std::size_t>(row)] = static_cast<std::uint8_t>(f);
    }
  }

  // One discovery per fold, trained on pool minus the fold's portion.
  int n_agents = pool.n_agents();
  std::vector<Membership> pool_member(static_cast<std::size_t>(k));
  std::vector<Membership> test_member(static_cast<std::size_t>(k));
  std::vector<Grouping> fold_grouping(static_cast<std::size_t>(k));
  std::vector<double> fold_l(static_cast<std::size_t>(k), 0.0);

  parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
    std::vector<int> train_rows;
    train_rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(is_heldout[i] && heldout_fold[i] == static_cast<std::uint8_t>(f))) {
        train_rows.push_back(static_cast<int>(i));
      }
    }
    Dataset train = subset(pool, train_rows);
    DiscoverConfig fold_config = config;
    fold_config.jobs = 1;
    fold_config.seed = derive_seed(seed, {kFoldStream, static_cast<std::uint64_t>(f)});
    DiscoveryResult result = discover(train, fold_config);

    pool_member[f] = region_membership(result.region, pool.features);
    if (have_test) test_member[f] = region_membership(result.region, test.features);
    fold_grouping[f] = result.grouping;
    fold_l[f] = result.training_l_hat;
  });

  StabilityReport report;
  report.folds = k;
  report.fold_training_l_hat = fold_l;

  // (1) held-out agreement.
  int train_majority = (k - 1 + 1) / 2;  // ceil((k-1)/2)
  long long eligible = 0;
  long long agreed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_heldout[i]) continue;
    int hold = heldout_fold[i];
    int c = 0;
    for (int f = 0; f < k; ++f) {
      if (f != hold && pool_member[static_cast<std::size_t>(f)][i]) ++c;
    }
    if (c >= train_majority) {
      ++eligible;
      if (pool_member[static_cast<std::size_t>(hold)][i]) ++agreed;
    }
  }
  report.heldout_eligible = eligible;
  report.heldout_agreement =
      eligible == 0 ? 1.0 : static_cast<double>(agreed) / static_cast<double>(eligible);

  // (2) test-region overlap.
  int fold_majority = (3 * k + 3) / 4;  // ceil(0.75 k)
  if (have_test) {
    double size_sum = 0.0;
    for (int f = 0; f < k; ++f) {
      long long count = 0;
      for (std::uint8_t m : test_member[static_cast<std::size_t>(f)]) count += m;
      size_sum += static_cast<double>(count);
    }
    report.mean_test_region_size = size_sum / static_cast<double>(k);
    for (std::size_t j = 0; j < test.n_rows(); ++j) {
      int c = 0;
      for (int f = 0; f < k; ++f) c += test_member[static_cast<std::size_t>(f)][j];
      if (c >= fold_majority) {
        report.test_points_in_majority += 1;
        report.weighted_test_overlap += static_cast<double>(c) / static_cast<double>(k);
      }
    }
  }

  // (3) pairwise grouping consistency among pairs with region presence.
  std::vector<std::vector<std::uint8_t>> present(
      static_cast<std::size_t>(k), std::vector<std::uint8_t>(static_cast<std::size_t>(n_agents), 0));
  for (int f = 0; f < k; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pool_member[static_cast<std::size_t>(f)][i]) {
        present[static_cast<std::size_t>(f)][static_cast<std::size_t>(pool.agent_index[i])] = 1;
      }
    }
    if (have_test) {
      for (std::size_t j = 0; j < test.n_rows(); ++j) {
        if (test_member[static_cast<std::size_t>(f)][j]) {
          present[static_cast<std::size_t>(f)][static_cast<std::size_t>(test.agent_index[j])] = 1;
        }
      }
    }
  }

  std::vector<Grouping> shuffled(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    shuffled[static_cast<std::size_t>(f)] = fold_grouping[static_cast<std::size_t>(f)];
    Rng rng(derive_seed(seed, {kShuffleStream, static_cast<std::uint64_t>(f)}));
    rng.shuffle(shuffled[static_cast<std::size_t>(f)]);
  }

  auto consistent_pairs = [&](const std::vector<Grouping>& groupings) {
    long long eligible_count = 0;
    long long consistent = 0;
    for (int a = 0; a < n_agents; ++a) {
      for (int b = a + 1; b < n_agents; ++b) {
        int both_present = 0;
        int same = 0;
        for (int f = 0; f < k; ++f) {
          const auto& g = groupings[static_cast<std::size_t>(f)];
          if (present[static_cast<std::size_t>(f)][static_cast<std::size_t>(a)] &&
              present[static_cast<std::size_t>(f)][static_cast<std::size_t>(b)]) {
            ++both_present;
          }
          if (g[static_cast<std::size_t>(a)] == g[static_cast<std::size_t>(b)]) ++same;
        }
        if (both_present < fold_majority) continue;
        ++eligible_count;
        if (same >= fold_majority || (k - same) >= fold_majority) ++consistent;
      }
    }
    return std::pair<long long, long long>(eligible_count, consistent);
  };

  auto [eligible_pairs, consistent] = consistent_pairs(fold_grouping);
  report.eligible_pairs = eligible_pairs;
  report.pairwise_consistency =
      eligible_pairs == 0 ? 1.0
                          : static_cast<double>(consistent) / static_cast<double>(eligible_pairs);
  auto [eligible_shuffled, consistent_shuffled] = consistent_pairs(shuffled);
  report.pairwise_consistency_shuffled =
      eligible_shuffled == 0
          ? 1.0
          : static_cast<double>(consistent_shuffled) / static_cast<double>(eligible_shuffled);
  return report;
}

// ---------------------------------------------------------------------------
// Sample-size diagnostic
// ---------------------------------------------------------------------------

double eta_bound(double r, double alpha, double beta, double omega) {
  if (r < 0.0) throw ConfigError("eta_bound: r must be >= 0");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("eta_bound: alpha must be in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("eta_bound: beta must be in (0, 1]");
  if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("eta_bound: omega must be in (0, 1]");
  return std::exp(-(r * alpha * alpha * beta * beta * omega * omega) / 2.0);
}

EtaReport eta_report(double r, double alpha, double beta, double omega) {
  EtaReport out;
  out.eta = eta_bound(r, alpha, beta, omega);
  double denom = alpha * alpha * beta * beta * omega * omega;
  out.r_for_half = denom > 0.0 ? 2.0 * std::log(2.0) / denom
                               : std::numeric_limits<double>::infinity();
  out.below_half = out.eta < 0.5;
  return out;
}

}  // namespace hetreg
