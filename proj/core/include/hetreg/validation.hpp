#pragma once

// Out-of-sample checks for a discovered region.
//
// benchmark_region: the objective of the learned region on held-out data,
// compared against uniformly random test-row subsets of the same size; a
// region carrying real structure should clear mean + 2 std of that null.
//
// stability: refit the whole pipeline on k overlapping training folds and
// report (1) how often points selected by most training folds are selected
// again when held out, (2) how much the folds' test regions overlap, and
// (3) how consistently agent pairs land on the same/opposite sides.
//
// eta_bound: closed-form bound on the chance that the noise in a grouping
// estimate survives R discovery rounds; eta = exp(-R * alpha^2 * beta^2 *
// omega^2 / 2), decreasing in every argument.

#include <cstdint>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/discovery.hpp"

namespace hetreg {

struct RegionBenchmark {
  double l_train = 0.0;
  double l_test = 0.0;
  long long train_members = 0;
  long long test_members = 0;
  int n_random = 0;
  double random_mean = 0.0;
  double random_std = 0.0;  // population convention, like the data module
  double z_score = 0.0;     // (l_test - random_mean) / random_std
  std::vector<double> random_values;
};

// `f` is the outcome model the region was discovered with; train is the data
// it was discovered on.  Throws ComputeError if the test region is empty or
// n_random < 2.
RegionBenchmark benchmark_region(const Region& region, const Model& f, const Dataset& train,
                                 const Dataset& test, int n_random, std::uint64_t seed,
                                 int jobs);

// ---------------------------------------------------------------------------
// Stability across folds
// ---------------------------------------------------------------------------

// k disjoint row-index portions of a pool dataset.  Fold i trains on the
// pool minus portion i and holds portion i out.  Portions are dealt within
// each agent from a seeded shuffle, so every fold sees (almost) every agent.
struct FoldSplit {
  std::vector<std::vector<int>> portions;
};

FoldSplit make_fold_split(const Dataset& pool, int k, std::uint64_t seed);

struct StabilityReport {
  int folds = 0;
  // (1) points in the region under at least ceil((k-1)/2) of their training
  // folds: how many there are, and the fraction also selected when held out.
  long long heldout_eligible = 0;
  double heldout_agreement = 1.0;  // vacuously 1 when nothing is eligible
  // (2) overlap of test regions across folds.
  double mean_test_region_size = 0.0;
  long long test_points_in_majority = 0;  // rows in >= ceil(0.75k) fold regions
  double weighted_test_overlap = 0.0;     // those rows, each weighted (folds present)/k
  // (3) agent pairs present in the region in >= ceil(0.75k) folds: fraction
  // keeping the same side-relationship in >= ceil(0.75k) folds, plus the
  // same fraction after shuffling groupings (a chance baseline).
  long long eligible_pairs = 0;
  double pairwise_consistency = 1.0;
  double pairwise_consistency_shuffled = 1.0;
  std::vector<double> fold_training_l_hat;
};

// The discover config's seed is re-derived per fold.  `test` may be empty
// (n_rows == 0), in which case the test-overlap statistics are zero and
// pair presence uses pool rows only.
StabilityReport stability(const Dataset& pool, const FoldSplit& folds, const Dataset& test,
                          const DiscoverConfig& config, std::uint64_t seed, int jobs);

// ---------------------------------------------------------------------------
// Sample-size diagnostic
// ---------------------------------------------------------------------------

struct EtaReport {
  double eta = 1.0;
  double r_for_half = 0.0;  // rounds needed to push eta below 1/2
  bool below_half = false;
};

// r: discovery rounds (>= 0); alpha: per-round flip margin in [0, 1];
// beta: region fraction in (0, 1]; omega: agent weight in (0, 1].
double eta_bound(double r, double alpha, double beta, double omega);
EtaReport eta_report(double r, double alpha, double beta, double omega);

}  // namespace hetreg
