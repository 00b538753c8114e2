// Unit tests for out-of-sample region benchmarking, fold stability, and the
// sample-size diagnostic.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <hetreg/dataset.hpp>
#include <hetreg/discovery.hpp>
#include <hetreg/errors.hpp>
#include <hetreg/objective.hpp>
#include <hetreg/synthetic.hpp>
#include <hetreg/validation.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <vector>

namespace {

hetreg::GeneratedData planted(int n_rows, int n_agents, double coefficient,
                              std::uint64_t seed) {
  hetreg::SyntheticConfig cfg;
  cfg.n_rows = n_rows;
  cfg.n_agents = n_agents;
  cfg.group_coefficients = {0.0, coefficient};
  cfg.seed = seed;
  return hetreg::generate(cfg);
}

hetreg::DiscoverConfig tree_config(double beta, std::uint64_t seed) {
  hetreg::DiscoverConfig config;
  config.region.kind = hetreg::ModelKind::tree;
  config.region.min_samples_leaf = 100;
  config.beta = beta;
  config.seed = seed;
  return config;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("eta_bound matches its closed form and boundary values") {
  CHECK(hetreg::eta_bound(0.0, 0.7, 0.3, 0.9) == 1.0);   // no rounds, no decay
  CHECK(hetreg::eta_bound(50.0, 0.0, 0.3, 0.9) == 1.0);  // zero margin, no decay
  // exp(-100 * 0.5^6 / 2) = exp(-0.78125), evaluated with 40-digit arithmetic.
  CHECK(hetreg::eta_bound(100.0, 0.5, 0.5, 0.5) ==
        doctest::Approx(0.45783336177161426).epsilon(1e-14));

  double previous = 2.0;
  for (double r = 0.0; r <= 400.0; r += 50.0) {
    const double eta = hetreg::eta_bound(r, 0.4, 0.2, 0.8);
    CHECK(eta < previous);
    CHECK(eta > 0.0);
    CHECK(eta <= 1.0);
    previous = eta;
  }
}

TEST_CASE("eta_bound rejects arguments outside its domain") {
  CHECK_THROWS_AS(hetreg::eta_bound(-1.0, 0.5, 0.5, 0.5), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::eta_bound(10.0, 1.5, 0.5, 0.5), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::eta_bound(10.0, -0.1, 0.5, 0.5), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::eta_bound(10.0, 0.5, 0.0, 0.5), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::eta_bound(10.0, 0.5, 1.1, 0.5), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::eta_bound(10.0, 0.5, 0.5, 0.0), hetreg::ConfigError);
}

TEST_CASE("eta_report locates the half-life round count") {
  const hetreg::EtaReport rep = hetreg::eta_report(10.0, 0.6, 0.25, 0.9);
  CHECK(rep.eta == hetreg::eta_bound(10.0, 0.6, 0.25, 0.9));
  CHECK(hetreg::eta_bound(rep.r_for_half, 0.6, 0.25, 0.9) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.below_half == (rep.eta < 0.5));

  const hetreg::EtaReport flat = hetreg::eta_report(10.0, 0.0, 0.25, 0.9);
  CHECK(flat.eta == 1.0);
  CHECK(std::isinf(flat.r_for_half));
  CHECK_FALSE(flat.below_half);
}

TEST_CASE("make_fold_split deals every row into exactly one portion") {
  hetreg::GeneratedData gd = planted(700, 7, 1.0, 31);
  const int k = 4;
  hetreg::FoldSplit split = hetreg::make_fold_split(gd.data, k, 31);
  REQUIRE(split.portions.size() == static_cast<std::size_t>(k));

  std::vector<int> seen(gd.data.n_rows(), 0);
  for (const auto& portion : split.portions) {
    // Round-robin within each agent: portion sizes stay near n/k.
    CHECK(std::abs(static_cast<double>(portion.size()) - 700.0 / k) <=
          static_cast<double>(gd.data.n_agents()));
    for (int row : portion) {
      REQUIRE(row >= 0);
      REQUIRE(static_cast<std::size_t>(row) < gd.data.n_rows());
      seen[static_cast<std::size_t>(row)]++;
    }
  }
  for (int count : seen) CHECK(count == 1);  // disjoint and covering

  hetreg::FoldSplit again = hetreg::make_fold_split(gd.data, k, 31);
  CHECK(again.portions == split.portions);
  hetreg::FoldSplit other = hetreg::make_fold_split(gd.data, k, 32);
  CHECK(other.portions != split.portions);
}

TEST_CASE("make_fold_split rejects impossible fold counts") {
  hetreg::GeneratedData gd = planted(40, 4, 1.0, 33);
  CHECK_THROWS_AS(hetreg::make_fold_split(gd.data, 1, 0), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::make_fold_split(gd.data, 41, 0), hetreg::ConfigError);
}

TEST_CASE("benchmark_region summarizes the random-subset null faithfully") {
  hetreg::GeneratedData gd = planted(2000, 10, 2.0, 41);
  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.6;
  spec.fractions[1] = 0.0;
  spec.fractions[2] = 0.4;
  spec.seed = 41;
  hetreg::SplitResult parts = hetreg::split_stratified(gd.data, spec);
  const hetreg::NormStats stats = hetreg::normalize(parts.train);
  hetreg::apply_normalization(parts.test, stats);

  hetreg::DiscoveryResult res = hetreg::discover(parts.train, tree_config(0.22, 41));
  hetreg::RegionBenchmark bench =
      hetreg::benchmark_region(res.region, res.outcome_model, parts.train, parts.test,
                               /*n_random=*/50, /*seed=*/5, /*jobs=*/1);

  CHECK(bench.n_random == 50);
  REQUIRE(bench.random_values.size() == 50);
  CHECK(bench.random_mean == doctest::Approx(mean_of(bench.random_values)).epsilon(1e-12));
  CHECK(bench.random_std ==
        doctest::Approx(population_std(bench.random_values)).epsilon(1e-12));
  CHECK(bench.z_score ==
        doctest::Approx((bench.l_test - bench.random_mean) / bench.random_std)
            .epsilon(1e-12));

  // The reported training objective is the plain objective of the returned
  // region on the training data.
  hetreg::Residuals r = hetreg::residuals(res.outcome_model, parts.train);
  hetreg::Membership on_train = hetreg::region_membership(res.region, parts.train.features);
  CHECK(bench.l_train == doctest::Approx(hetreg::l_hat(r, on_train)).epsilon(1e-12));
  long long members = 0;
  for (std::uint8_t m : on_train) members += m;
  CHECK(bench.train_members == members);

  // A region planted this strongly should clear the null comfortably.
  CHECK(bench.z_score > 2.0);
}

TEST_CASE("benchmark_region is seed-deterministic") {
  hetreg::GeneratedData gd = planted(1200, 8, 2.0, 43);
  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.6;
  spec.fractions[1] = 0.0;
  spec.fractions[2] = 0.4;
  spec.seed = 43;
  hetreg::SplitResult parts = hetreg::split_stratified(gd.data, spec);
  const hetreg::NormStats stats = hetreg::normalize(parts.train);
  hetreg::apply_normalization(parts.test, stats);
  hetreg::DiscoveryResult res = hetreg::discover(parts.train, tree_config(0.22, 43));

  hetreg::RegionBenchmark a = hetreg::benchmark_region(res.region, res.outcome_model,
                                                       parts.train, parts.test, 20, 9, 1);
  hetreg::RegionBenchmark b = hetreg::benchmark_region(res.region, res.outcome_model,
                                                       parts.train, parts.test, 20, 9, 1);
  hetreg::RegionBenchmark c = hetreg::benchmark_region(res.region, res.outcome_model,
                                                       parts.train, parts.test, 20, 10, 1);
  CHECK(a.random_values == b.random_values);
  CHECK(a.random_values != c.random_values);
  CHECK(a.l_test == b.l_test);

  CHECK_THROWS_AS(hetreg::benchmark_region(res.region, res.outcome_model, parts.train,
                                           parts.test, 1, 9, 1),
                  hetreg::ConfigError);
}

TEST_CASE("stability reports bounded, reproducible diagnostics") {
  hetreg::GeneratedData pool = planted(800, 6, 1.5, 21);
  hetreg::GeneratedData held = planted(400, 6, 1.5, 22);
  hetreg::normalize(pool.data);
  hetreg::normalize(held.data);
  hetreg::FoldSplit folds = hetreg::make_fold_split(pool.data, 3, 21);

  hetreg::StabilityReport rep =
      hetreg::stability(pool.data, folds, held.data, tree_config(0.25, 21), 21, 1);
  CHECK(rep.folds == 3);
  REQUIRE(rep.fold_training_l_hat.size() == 3);
  for (double l : rep.fold_training_l_hat) CHECK(l >= 0.0);
  CHECK(rep.heldout_eligible >= 0);
  CHECK(rep.heldout_agreement >= 0.0);
  CHECK(rep.heldout_agreement <= 1.0);
  // Mean row count of the fold regions on the held-out set.
  CHECK(rep.mean_test_region_size > 0.0);
  CHECK(rep.mean_test_region_size <= static_cast<double>(held.data.n_rows()));
  CHECK(rep.test_points_in_majority >= 0);
  CHECK(rep.test_points_in_majority <= static_cast<long long>(held.data.n_rows()));
  CHECK(rep.weighted_test_overlap >= 0.0);
  CHECK(rep.pairwise_consistency >= 0.0);
  CHECK(rep.pairwise_consistency <= 1.0);
  CHECK(rep.pairwise_consistency_shuffled >= 0.0);
  CHECK(rep.pairwise_consistency_shuffled <= 1.0);

  hetreg::StabilityReport again =
      hetreg::stability(pool.data, folds, held.data, tree_config(0.25, 21), 21, 1);
  CHECK(again.heldout_agreement == rep.heldout_agreement);
  CHECK(again.mean_test_region_size == rep.mean_test_region_size);
  CHECK(again.fold_training_l_hat == rep.fold_training_l_hat);
}

TEST_CASE("stability accepts an empty test set and validates portions") {
  hetreg::GeneratedData pool = planted(600, 6, 1.5, 23);
  hetreg::normalize(pool.data);
  hetreg::FoldSplit folds = hetreg::make_fold_split(pool.data, 3, 23);
  hetreg::Dataset empty = hetreg::subset(pool.data, {});

  hetreg::StabilityReport rep =
      hetreg::stability(pool.data, folds, empty, tree_config(0.25, 23), 23, 1);
  CHECK(rep.mean_test_region_size == 0.0);
  CHECK(rep.test_points_in_majority == 0);
  CHECK(rep.weighted_test_overlap == 0.0);

  hetreg::FoldSplit overlapping;
  overlapping.portions = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(hetreg::stability(pool.data, overlapping, empty, tree_config(0.25, 23),
                                    23, 1),
                  hetreg::ConfigError);
  hetreg::FoldSplit out_of_range;
  out_of_range.portions = {{0}, {600}};
  CHECK_THROWS_AS(hetreg::stability(pool.data, out_of_range, empty, tree_config(0.25, 23),
                                    23, 1),
                  hetreg::ConfigError);
}
