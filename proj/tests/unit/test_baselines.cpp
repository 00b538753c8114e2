// Unit tests for the direct-model baseline and the shared evaluation metrics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <hetreg/baselines.hpp>
#include <hetreg/dataset.hpp>
#include <hetreg/errors.hpp>
#include <hetreg/learners.hpp>
#include <hetreg/synthetic.hpp>

#include <cstdint>
#include <vector>

TEST_CASE("region_metrics computes precision, recall, and AUC on a hand case") {
  const std::vector<double> scores = {0.9, 0.8, 0.2, 0.6};
  const hetreg::Membership truth = {1, 0, 0, 1};

  hetreg::EvaluationReport rep = hetreg::region_metrics(scores, 0.5, truth);
  // Predicted members: rows 0, 1, 3.  Two of the three are true members, and
  // both true members were found.
  CHECK(rep.region_precision == doctest::Approx(2.0 / 3.0));
  CHECK(rep.region_recall == doctest::Approx(1.0));
  // True rows {0,3} vs false rows {1,2}: 0.9>0.8, 0.9>0.2, 0.6<0.8, 0.6>0.2,
  // so 3 of 4 pairs are ordered correctly.
  CHECK(rep.region_auc == doctest::Approx(0.75));

  hetreg::EvaluationReport none = hetreg::region_metrics(scores, 1.5, truth);
  CHECK(none.region_precision == 0.0);  // nothing predicted
  CHECK(none.region_recall == 0.0);
  CHECK(none.region_auc == doctest::Approx(0.75));  // cutoff-independent
}

TEST_CASE("partition_accuracy is label-swap invariant") {
  CHECK(hetreg::partition_accuracy({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(hetreg::partition_accuracy({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(hetreg::partition_accuracy({0, 1, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(0.5));
  CHECK(hetreg::partition_accuracy({0, 0, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(hetreg::partition_accuracy({0, 1}, {0, 1, 1}), hetreg::ConfigError);
  CHECK_THROWS_AS(hetreg::partition_accuracy({}, {}), hetreg::ConfigError);
}

TEST_CASE("direct_baseline recovers a strongly planted region and grouping") {
  hetreg::SyntheticConfig cfg;
  cfg.n_rows = 1500;
  cfg.n_agents = 8;
  cfg.group_coefficients = {0.0, 2.0};
  cfg.seed = 51;
  hetreg::GeneratedData gd = hetreg::generate(cfg);

  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.6;
  spec.fractions[1] = 0.2;
  spec.fractions[2] = 0.2;
  spec.seed = 51;
  hetreg::SplitResult parts = hetreg::split_stratified(gd.data, spec);
  const hetreg::NormStats stats = hetreg::normalize(parts.train);
  hetreg::apply_normalization(parts.validation, stats);
  hetreg::apply_normalization(parts.test, stats);

  hetreg::DirectBaselineResult res =
      hetreg::direct_baseline(parts.train, parts.validation, parts.test, 0.22,
                              hetreg::default_tree_grid(), /*seed=*/51, /*jobs=*/1);

  REQUIRE(res.test_scores.size() == parts.test.n_rows());
  REQUIRE(res.test_region.size() == parts.test.n_rows());
  REQUIRE(res.agent_coefficients.size() == 8);
  REQUIRE(res.grouping.size() == 8);
  for (std::size_t i = 0; i < res.test_scores.size(); ++i) {
    CHECK(res.test_region[i] == (res.test_scores[i] >= res.cutoff ? 1 : 0));
  }
  int in_group_one = 0;
  for (std::uint8_t g : res.grouping) in_group_one += g;
  CHECK(in_group_one == 4);  // ceil(8/2)

  // Against the planted truth, the baseline should be clearly better than
  // chance on both the region and the agent grouping.
  hetreg::Membership truth_test;
  for (int row : parts.test_rows) {
    truth_test.push_back(gd.truth.region[static_cast<std::size_t>(row)]);
  }
  CHECK(hetreg::auc_score(res.test_scores, truth_test) > 0.6);

  hetreg::Grouping truth_groups;
  for (int g : gd.truth.agent_group) {
    truth_groups.push_back(static_cast<std::uint8_t>(g));
  }
  CHECK(hetreg::partition_accuracy(res.grouping, truth_groups) >= 0.75);
}

TEST_CASE("direct_baseline is deterministic in its seed") {
  hetreg::SyntheticConfig cfg;
  cfg.n_rows = 900;
  cfg.n_agents = 6;
  cfg.group_coefficients = {0.0, 1.5};
  cfg.seed = 53;
  hetreg::GeneratedData gd = hetreg::generate(cfg);

  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.6;
  spec.fractions[1] = 0.2;
  spec.fractions[2] = 0.2;
  spec.seed = 53;
  hetreg::SplitResult parts = hetreg::split_stratified(gd.data, spec);
  const hetreg::NormStats stats = hetreg::normalize(parts.train);
  hetreg::apply_normalization(parts.validation, stats);
  hetreg::apply_normalization(parts.test, stats);

  hetreg::DirectBaselineResult a = hetreg::direct_baseline(
      parts.train, parts.validation, parts.test, 0.22, hetreg::default_tree_grid(), 7, 1);
  hetreg::DirectBaselineResult b = hetreg::direct_baseline(
      parts.train, parts.validation, parts.test, 0.22, hetreg::default_tree_grid(), 7, 1);
  CHECK(a.test_scores == b.test_scores);
  CHECK(a.cutoff == b.cutoff);
  CHECK(a.agent_coefficients == b.agent_coefficients);
  CHECK(a.grouping == b.grouping);
}
