// Unit tests for agent permutation, permutation p-values, and the beta scan.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <hetreg/beta_tuning.hpp>
#include <hetreg/dataset.hpp>
#include <hetreg/discovery.hpp>
#include <hetreg/errors.hpp>
#include <hetreg/synthetic.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

namespace {

hetreg::Dataset three_row_dataset() {
  hetreg::Dataset d;
  d.features = hetreg::Matrix(3, 1);
  for (std::size_t i = 0; i < 3; ++i) d.features.at(i, 0) = static_cast<double>(i);
  d.feature_names = {"x"};
  d.agent_index = {0, 1, 2};
  d.agent_names = {"a", "b", "c"};
  d.decisions = {0, 1, 0};
  return d;
}

hetreg::Dataset planted(int n_rows, int n_agents, double coefficient, std::uint64_t seed) {
  hetreg::SyntheticConfig cfg;
  cfg.n_rows = n_rows;
  cfg.n_agents = n_agents;
  cfg.group_coefficients = {0.0, coefficient};
  cfg.seed = seed;
  hetreg::GeneratedData gd = hetreg::generate(cfg);
  hetreg::normalize(gd.data);
  return gd.data;
}

hetreg::DiscoverConfig tree_config(std::uint64_t seed) {
  hetreg::DiscoverConfig config;
  config.region.kind = hetreg::ModelKind::tree;
  config.region.min_samples_leaf = 50;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("permute_agents shuffles labels and preserves everything else") {
  hetreg::Dataset d = three_row_dataset();
  hetreg::Dataset p = hetreg::permute_agents(d, 5);
  CHECK(p.features.data == d.features.data);
  CHECK(p.decisions == d.decisions);
  CHECK(p.agent_names == d.agent_names);

  std::vector<int> original = d.agent_index;
  std::vector<int> shuffled = p.agent_index;
  std::sort(original.begin(), original.end());
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(original == shuffled);  // same multiset of labels

  CHECK(hetreg::permute_agents(d, 5).agent_index == p.agent_index);  // seeded
}

TEST_CASE("permute_agents draws arrangements uniformly") {
  hetreg::Dataset d = three_row_dataset();
  std::map<int, int> counts;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    hetreg::Dataset p = hetreg::permute_agents(d, static_cast<std::uint64_t>(t));
    counts[p.agent_index[0] * 9 + p.agent_index[1] * 3 + p.agent_index[2]]++;
  }
  REQUIRE(counts.size() == 6);  // all 3! arrangements occur
  for (const auto& [arrangement, n] : counts) {
    CHECK(static_cast<double>(n) / trials == doctest::Approx(1.0 / 6.0).epsilon(0.12));
  }
}

TEST_CASE("permutation p-value counts nulls at or above the observation") {
  CHECK(hetreg::permutation_p_value(0.5, {0.1, 0.2, 0.3}) == doctest::Approx(1.0 / 4.0));
  CHECK(hetreg::permutation_p_value(0.5, {0.6, 0.5, 0.4}) == doctest::Approx(3.0 / 4.0));
  CHECK(hetreg::permutation_p_value(0.5, {0.6, 0.7}) == doctest::Approx(1.0));
  CHECK(hetreg::permutation_p_value(0.0, {0.0}) == doctest::Approx(1.0));  // ties count
  CHECK_THROWS_AS(hetreg::permutation_p_value(0.5, {}), hetreg::ConfigError);
}

TEST_CASE("the default grid runs from 0.02 to 0.42 in steps of 0.04") {
  const std::vector<double> grid = hetreg::default_beta_grid();
  REQUIRE(grid.size() == 11);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i] == doctest::Approx(0.02 + 0.04 * static_cast<double>(i)));
  }
}

TEST_CASE("tune_beta reports consistent candidates and selects the minimal p") {
  hetreg::Dataset d = planted(400, 4, 2.0, 3);
  hetreg::BetaScanConfig scan;
  scan.candidates = {0.1, 0.2, 0.4};
  scan.permutations = 9;
  scan.seed = 3;
  hetreg::BetaScan result = hetreg::tune_beta(d, tree_config(3), scan);

  REQUIRE(result.candidates.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const hetreg::BetaCandidateResult& c = result.candidates[k];
    CHECK(c.beta == scan.candidates[k]);
    CHECK(c.null_values.size() == 9);
    CHECK(c.p_value > 0.0);
    CHECK(c.p_value <= 1.0);
    CHECK(c.p_value == hetreg::permutation_p_value(c.q_obs, c.null_values));
  }
  CHECK(result.selected_beta == scan.candidates[result.selected_index]);
  for (std::size_t k = 0; k < 3; ++k) {
    const double sel = result.candidates[result.selected_index].p_value;
    const double other = result.candidates[k].p_value;
    const bool strictly_better = sel < other;
    const bool tie_to_earlier = sel == other && result.selected_index <= k;
    CHECK((strictly_better || tie_to_earlier));
  }
}

TEST_CASE("tune_beta is deterministic and independent of the jobs count") {
  hetreg::Dataset d = planted(300, 4, 1.5, 7);
  hetreg::BetaScanConfig scan;
  scan.candidates = {0.15, 0.3};
  scan.permutations = 6;
  scan.seed = 11;
  hetreg::BetaScan a = hetreg::tune_beta(d, tree_config(7), scan);
  hetreg::BetaScan b = hetreg::tune_beta(d, tree_config(7), scan);
  scan.jobs = 4;
  hetreg::BetaScan c = hetreg::tune_beta(d, tree_config(7), scan);

  REQUIRE(a.candidates.size() == b.candidates.size());
  REQUIRE(a.candidates.size() == c.candidates.size());
  for (std::size_t k = 0; k < a.candidates.size(); ++k) {
    CHECK(a.candidates[k].q_obs == b.candidates[k].q_obs);
    CHECK(a.candidates[k].q_obs == c.candidates[k].q_obs);
    CHECK(a.candidates[k].null_values == b.candidates[k].null_values);
    CHECK(a.candidates[k].null_values == c.candidates[k].null_values);
  }
  CHECK(a.selected_beta == c.selected_beta);
}

TEST_CASE("observed objectives rise as beta shrinks around a planted region") {
  // Smaller beta concentrates the region on the strongest disagreement, so
  // q_obs at the smallest candidate should exceed q_obs at the largest.
  hetreg::Dataset d = planted(900, 6, 2.5, 13);
  hetreg::BetaScanConfig scan;
  scan.candidates = {0.1, 0.8};
  scan.permutations = 3;
  scan.seed = 13;
  hetreg::BetaScan result = hetreg::tune_beta(d, tree_config(13), scan);
  CHECK(result.candidates[0].q_obs > result.candidates[1].q_obs);
}

TEST_CASE("tune_beta rejects bad scan configurations") {
  hetreg::Dataset d = planted(200, 3, 1.0, 17);
  hetreg::BetaScanConfig scan;
  scan.permutations = 5;
  CHECK_THROWS_AS(hetreg::tune_beta(d, tree_config(17), scan), hetreg::ConfigError);  // no betas

  scan.candidates = {0.2};
  scan.permutations = 0;
  CHECK_THROWS_AS(hetreg::tune_beta(d, tree_config(17), scan), hetreg::ConfigError);

  scan.candidates = {1.5};
  scan.permutations = 5;
  CHECK_THROWS_AS(hetreg::tune_beta(d, tree_config(17), scan), hetreg::ConfigError);
}
