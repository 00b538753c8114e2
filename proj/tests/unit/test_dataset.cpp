// Unit tests for dataset loading, validation, normalization, and the
// stratified three-way split.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <hetreg/dataset.hpp>
#include <hetreg/errors.hpp>
#include <hetreg/rng.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "hetreg-unit";
  fs::create_directories(dir);
  return dir / name;
}

hetreg::Dataset sample_dataset() {
  hetreg::Dataset d;
  d.features = hetreg::Matrix(5, 2);
  const double values[5][2] = {{1.5, -2.0}, {0.25, 4.0}, {-3.0, 0.5}, {2.0, 2.0}, {0.0, -1.25}};
  for (std::size_t i = 0; i < 5; ++i) {
    d.features.at(i, 0) = values[i][0];
    d.features.at(i, 1) = values[i][1];
  }
  d.feature_names = {"alpha", "beta"};
  d.agent_index = {0, 1, 2, 1, 0};
  d.agent_names = {"ann", "bob", "cay"};
  d.decisions = {1, 0, 1, 1, 0};
  return d;
}

hetreg::Dataset random_dataset(hetreg::Rng& rng, int n_rows, int n_agents) {
  hetreg::Dataset d;
  d.features = hetreg::Matrix(n_rows, 2);
  d.feature_names = {"u", "v"};
  for (int a = 0; a < n_agents; ++a) d.agent_names.push_back("agent" + std::to_string(a));
  for (int i = 0; i < n_rows; ++i) {
    d.features.at(i, 0) = rng.uniform();
    d.features.at(i, 1) = rng.uniform();
    // Guarantee every agent appears at least once so the split always has
    // material to stratify.
    d.agent_index.push_back(i < n_agents ? i : rng.index(n_agents));
    d.decisions.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST_CASE("csv round trip preserves every field") {
  hetreg::Dataset d = sample_dataset();
  fs::path path = temp_file("roundtrip.csv");
  hetreg::write_csv(path.string(), d);
  hetreg::Dataset back = hetreg::load_csv(path.string(), {});

  CHECK(back.feature_names == d.feature_names);
  CHECK(back.agent_names == d.agent_names);
  CHECK(back.decisions == d.decisions);
  REQUIRE(back.n_rows() == d.n_rows());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.agent_names[back.agent_index[i]] == d.agent_names[d.agent_index[i]]);
    CHECK(back.features.at(i, 0) == d.features.at(i, 0));  // exact: shortest-round-trip floats
    CHECK(back.features.at(i, 1) == d.features.at(i, 1));
  }
}

TEST_CASE("csv honors custom agent and decision column names") {
  hetreg::Dataset d = sample_dataset();
  hetreg::CsvSchema schema;
  schema.agent_column = "judge";
  schema.decision_column = "ruling";
  fs::path path = temp_file("custom_columns.csv");
  hetreg::write_csv(path.string(), d, schema);

  hetreg::Dataset back = hetreg::load_csv(path.string(), schema);
  CHECK(back.decisions == d.decisions);
  CHECK_THROWS_AS(hetreg::load_csv(path.string(), {}), hetreg::DataError);  // default names absent
}

TEST_CASE("csv loader rejects malformed inputs") {
  fs::path missing = temp_file("does_not_exist.csv");
  fs::remove(missing);
  CHECK_THROWS_AS(hetreg::load_csv(missing.string(), {}), hetreg::DataError);

  fs::path bad = temp_file("bad_decision.csv");
  std::ofstream(bad) << "agent,decision,x\nann,2,0.5\n";
  CHECK_THROWS_AS(hetreg::load_csv(bad.string(), {}), hetreg::DataError);

  fs::path ragged = temp_file("ragged.csv");
  std::ofstream(ragged) << "agent,decision,x\nann,1,0.5\nbob,0\n";
  CHECK_THROWS_AS(hetreg::load_csv(ragged.string(), {}), hetreg::DataError);
}

TEST_CASE("validate_dataset flags inconsistent shapes") {
  hetreg::Dataset d = sample_dataset();
  CHECK_NOTHROW(hetreg::validate_dataset(d));

  hetreg::Dataset short_decisions = d;
  short_decisions.decisions.pop_back();
  CHECK_THROWS_AS(hetreg::validate_dataset(short_decisions), hetreg::DataError);

  hetreg::Dataset bad_agent = d;
  bad_agent.agent_index[0] = 7;  // out of range of agent_names
  CHECK_THROWS_AS(hetreg::validate_dataset(bad_agent), hetreg::DataError);
}

TEST_CASE("subset keeps the selected rows in order") {
  hetreg::Dataset d = sample_dataset();
  hetreg::Dataset s = hetreg::subset(d, {4, 1});
  REQUIRE(s.n_rows() == 2);
  CHECK(s.features.at(0, 0) == 0.0);
  CHECK(s.features.at(1, 0) == 0.25);
  CHECK(s.agent_index[0] == 0);
  CHECK(s.agent_index[1] == 1);
  CHECK(s.decisions == std::vector<std::uint8_t>{0, 0});
  CHECK(s.agent_names == d.agent_names);
}

TEST_CASE("normalize centers and scales every column (population convention)") {
  hetreg::Dataset d = sample_dataset();
  hetreg::NormStats stats = hetreg::normalize(d);
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mean += d.features.at(i, j);
    mean /= 5.0;
    for (std::size_t i = 0; i < 5; ++i) {
      var += (d.features.at(i, j) - mean) * (d.features.at(i, j) - mean);
    }
    var /= 5.0;
    CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats.degenerate[j] == 0);
  }
}

TEST_CASE("apply_normalization reproduces the training transform") {
  hetreg::Dataset d = sample_dataset();
  hetreg::Dataset copy = d;
  hetreg::NormStats stats = hetreg::normalize(d);
  hetreg::apply_normalization(copy, stats);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(copy.features.at(i, j) == d.features.at(i, j));
  }
}

TEST_CASE("zero-variance columns become zeros and are flagged") {
  hetreg::Dataset d = sample_dataset();
  for (std::size_t i = 0; i < 5; ++i) d.features.at(i, 1) = 42.0;
  hetreg::NormStats stats = hetreg::normalize(d);
  CHECK(stats.degenerate == std::vector<std::uint8_t>{0, 1});
  CHECK(stats.stddev[1] == 0.0);
  CHECK_FALSE(stats.warnings.empty());
  for (std::size_t i = 0; i < 5; ++i) CHECK(d.features.at(i, 1) == 0.0);
}

TEST_CASE("stratified split partitions the rows exactly") {
  hetreg::Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_agents = 2 + static_cast<int>(rng.uniform_int(0, 4));
    const int n_rows = 30 + static_cast<int>(rng.uniform_int(0, 100));
    hetreg::Dataset d = random_dataset(rng, n_rows, n_agents);

    hetreg::SplitSpec spec;
    const double f0 = 0.4 + 0.3 * rng.uniform();
    const double f1 = (1.0 - f0) * rng.uniform();
    spec.fractions[0] = f0;
    spec.fractions[1] = f1;
    spec.fractions[2] = 1.0 - f0 - f1;
    spec.seed = rng.next_u64();
    hetreg::SplitResult split = hetreg::split_stratified(d, spec);

    std::vector<int> all;
    all.insert(all.end(), split.train_rows.begin(), split.train_rows.end());
    all.insert(all.end(), split.validation_rows.begin(), split.validation_rows.end());
    all.insert(all.end(), split.test_rows.begin(), split.test_rows.end());
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == static_cast<std::size_t>(n_rows));
    for (int i = 0; i < n_rows; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

    CHECK(split.train.n_rows() == split.train_rows.size());
    CHECK(split.validation.n_rows() == split.validation_rows.size());
    CHECK(split.test.n_rows() == split.test_rows.size());

    // Part sizes respect the fractions to within one row per agent.
    CHECK(std::llabs(static_cast<long long>(split.train.n_rows()) -
                     static_cast<long long>(std::llround(f0 * n_rows))) <=
          static_cast<long long>(n_agents));

    // Per-agent counts add up to each agent's total presence.
    std::vector<int> totals(static_cast<std::size_t>(n_agents), 0);
    for (int a : d.agent_index) ++totals[static_cast<std::size_t>(a)];
    REQUIRE(split.per_agent_counts.size() == static_cast<std::size_t>(n_agents));
    for (int a = 0; a < n_agents; ++a) {
      const std::array<int, 3>& c = split.per_agent_counts[static_cast<std::size_t>(a)];
      CHECK(c[0] + c[1] + c[2] == totals[static_cast<std::size_t>(a)]);
    }
  }
}

TEST_CASE("split honors per-agent minimums") {
  hetreg::Rng rng(103);
  hetreg::Dataset d = random_dataset(rng, 60, 4);
  hetreg::SplitSpec spec;
  spec.min_per_agent[0] = 1;
  spec.min_per_agent[1] = 1;
  spec.min_per_agent[2] = 1;
  spec.seed = 5;
  hetreg::SplitResult split = hetreg::split_stratified(d, spec);
  for (const std::array<int, 3>& c : split.per_agent_counts) {
    CHECK(c[0] >= 1);
    CHECK(c[1] >= 1);
    CHECK(c[2] >= 1);
  }
}

TEST_CASE("split is deterministic in the seed") {
  hetreg::Rng rng(107);
  hetreg::Dataset d = random_dataset(rng, 80, 3);
  hetreg::SplitSpec spec;
  spec.seed = 11;
  hetreg::SplitResult a = hetreg::split_stratified(d, spec);
  hetreg::SplitResult b = hetreg::split_stratified(d, spec);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.validation_rows == b.validation_rows);
  CHECK(a.test_rows == b.test_rows);

  spec.seed = 12;
  hetreg::SplitResult c = hetreg::split_stratified(d, spec);
  CHECK(a.train_rows != c.train_rows);  // 80 rows: a collision is implausible
}

TEST_CASE("a zero fraction yields an empty part") {
  hetreg::Rng rng(109);
  hetreg::Dataset d = random_dataset(rng, 50, 3);
  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.7;
  spec.fractions[1] = 0.0;
  spec.fractions[2] = 0.3;
  spec.seed = 2;
  hetreg::SplitResult split = hetreg::split_stratified(d, spec);
  CHECK(split.validation.n_rows() == 0);
  CHECK(split.train.n_rows() + split.test.n_rows() == 50);
}

TEST_CASE("split rejects fractions that do not sum to one") {
  hetreg::Rng rng(113);
  hetreg::Dataset d = random_dataset(rng, 20, 2);
  hetreg::SplitSpec spec;
  spec.fractions[0] = 0.5;
  spec.fractions[1] = 0.2;
  spec.fractions[2] = 0.2;
  CHECK_THROWS_AS(hetreg::split_stratified(d, spec), hetreg::ConfigError);
}
