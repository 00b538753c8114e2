#pragma once

// Case data: one row per decision, with real-valued features, the deciding
// agent, and the binary decision itself.  Agent ids are opaque strings; they
// are mapped to dense indices (first-appearance order) at load time and the
// mapping travels with the dataset so downstream reports can name agents.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hetreg/matrix.hpp"

namespace hetreg {

struct Dataset {
  Matrix features;                         // n x d
  std::vector<std::string> feature_names;  // d
  std::vector<int> agent_index;            // n, dense in [0, n_agents)
  std::vector<std::string> agent_names;    // dense index -> original id
  std::vector<std::uint8_t> decisions;     // n, each 0 or 1

  std::size_t n_rows() const { return features.rows; }
  std::size_t n_features() const { return features.cols; }
  int n_agents() const { return static_cast<int>(agent_names.size()); }
};

// Throws DataError if sizes disagree, the dataset is empty, a decision is
// not 0/1, or an agent index is out of range.
void validate_dataset(const Dataset& d);

// Rows of `d` at `rows` (in the given order), with the agent mapping kept
// as-is so indices stay comparable across subsets.
Dataset subset(const Dataset& d, const std::vector<int>& rows);

// ---------------------------------------------------------------------------
// CSV I/O.  One header row; comma separated; '.' decimal point; no quoting.
// ---------------------------------------------------------------------------

struct CsvSchema {
  std::string agent_column = "agent";
  std::string decision_column = "decision";
  // Empty means: every other column is a feature, in file order.
  std::vector<std::string> feature_columns;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);
void write_csv(const std::string& path, const Dataset& d, const CsvSchema& schema = {});

// ---------------------------------------------------------------------------
// Normalization to mean 0 / standard deviation 1 (population convention,
// i.e. divide by n).  Zero-variance columns cannot be scaled; they are set
// to all zeros and a warning is recorded.  The returned statistics invert
// the transform (x = mean + std * z; degenerate columns invert to the mean).
// ---------------------------------------------------------------------------

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;             // 0 marks a degenerate column
  std::vector<std::uint8_t> degenerate;
  std::vector<std::string> warnings;
};

NormStats normalize(Dataset& d);
// Applies previously computed statistics (e.g. train stats to test data).
void apply_normalization(Dataset& d, const NormStats& stats);

// ---------------------------------------------------------------------------
// Stratified split.  Fractions must be >= 0 and sum to 1.  Within each
// agent, min_per_agent rows are reserved for each part first and the
// remainder is allotted by largest remainder (ties -> lowest part index);
// which rows land where is decided by a seeded shuffle per agent.
// ---------------------------------------------------------------------------

struct SplitSpec {
  double fractions[3] = {0.6, 0.2, 0.2};  // train, validation, test
  int min_per_agent[3] = {0, 0, 0};
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
  Dataset test;
  // Original row indices of each part, ascending (aligns split rows with
  // sidecar files that are indexed by the source file's row order).
  std::vector<int> train_rows;
  std::vector<int> validation_rows;
  std::vector<int> test_rows;
  // Per-agent counts, indexed [agent][part]; handy for reports.
  std::vector<std::array<int, 3>> per_agent_counts;
};

SplitResult split_stratified(const Dataset& d, const SplitSpec& spec);

}  // namespace hetreg
