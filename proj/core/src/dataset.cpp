#include <cmath>
#include <string>

#include "hetreg/dataset.hpp"
#include "hetreg/errors.hpp"

namespace hetreg {

void validate_dataset(const Dataset& d) {
  std::size_t n = d.features.rows;
  if (n == 0) throw DataError("dataset has no rows");
  if (d.features.data.size() != d.features.rows * d.features.cols) {
    throw DataError("feature matrix storage does not match its shape");
  }
  if (d.feature_names.size() != d.features.cols) {
    throw DataError("feature name count does not match feature columns");
  }
  if (d.agent_index.size() != n || d.decisions.size() != n) {
    throw DataError("column lengths disagree with the feature matrix");
  }
  int n_agents = d.n_agents();
  for (std::size_t i = 0; i < n; ++i) {
    if (d.agent_index[i] < 0 || d.agent_index[i] >= n_agents) {
      throw DataError("agent index out of range at row " + std::to_string(i));
    }
    if (d.decisions[i] != 0 && d.decisions[i] != 1) {
      throw DataError("decision must be 0 or 1 at row " + std::to_string(i));
    }
  }
}

Dataset subset(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.feature_names = d.feature_names;
  out.agent_names = d.agent_names;
  out.features = Matrix(rows.size(), d.n_features());
  out.agent_index.reserve(rows.size());
  out.decisions.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t r = static_cast<std::size_t>(rows[i]);
    for (std::size_t c = 0; c < d.n_features(); ++c) {
      out.features.at(i, c) = d.features.at(r, c);
    }
    out.agent_index.push_back(d.agent_index[r]);
    out.decisions.push_back(d.decisions[r]);
  }
  return out;
}

namespace {

constexpr double kDegenerateStd = 1e-12;

}  // namespace

NormStats normalize(Dataset& d) {
  std::size_t n = d.n_rows();
  std::size_t p = d.n_features();
  NormStats stats;
  stats.mean.resize(p);
  stats.stddev.resize(p);
  stats.degenerate.assign(p, 0);

  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += d.features.at(r, c);
    double mean = sum / static_cast<double>(n);

    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double diff = d.features.at(r, c) - mean;
      ss += diff * diff;
    }
    double stddev = std::sqrt(ss / static_cast<double>(n));  // population std

    stats.mean[c] = mean;
    if (stddev < kDegenerateStd) {
      stats.stddev[c] = 0.0;
      stats.degenerate[c] = 1;
      stats.warnings.push_back("feature '" + d.feature_names[c] +
                               "' has zero variance; column set to 0");
      for (std::size_t r = 0; r < n; ++r) d.features.at(r, c) = 0.0;
    } else {
      stats.stddev[c] = stddev;
      for (std::size_t r = 0; r < n; ++r) {
        d.features.at(r, c) = (d.features.at(r, c) - mean) / stddev;
      }
    }
  }
  return stats;
}

void apply_normalization(Dataset& d, const NormStats& stats) {
  if (stats.mean.size() != d.n_features()) {
    throw ConfigError("normalization statistics do not match the feature count");
  }
  for (std::size_t c = 0; c < d.n_features(); ++c) {
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
      if (stats.degenerate[c]) {
        d.features.at(r, c) = 0.0;
      } else {
        d.features.at(r, c) = (d.features.at(r, c) - stats.mean[c]) / stats.stddev[c];
      }
    }
  }
}

}  // namespace hetreg
