#pragma once

// Choosing the region-fraction parameter beta by a permutation test.
//
// For each candidate beta, run discovery on the real data to get the
// training objective q_obs, then T more times on copies whose agent column
// has been randomly permuted (destroying any agent-specific structure while
// preserving the feature/decision joint distribution).  The p-value is
//
//     p = (1 + #{ null runs with q >= q_obs }) / (T + 1)
//
// (add-one convention; ties count toward the null side, both conservative).
// The selected beta minimizes p; ties pick the smallest beta.  Each
// permutation draws its seed from (master seed, candidate index, replicate),
// so the scan is reproducible and parallelizable in any order.

#include <cstdint>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/discovery.hpp"

namespace hetreg {

// Uniformly random permutation of the agent column; features, decisions and
// row order are untouched.
Dataset permute_agents(const Dataset& d, std::uint64_t seed);

double permutation_p_value(double q_obs, const std::vector<double>& null_values);

struct BetaCandidateResult {
  double beta = 0.0;
  double q_obs = 0.0;
  std::vector<double> null_values;  // T entries, replicate order
  double p_value = 1.0;
};

struct BetaScan {
  std::vector<BetaCandidateResult> candidates;
  double selected_beta = 0.0;
  std::size_t selected_index = 0;
};

struct BetaScanConfig {
  std::vector<double> candidates;  // e.g. 0.02, 0.06, ..., 0.42
  int permutations = 40;           // T
  std::uint64_t seed = 0;
  int jobs = 1;
};

// The grid used throughout: 0.02 to 0.42 in steps of 0.04.
std::vector<double> default_beta_grid();

// `base` supplies the discovery configuration; its beta is overridden by
// each candidate and its seed/jobs by the scan's.  Observed and null runs
// use the identical configuration (asserted internally by hashing it).
BetaScan tune_beta(const Dataset& d, const DiscoverConfig& base, const BetaScanConfig& scan);

}  // namespace hetreg
