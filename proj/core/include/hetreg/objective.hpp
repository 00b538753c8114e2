#pragma once

// The disagreement objective.
//
// Given an outcome model f for E[Y|X], each row's residual is
// r = y - f(x).  For a region S (row membership mask) and a binary grouping
// G over agents, the empirical objective is
//
//     q_hat(S, G) = (1 / #rows in S) * sum over agents a of
//                     G(a) * (sum of r over a's rows in S)
//
// i.e. every agent's residual sum inside the region, normalized by the
// total region count, and counted only for agents with G(a) = 1.  The
// grouping maximizing q_hat puts an agent in group 1 exactly when its
// region residual sum is >= 0 (ties go to 1), and the maximized value is
//
//     l_hat(S) = (1 / #rows in S) * sum over agents of max(0, residual sum),
//
// which is the quantity the region search and all benchmarking report.
//
// All sums run in row order within an agent and agent-index order across
// agents, in plain 64-bit arithmetic; q_hat at the optimal grouping and
// l_hat are therefore equal exactly, not just up to rounding.

#include <cstdint>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/model.hpp"

namespace hetreg {

// Row membership mask for a region; 1 = inside.
using Membership = std::vector<std::uint8_t>;
// Group label per dense agent index; 1 = flagged side.
using Grouping = std::vector<std::uint8_t>;

struct Residuals {
  std::vector<double> values;   // y - f(x), aligned with the source dataset
  std::vector<int> agent_index; // copied from the source dataset
  int n_agents = 0;
};

// Residuals from an outcome model.  The model must emit scores in [0,1]
// (probabilities); anything outside is an error, never silently clipped.
Residuals residuals(const Model& outcome_model, const Dataset& d);
// Same, from precomputed scores (e.g. an exact oracle in tests).
Residuals residuals_from_scores(const std::vector<double>& scores, const Dataset& d);

// Per-agent residual sums restricted to the region, plus region row counts.
struct RegionSums {
  std::vector<double> residual_sum;  // by dense agent index
  std::vector<int> row_count;        // rows of the agent inside the region
  long long rows_in_region = 0;      // all rows inside the region
};

RegionSums region_sums(const Residuals& r, const Membership& s);

// Empirical objective for an explicit grouping.  Throws ComputeError when
// the region is empty.
double q_hat(const Residuals& r, const Membership& s, const Grouping& g);

// Each agent's residual sum over the region divided by the total region
// count.  Agents with no rows in the region have bias 0 and are flagged.
struct AgentBias {
  std::vector<double> bias;
  std::vector<std::uint8_t> absent;  // 1 = agent has no rows in the region
};

AgentBias per_agent_bias(const Residuals& r, const Membership& s);

// The q_hat-maximizing grouping: G(a) = 1 iff the agent's region residual
// sum is >= 0.  Absent agents land in group 1 (their sum is 0) and are
// flagged so callers can report them.
struct OptimalGrouping {
  Grouping group;
  std::vector<std::uint8_t> absent;
};

OptimalGrouping optimal_grouping(const Residuals& r, const Membership& s);

// Objective value at the optimal grouping (always >= 0).
double l_hat(const Residuals& r, const Membership& s);

}  // namespace hetreg
