#pragma once

// The direct-model baseline and the evaluation metrics shared by every
// method in the comparison harness.
//
// The baseline asks how much per-sample predictive power agent identity
// adds: fit E[Y|X] and E[Y|A,X] (agents one-hot encoded), take
//   u = |y - E[Y|X]| - |y - E[Y|A,X]|
// as the per-row utility of knowing the agent, and fit a regressor to
// predict u from the context alone.  High-u contexts are where agents
// matter, so thresholding the regressor at the top-beta quantile produces a
// candidate disagreement region, and ranking agents by their one-hot
// coefficients produces a two-way grouping.  No counterfactual reasoning is
// involved — the point of the comparison is whether that shortcut finds the
// same regions the covariance objective does.

#include <cstdint>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/model.hpp"
#include "hetreg/objective.hpp"

namespace hetreg {

struct DirectBaselineResult {
  Model outcome_model;  // logistic E[Y|X], tuned on AUC
  Model agent_model;    // logistic E[Y|A,X]; one-hot agents, last dropped
  Model region_model;   // regressor predicting u from the context
  double cutoff = 0.0;  // top-beta quantile of pooled train+validation scores
  std::vector<double> test_scores;
  Membership test_region;                  // test_scores >= cutoff
  std::vector<double> agent_coefficients;  // per agent; the dropped one is 0
  Grouping grouping;                       // 1 for the top half by coefficient
};

// All three splits must share feature names and the agent universe; the
// grouping needs at least 2 agents.  Agents are sorted by coefficient
// descending (ties by index) and the first ceil(N/2) form group 1.
DirectBaselineResult direct_baseline(const Dataset& train, const Dataset& validation,
                                     const Dataset& test, double beta,
                                     const std::vector<LearnerSpec>& region_grid,
                                     std::uint64_t seed, int jobs);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct EvaluationReport {
  double region_auc = 0.0;
  double region_precision = 0.0;  // 0 when nothing clears the cutoff
  double region_recall = 0.0;
};

// Scores against a ground-truth region bit per row.  AUC is the rank
// statistic with ties at 1/2 and requires both classes in the truth;
// precision and recall classify rows at scores >= cutoff.
EvaluationReport region_metrics(const std::vector<double>& scores, double cutoff,
                                const Membership& truth);

// Agent-level agreement between two 2-way groupings, maximized over the two
// label alignments (labels are arbitrary, so swapping them is free).
double partition_accuracy(const Grouping& predicted, const Grouping& truth);

}  // namespace hetreg
