#pragma once

// Synthetic decision data with known structure.
//
// Rows are contexts x, each assigned to one of n_agents decision-makers at
// random (assignment never looks at x, so agent identity is exogenous by
// construction).  Agents belong to groups; every agent in a group shares one
// policy: P(decision = 1 | x) = sigmoid(base · x + c_g · 1{x in S*}), where
// S* is a rule-defined region of the feature space and c_g is the group's
// extra logit inside it.  With all c_g equal the groups are indistinguishable
// and the generated data is a null instance.
//
// The generator returns the realized Dataset plus a SyntheticTruth holding
// everything the sampling hid: the per-row region bit, the agent->group map,
// and the oracle probability each group would decide 1 on each row.  From
// those, counterfactual_q evaluates the population disagreement objective
// exactly, with no model in the loop — the reference value that the
// residual-based estimator should approach on large samples.

#include <cstdint>
#include <string>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/matrix.hpp"
#include "hetreg/objective.hpp"

namespace hetreg {

// ---------------------------------------------------------------------------
// Region rules
// ---------------------------------------------------------------------------

enum class RuleOp { le, lt, ge, gt, eq };

std::string to_string(RuleOp op);

struct RuleAtom {
  std::string feature;
  RuleOp op = RuleOp::le;
  double value = 0.0;
};

// Conjunction of atoms; a row is in the region iff every atom holds.
// `eq` compares exactly (meant for binary/integer-valued features).
struct RegionRule {
  std::vector<RuleAtom> atoms;
};

// The built-in default: charge_misdemeanor == 1 && age <= 35, about 21% of
// rows under the built-in feature sampler.
RegionRule default_region_rule();

// Text form, e.g. "charge_misdemeanor == 1 && age <= 35"; parse accepts
// the same syntax (atoms joined by &&, operators <=, <, >=, >, ==).
std::string describe_rule(const RegionRule& rule);
RegionRule parse_rule(const std::string& text);

// Per-row rule evaluation; throws ConfigError if an atom names a feature
// that does not exist.
Membership rule_membership(const RegionRule& rule, const Matrix& features,
                           const std::vector<std::string>& feature_names);

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  // Feature source.  When seed_features has rows, those rows are reused
  // verbatim (n_rows is ignored); when seed_decisions is also given, the
  // base policy is fit to it by logistic regression.  Otherwise n_rows
  // contexts are drawn from the built-in sampler, whose five features are
  //   age                    round(Normal(34, 11)) clipped to [18, 70]
  //   charge_misdemeanor     Bernoulli(0.375)
  //   priors_count           floor(Exponential(mean 2.5)) capped at 40
  //   juv_felony_count       Poisson(0.3)
  //   juv_misdemeanor_count  Poisson(0.5)
  Matrix seed_features;
  std::vector<std::string> seed_feature_names;
  std::vector<std::uint8_t> seed_decisions;

  int n_rows = 4500;
  int n_agents = 40;

  // One coefficient per group.  Agents map to groups via agent_group when
  // given (size n_agents, values in [0, n_groups)); otherwise agents are
  // dealt into contiguous near-equal blocks.
  std::vector<double> group_coefficients = {0.0, 1.5};
  std::vector<int> agent_group;

  // Case assignment is uniform over agents unless weights are given
  // (non-negative, positive sum; normalized internally).
  std::vector<double> agent_weights;

  // Empty atoms -> default_region_rule().
  RegionRule region_rule;

  // Base policy logit weights.  Empty -> fit from seed_decisions when
  // present, else the built-in defaults (which require the built-in
  // feature names).  base_intercept applies only with explicit weights.
  std::vector<double> base_weights;
  double base_intercept = 0.0;

  std::uint64_t seed = 0;
};

struct SyntheticTruth {
  Membership region;                       // per row: 1{x in S*}
  std::vector<int> agent_group;            // per agent
  std::vector<std::string> agent_names;    // aligned with agent_group; lets a
                                           // reloaded dataset (whose agent
                                           // order may differ) join by name
  std::vector<double> group_weights;       // P(assigned agent's group = g)
  std::vector<double> group_coefficients;  // extra logit inside the region
  Matrix prob_by_group;                    // n_rows x n_groups oracle
  std::vector<double> base_weights;        // resolved base policy
  double base_intercept = 0.0;

  int n_groups() const { return static_cast<int>(group_coefficients.size()); }
};

struct GeneratedData {
  Dataset data;
  SyntheticTruth truth;
};

// Throws ConfigError on inconsistent sizes and DataError when the rule
// selects no rows or every row (a degenerate region leaves nothing to find).
GeneratedData generate(const SyntheticConfig& config);

// As generate, with group coefficients replaced by n_groups equally spaced
// values on [lo, hi] (so n_groups = 2 gives the endpoints themselves).
GeneratedData generate_multigroup(SyntheticConfig config, int n_groups, double lo = -1.5,
                                  double hi = 1.5);

// ---------------------------------------------------------------------------
// Oracle objective
// ---------------------------------------------------------------------------

// Population disagreement objective of a candidate region, evaluated from
// the stored oracle: sum over selected groups g of
//   P(group = g) * mean over rows in the region of (p_g(x) - pbar(x)),
// where pbar(x) is the assignment-weighted mean policy.  `selected_groups`
// has one entry per group (not per agent).  Throws on an empty region.
double counterfactual_q(const SyntheticTruth& truth, const Membership& region,
                        const Grouping& selected_groups);

// ---------------------------------------------------------------------------
// Truth sidecar
// ---------------------------------------------------------------------------

void save_truth(const SyntheticTruth& truth, const std::string& path);
SyntheticTruth load_truth(const std::string& path);

}  // namespace hetreg
