#include "hetreg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetreg/discovery.hpp"
#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kOutcomeStream = 0x6278ULL;  // "bx"
constexpr std::uint64_t kAgentStream = 0x6261ULL;    // "ba"
constexpr std::uint64_t kRegionStream = 0x6272ULL;   // "br"

// Features with a one-hot agent block appended; the last agent's column is
// dropped so the design stays full-rank, pinning its coefficient to 0.
Matrix with_agent_onehot(const Dataset& d, int n_agents) {
  std::size_t extra = static_cast<std::size_t>(n_agents - 1);
  Matrix out;
  out.rows = d.n_rows();
  out.cols = d.features.cols + extra;
  out.data.assign(out.rows * out.cols, 0.0);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < d.features.cols; ++j) out.at(i, j) = d.features.at(i, j);
    int a = d.agent_index[i];
    if (a < n_agents - 1) out.at(i, d.features.cols + static_cast<std::size_t>(a)) = 1.0;
  }
  return out;
}

std::vector<double> utility(const Model& outcome, const Model& agent_model,
                            const Dataset& d, const Matrix& X_agent) {
  std::vector<double> p_x = outcome.predict(d.features);
  std::vector<double> p_ax = agent_model.predict(X_agent);
  std::vector<double> u(d.n_rows());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double y = static_cast<double>(d.decisions[i]);
    u[i] = std::abs(y - p_x[i]) - std::abs(y - p_ax[i]);
  }
  return u;
}

}  // namespace

DirectBaselineResult direct_baseline(const Dataset& train, const Dataset& validation,
                                     const Dataset& test, double beta,
                                     const std::vector<LearnerSpec>& region_grid,
                                     std::uint64_t seed, int jobs) {
  if (train.n_rows() == 0 || validation.n_rows() == 0 || test.n_rows() == 0) {
    throw ConfigError("direct_baseline: every split must be non-empty");
  }
  if (train.feature_names != validation.feature_names ||
      train.feature_names != test.feature_names) {
    throw ConfigError("direct_baseline: splits disagree on feature names");
  }
  if (train.agent_names != validation.agent_names || train.agent_names != test.agent_names) {
    throw ConfigError("direct_baseline: splits disagree on the agent universe");
  }
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("direct_baseline: beta must be in (0, 1]");
  int n_agents = train.n_agents();
  if (n_agents < 2) throw ConfigError("direct_baseline: need at least 2 agents to group");
  if (region_grid.empty()) throw ConfigError("direct_baseline: empty region model grid");

  DirectBaselineResult result;

  // E[Y|X] and E[Y|A,X], both tuned on validation AUC and refit pooled.
  TuneResult outcome =
      tune_classifier(default_logistic_grid(), TuneMetric::auc, train.features,
                      train.decisions, validation.features, validation.decisions,
                      derive_seed(seed, {kOutcomeStream}), jobs);
  result.outcome_model = outcome.model;

  Matrix train_ax = with_agent_onehot(train, n_agents);
  Matrix val_ax = with_agent_onehot(validation, n_agents);
  TuneResult agent_fit =
      tune_classifier(default_logistic_grid(), TuneMetric::auc, train_ax, train.decisions,
                      val_ax, validation.decisions, derive_seed(seed, {kAgentStream}), jobs);
  result.agent_model = agent_fit.model;

  // Per-row utility of knowing the agent, on train and validation.
  std::vector<double> u_train = utility(result.outcome_model, result.agent_model, train, train_ax);
  std::vector<double> u_val =
      utility(result.outcome_model, result.agent_model, validation, val_ax);

  TuneResult region_fit =
      tune_regressor(region_grid, TuneMetric::mse, train.features, u_train,
                     validation.features, u_val, derive_seed(seed, {kRegionStream}), jobs);
  result.region_model = region_fit.model;

  // Cutoff from the pooled train+validation scores, applied to test.
  std::vector<double> pooled_scores = result.region_model.predict(train.features);
  {
    std::vector<double> val_scores = result.region_model.predict(validation.features);
    pooled_scores.insert(pooled_scores.end(), val_scores.begin(), val_scores.end());
  }
  result.cutoff = score_threshold(pooled_scores, beta);

  result.test_scores = result.region_model.predict(test.features);
  result.test_region.resize(test.n_rows());
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    result.test_region[i] = result.test_scores[i] >= result.cutoff ? 1 : 0;
  }

  // Group agents by their one-hot coefficients (dropped agent pinned at 0).
  const LinearModel& lm = result.agent_model.as_linear();
  std::size_t d = train.features.cols;
  result.agent_coefficients.assign(static_cast<std::size_t>(n_agents), 0.0);
  for (int a = 0; a + 1 < n_agents; ++a) {
    result.agent_coefficients[static_cast<std::size_t>(a)] =
        lm.weights[d + static_cast<std::size_t>(a)];
  }

  std::vector<int> order(static_cast<std::size_t>(n_agents));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return result.agent_coefficients[static_cast<std::size_t>(a)] >
           result.agent_coefficients[static_cast<std::size_t>(b)];
  });
  int top = (n_agents + 1) / 2;  // ceil; with odd N the larger half is group 1
  result.grouping.assign(static_cast<std::size_t>(n_agents), 0);
  for (int k = 0; k < top; ++k) {
    result.grouping[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

EvaluationReport region_metrics(const std::vector<double>& scores, double cutoff,
                                const Membership& truth) {
  if (scores.size() != truth.size()) {
    throw ConfigError("region_metrics: scores and truth have different lengths");
  }
  if (scores.empty()) throw ConfigError("region_metrics: no rows");

  EvaluationReport report;
  report.region_auc = auc_score(scores, truth);  // rejects single-class truth

  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool predicted = scores[i] >= cutoff;
    if (predicted && truth[i]) ++tp;
    if (predicted && !truth[i]) ++fp;
    if (!predicted && truth[i]) ++fn;
  }
  report.region_precision =
      tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  report.region_recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return report;
}

double partition_accuracy(const Grouping& predicted, const Grouping& truth) {
  if (predicted.size() != truth.size()) {
    throw ConfigError("partition_accuracy: groupings cover different agent sets");
  }
  if (predicted.empty()) throw ConfigError("partition_accuracy: no agents");
  long long match = 0;
  for (std::size_t a = 0; a < predicted.size(); ++a) {
    if ((predicted[a] != 0) == (truth[a] != 0)) ++match;
  }
  long long n = static_cast<long long>(predicted.size());
  return static_cast<double>(std::max(match, n - match)) / static_cast<double>(n);
}

}  // namespace hetreg
