#pragma once

// Supervised learners and hyperparameter tuning.
//
// All fits are deterministic: the direct solvers have no randomness at all,
// and the forest derives one seed per tree from its seed option, so results
// do not depend on thread count.  Classification targets are {0,1}; trees
// and forests used as classifiers predict the leaf mean, i.e. an estimated
// probability.

#include <cstdint>
#include <string>
#include <vector>

#include "hetreg/matrix.hpp"
#include "hetreg/model.hpp"

namespace hetreg {

// ---------------------------------------------------------------------------
// Individual learners
// ---------------------------------------------------------------------------

struct LogisticOptions {
  double c = 1.0;        // inverse regularization strength; larger = weaker penalty
  double tol = 1e-8;     // max-norm gradient tolerance
  int max_iter = 500;    // Newton iteration cap
};

// Maximizes the log-likelihood minus ||w||^2 / (2c); the intercept is not
// penalized.  Damped Newton with step halving.
Model fit_logistic(const Matrix& X, const std::vector<std::uint8_t>& y,
                   const LogisticOptions& opts);

struct RidgeOptions {
  double alpha = 1.0;  // L2 penalty on the weights; the intercept is free
};

// Solves the normal equations (X'X + alpha*I)w = X'y, intercept unpenalized.
// alpha == 0 on a rank-deficient design throws ComputeError suggesting
// alpha > 0.
Model fit_ridge(const Matrix& X, const std::vector<double>& y, const RidgeOptions& opts);

struct TreeOptions {
  int min_samples_leaf = 1;
  int max_depth = -1;          // -1 = unlimited
  bool classification = false; // Gini impurity instead of variance
};

// Greedy CART: at each node, the split maximizing impurity decrease over all
// (feature, threshold) pairs; thresholds are midpoints between consecutive
// distinct sorted values; ties resolved to the lowest feature index, then
// the lowest threshold.  Leaves predict the mean target.
Model fit_tree(const Matrix& X, const std::vector<double>& y, const TreeOptions& opts);

struct ForestOptions {
  int n_trees = 100;
  int min_samples_leaf = 1;
  int max_depth = -1;
  bool classification = false;
  int mtry = 0;           // features tried per split; 0 = ceil(sqrt(d))
  bool bootstrap = true;  // off = every tree sees all rows (testing hook)
  std::uint64_t seed = 0;
  int jobs = 1;
};

Model fit_forest(const Matrix& X, const std::vector<double>& y, const ForestOptions& opts);

// ---------------------------------------------------------------------------
// Uniform learner configuration, used wherever a caller chooses "which
// learner with which hyperparameters" (pipelines, grids, the CLI).
// ---------------------------------------------------------------------------

struct LearnerSpec {
  ModelKind kind = ModelKind::logistic;
  double logistic_c = 1.0;
  double ridge_alpha = 1.0;
  int min_samples_leaf = 10;
  int max_depth = -1;
  int n_trees = 100;
};

// Probability-emitting fit (logistic, tree, forest); ridge is rejected.
Model fit_classifier(const LearnerSpec& spec, const Matrix& X,
                     const std::vector<std::uint8_t>& y, std::uint64_t seed, int jobs);
// Real-valued fit (ridge, tree, forest); logistic is rejected.
Model fit_regressor(const LearnerSpec& spec, const Matrix& X,
                    const std::vector<double>& y, std::uint64_t seed, int jobs);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Rank-based AUC with ties counted 1/2 (the Mann-Whitney statistic).
// Throws ComputeError when labels are single-class.
double auc_score(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

double mean_squared_error(const std::vector<double>& predictions,
                          const std::vector<double>& targets);

// ---------------------------------------------------------------------------
// Grid tuning: evaluate every candidate on the validation set, keep the best
// (ties -> the first listed), then refit it on train + validation pooled.
// ---------------------------------------------------------------------------

enum class TuneMetric { auc, mse };

struct SelectionRow {
  LearnerSpec spec;
  double metric = 0.0;
};

struct TuneResult {
  Model model;          // refit on train + validation
  LearnerSpec selected;
  std::size_t selected_index = 0;
  std::vector<SelectionRow> table;
};

TuneResult tune_classifier(const std::vector<LearnerSpec>& grid, TuneMetric metric,
                           const Matrix& X_train, const std::vector<std::uint8_t>& y_train,
                           const Matrix& X_val, const std::vector<std::uint8_t>& y_val,
                           std::uint64_t seed, int jobs);

TuneResult tune_regressor(const std::vector<LearnerSpec>& grid, TuneMetric metric,
                          const Matrix& X_train, const std::vector<double>& y_train,
                          const Matrix& X_val, const std::vector<double>& y_val,
                          std::uint64_t seed, int jobs);

// Stock hyperparameter grids.
std::vector<LearnerSpec> default_logistic_grid();  // c: 10 ... 1e-5
std::vector<LearnerSpec> default_ridge_grid();     // alpha: 0.01 ... 100
std::vector<LearnerSpec> default_tree_grid();      // min_samples_leaf: 10, 25, 100
std::vector<LearnerSpec> default_forest_grid();    // n_trees: 10, 25, 100

// Stacks two row-aligned matrices (used for the refit on train+validation).
Matrix vstack(const Matrix& a, const Matrix& b);

}  // namespace hetreg
