#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kTuneStream = 0x74756e65ULL;   // "tune"
constexpr std::uint64_t kRefitStream = 0x7265666974ULL;  // "refit"

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double auc_score(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ConfigError("auc: scores and labels must be non-empty and equally long");
  }
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (std::uint8_t l : labels) n_pos += l ? 1 : 0;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ComputeError("auc: labels contain a single class");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied score groups, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }

  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double mean_squared_error(const std::vector<double>& predictions,
                          const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw ConfigError("mse: predictions and targets must be non-empty and equally long");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double diff = predictions[i] - targets[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// LearnerSpec dispatch
// ---------------------------------------------------------------------------

namespace {

std::vector<double> to_double(const std::vector<std::uint8_t>& y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i];
  return out;
}

Model fit_tree_like(const LearnerSpec& spec, const Matrix& X, const std::vector<double>& y,
                    bool classification, std::uint64_t seed, int jobs) {
  if (spec.kind == ModelKind::tree) {
    TreeOptions opts;
    opts.min_samples_leaf = spec.min_samples_leaf;
    opts.max_depth = spec.max_depth;
    opts.classification = classification;
    return fit_tree(X, y, opts);
  }
  ForestOptions opts;
  opts.n_trees = spec.n_trees;
  opts.min_samples_leaf = spec.min_samples_leaf;
  opts.max_depth = spec.max_depth;
  opts.classification = classification;
  opts.seed = seed;
  opts.jobs = jobs;
  return fit_forest(X, y, opts);
}

}  // namespace

Model fit_classifier(const LearnerSpec& spec, const Matrix& X,
                     const std::vector<std::uint8_t>& y, std::uint64_t seed, int jobs) {
  switch (spec.kind) {
    case ModelKind::logistic: {
      LogisticOptions opts;
      opts.c = spec.logistic_c;
      return fit_logistic(X, y, opts);
    }
    case ModelKind::ridge:
      throw ConfigError("ridge does not emit probabilities; pick logistic, tree, or forest");
    case ModelKind::tree:
    case ModelKind::forest:
      return fit_tree_like(spec, X, to_double(y), /*classification=*/true, seed, jobs);
  }
  throw ConfigError("unknown learner kind");
}

Model fit_regressor(const LearnerSpec& spec, const Matrix& X,
                    const std::vector<double>& y, std::uint64_t seed, int jobs) {
  switch (spec.kind) {
    case ModelKind::logistic:
      throw ConfigError("logistic is a classifier; pick ridge, tree, or forest");
    case ModelKind::ridge: {
      RidgeOptions opts;
      opts.alpha = spec.ridge_alpha;
      return fit_ridge(X, y, opts);
    }
    case ModelKind::tree:
    case ModelKind::forest:
      return fit_tree_like(spec, X, y, /*classification=*/false, seed, jobs);
  }
  throw ConfigError("unknown learner kind");
}

// ---------------------------------------------------------------------------
// Grid tuning
// ---------------------------------------------------------------------------

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ConfigError("vstack: column counts differ");
  Matrix out(a.rows + b.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

namespace {

// Shared selection loop: fit every candidate on train, score on validation,
// keep the best (ties -> first listed), refit on train+validation.
template <typename Target, typename FitFn, typename ScoreFn>
TuneResult tune_impl(const std::vector<LearnerSpec>& grid, bool higher_is_better,
                     const Matrix& X_train, const std::vector<Target>& y_train,
                     const Matrix& X_val, const std::vector<Target>& y_val,
                     std::uint64_t seed, int jobs, FitFn fit, ScoreFn score) {
  if (grid.empty()) throw ConfigError("tune: the grid is empty");
  if (X_val.rows == 0) throw ConfigError("tune: the validation set is empty");

  TuneResult result;
  result.table.reserve(grid.size());
  bool have_best = false;
  double best_metric = 0.0;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    Model model = fit(grid[i], X_train, y_train,
                      derive_seed(seed, {kTuneStream, static_cast<std::uint64_t>(i)}), jobs);
    double metric = score(model.predict(X_val), y_val);
    result.table.push_back({grid[i], metric});
    bool better = !have_best ||
                  (higher_is_better ? metric > best_metric : metric < best_metric);
    if (better) {
      have_best = true;
      best_metric = metric;
      result.selected_index = i;
    }
  }

  result.selected = grid[result.selected_index];
  Matrix X_pool = vstack(X_train, X_val);
  std::vector<Target> y_pool(y_train);
  y_pool.insert(y_pool.end(), y_val.begin(), y_val.end());
  result.model =
      fit(result.selected, X_pool, y_pool,
          derive_seed(seed, {kRefitStream, static_cast<std::uint64_t>(result.selected_index)}),
          jobs);
  return result;
}

}  // namespace

TuneResult tune_classifier(const std::vector<LearnerSpec>& grid, TuneMetric metric,
                           const Matrix& X_train, const std::vector<std::uint8_t>& y_train,
                           const Matrix& X_val, const std::vector<std::uint8_t>& y_val,
                           std::uint64_t seed, int jobs) {
  auto fit = [](const LearnerSpec& spec, const Matrix& X, const std::vector<std::uint8_t>& y,
                std::uint64_t s, int j) { return fit_classifier(spec, X, y, s, j); };
  if (metric == TuneMetric::auc) {
    auto score = [](const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
      return auc_score(p, y);
    };
    return tune_impl(grid, /*higher_is_better=*/true, X_train, y_train, X_val, y_val, seed,
                     jobs, fit, score);
  }
  auto score = [](const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
    std::vector<double> yd(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] = y[i];
    return mean_squared_error(p, yd);
  };
  return tune_impl(grid, /*higher_is_better=*/false, X_train, y_train, X_val, y_val, seed,
                   jobs, fit, score);
}

TuneResult tune_regressor(const std::vector<LearnerSpec>& grid, TuneMetric metric,
                          const Matrix& X_train, const std::vector<double>& y_train,
                          const Matrix& X_val, const std::vector<double>& y_val,
                          std::uint64_t seed, int jobs) {
  if (metric == TuneMetric::auc) {
    throw ConfigError("tune: auc requires binary targets; use tune_classifier");
  }
  auto fit = [](const LearnerSpec& spec, const Matrix& X, const std::vector<double>& y,
                std::uint64_t s, int j) { return fit_regressor(spec, X, y, s, j); };
  auto score = [](const std::vector<double>& p, const std::vector<double>& y) {
    return mean_squared_error(p, y);
  };
  return tune_impl(grid, /*higher_is_better=*/false, X_train, y_train, X_val, y_val, seed,
                   jobs, fit, score);
}

// ---------------------------------------------------------------------------
// Stock grids
// ---------------------------------------------------------------------------

std::vector<LearnerSpec> default_logistic_grid() {
  std::vector<LearnerSpec> grid;
  for (double c : {10.0, 1.0, 0.1, 0.01, 0.001, 1e-4, 1e-5}) {
    LearnerSpec s;
    s.kind = ModelKind::logistic;
    s.logistic_c = c;
    grid.push_back(s);
  }
  return grid;
}

std::vector<LearnerSpec> default_ridge_grid() {
  std::vector<LearnerSpec> grid;
  for (double alpha : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    LearnerSpec s;
    s.kind = ModelKind::ridge;
    s.ridge_alpha = alpha;
    grid.push_back(s);
  }
  return grid;
}

std::vector<LearnerSpec> default_tree_grid() {
  std::vector<LearnerSpec> grid;
  for (int msl : {10, 25, 100}) {
    LearnerSpec s;
    s.kind = ModelKind::tree;
    s.min_samples_leaf = msl;
    grid.push_back(s);
  }
  return grid;
}

std::vector<LearnerSpec> default_forest_grid() {
  std::vector<LearnerSpec> grid;
  for (int trees : {10, 25, 100}) {
    LearnerSpec s;
    s.kind = ModelKind::forest;
    s.n_trees = trees;
    s.min_samples_leaf = 1;
    grid.push_back(s);
  }
  return grid;
}

}  // namespace hetreg
