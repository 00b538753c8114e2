#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"
#include "tree_builder.hpp"

namespace hetreg {

namespace detail {

namespace {

// Splits with smaller gain than this are treated as no improvement; it keeps
// floating-point dust from splitting constant-target nodes.
constexpr double kMinGain = 1e-12;

struct NodeStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;
};

double impurity(const NodeStats& s, bool classification) {
  double m = static_cast<double>(s.count);
  double mean = s.sum / m;
  if (classification) return 2.0 * mean * (1.0 - mean);  // binary Gini
  double var = s.sum_sq / m - mean * mean;
  return var > 0.0 ? var : 0.0;
}

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class Builder {
 public:
  Builder(const Matrix& X, const std::vector<double>& y, const TreeOptions& opts,
          Rng* rng, int mtry)
      : x_(X), y_(y), opts_(opts), rng_(rng), mtry_(mtry) {}

  TreeModel run(std::vector<int> rows) {
    TreeModel tree;
    tree.nodes.reserve(rows.size());
    grow(std::move(rows), 0, tree);
    return tree;
  }

 private:
  int grow(std::vector<int> rows, int depth, TreeModel& tree) {
    NodeStats stats;
    for (int r : rows) {
      double t = y_[static_cast<std::size_t>(r)];
      stats.sum += t;
      stats.sum_sq += t * t;
      stats.count += 1;
    }

    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().value = stats.sum / static_cast<double>(stats.count);
    tree.nodes.back().count = stats.count;

    bool can_split = stats.count >= 2 * opts_.min_samples_leaf &&
                     (opts_.max_depth < 0 || depth < opts_.max_depth) &&
                     impurity(stats, opts_.classification) > 0.0;
    if (!can_split) return index;

    BestSplit best = find_split(rows, stats);
    if (best.feature < 0) return index;

    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int r : rows) {
      if (x_.at(static_cast<std::size_t>(r), static_cast<std::size_t>(best.feature)) <=
          best.threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    rows.clear();
    rows.shrink_to_fit();

    int left = grow(std::move(left_rows), depth + 1, tree);
    int right = grow(std::move(right_rows), depth + 1, tree);
    tree.nodes[static_cast<std::size_t>(index)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(index)].threshold = best.threshold;
    tree.nodes[static_cast<std::size_t>(index)].left = left;
    tree.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  BestSplit find_split(const std::vector<int>& rows, const NodeStats& parent) {
    int d = static_cast<int>(x_.cols);
    std::vector<int> features;
    if (rng_ != nullptr && mtry_ < d) {
      features = rng_->sample_without_replacement(d, mtry_);  // ascending
    } else {
      features.resize(static_cast<std::size_t>(d));
      std::iota(features.begin(), features.end(), 0);
    }

    double parent_impurity = impurity(parent, opts_.classification);
    double m = static_cast<double>(parent.count);
    BestSplit best;

    std::vector<std::pair<double, double>> order;  // (feature value, target)
    order.reserve(rows.size());

    // Features ascend and thresholds ascend inside the scan, so keeping only
    // strictly better gains lands ties on the lowest feature, then the
    // lowest threshold.
    for (int f : features) {
      order.clear();
      for (int r : rows) {
        order.emplace_back(x_.at(static_cast<std::size_t>(r), static_cast<std::size_t>(f)),
                           y_[static_cast<std::size_t>(r)]);
      }
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;  // constant feature

      NodeStats left;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left.sum += order[i].second;
        left.sum_sq += order[i].second * order[i].second;
        left.count += 1;
        if (order[i].first == order[i + 1].first) continue;
        int right_count = parent.count - left.count;
        if (left.count < opts_.min_samples_leaf || right_count < opts_.min_samples_leaf) {
          continue;
        }
        NodeStats right{parent.sum - left.sum, parent.sum_sq - left.sum_sq, right_count};
        double gain = parent_impurity -
                      (left.count * impurity(left, opts_.classification) +
                       right_count * impurity(right, opts_.classification)) / m;
        if (gain > kMinGain && gain > best.gain) {
          best.feature = f;
          best.threshold = 0.5 * (order[i].first + order[i + 1].first);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  const TreeOptions& opts_;
  Rng* rng_;
  int mtry_;
};

}  // namespace

TreeModel build_tree(const Matrix& X, const std::vector<double>& y,
                     std::vector<int> rows, const TreeOptions& opts, Rng* rng, int mtry) {
  Builder builder(X, y, opts, rng, mtry);
  return builder.run(std::move(rows));
}

}  // namespace detail

Model fit_tree(const Matrix& X, const std::vector<double>& y, const TreeOptions& opts) {
  std::size_t n = X.rows;
  if (n == 0 || y.size() != n) throw ConfigError("tree fit: bad input sizes");
  if (opts.min_samples_leaf < 1) throw ConfigError("tree fit: min_samples_leaf must be >= 1");
  if (static_cast<std::size_t>(opts.min_samples_leaf) > n) {
    throw ConfigError("tree fit: min_samples_leaf exceeds the training set size");
  }
  if (opts.classification) {
    for (double t : y) {
      if (t != 0.0 && t != 1.0) {
        throw ConfigError("tree fit: classification targets must be 0 or 1");
      }
    }
  }

  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);

  Model m;
  m.kind = ModelKind::tree;
  m.n_features = X.cols;
  m.hyperparameters = {{"min_samples_leaf", static_cast<double>(opts.min_samples_leaf)},
                       {"max_depth", static_cast<double>(opts.max_depth)},
                       {"classification", opts.classification ? 1.0 : 0.0}};
  m.impl = detail::build_tree(X, y, std::move(rows), opts, nullptr, 0);
  return m;
}

}  // namespace hetreg
