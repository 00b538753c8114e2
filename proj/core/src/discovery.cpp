#include "hetreg/discovery.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kRegionModelStream = 0x726567696f6eULL;  // "region"
constexpr std::uint64_t kThreeWayStream = 0x746872656573ULL;     // "threes"

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_limit: return "iteration_limit";
    case Termination::cycle_detected: return "cycle_detected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Quantile threshold
// ---------------------------------------------------------------------------

double score_threshold(std::vector<double> scores, double beta) {
  if (scores.empty()) throw ComputeError("score_threshold: no scores");
  std::size_t n = scores.size();
  double v = (1.0 - beta) * static_cast<double>(n);
  // Slack absorbs representation error in (1-beta)*n (e.g. 0.78*4500) so the
  // ceiling lands on the intended order statistic.
  double slack = 1e-9 * std::max(1.0, std::abs(v));
  long long k = static_cast<long long>(std::ceil(v - slack));
  if (k < 1) k = 1;
  if (k > static_cast<long long>(n)) k = static_cast<long long>(n);
  std::sort(scores.begin(), scores.end());
  return scores[static_cast<std::size_t>(k - 1)];
}

// ---------------------------------------------------------------------------
// Membership log
// ---------------------------------------------------------------------------

int MembershipLog::record(const Membership& s) {
  Entry e;
  e.bits.assign((s.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i]) e.bits[i / 64] |= 1ULL << (i % 64);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t w : e.bits) h = mix64(h ^ w);
  e.hash = h;

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].hash == h && entries_[i].bits == e.bits) {
      return static_cast<int>(i);
    }
  }
  entries_.push_back(std::move(e));
  return -1;
}

// ---------------------------------------------------------------------------
// Region application
// ---------------------------------------------------------------------------

namespace {

Matrix extract_columns(const Matrix& X, const std::vector<int>& cols) {
  Matrix out(X.rows, cols.size());
  for (std::size_t r = 0; r < X.rows; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.at(r, j) = X.at(r, static_cast<std::size_t>(cols[j]));
    }
  }
  return out;
}

}  // namespace

std::vector<double> region_scores(const Region& region, const Matrix& X) {
  for (int c : region.feature_indices) {
    if (c < 0 || static_cast<std::size_t>(c) >= X.cols) {
      throw ConfigError("region features do not fit the given matrix");
    }
  }
  Matrix sub = extract_columns(X, region.feature_indices);
  return region.model.predict(sub);
}

Membership region_membership(const Region& region, const Matrix& X) {
  std::vector<double> scores = region_scores(region, X);
  Membership s(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s[i] = scores[i] >= region.threshold ? 1 : 0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Discovery loop
// ---------------------------------------------------------------------------

DiscoveryResult discover(const Dataset& d, const DiscoverConfig& config) {
  validate_dataset(d);
  std::size_t n = d.n_rows();

  if (!(config.beta > 0.0 && config.beta <= 1.0)) {
    throw ConfigError("discover: beta must be in (0, 1]");
  }
  if (config.beta * static_cast<double>(n) < 1.0) {
    throw ConfigError("discover: beta * n_rows must be >= 1, otherwise the region is empty");
  }
  if (config.max_iter < 1) throw ConfigError("discover: max_iter must be >= 1");
  if (config.region.kind == ModelKind::logistic) {
    throw ConfigError("discover: the region model must be a regressor (ridge, tree, forest)");
  }
  if (config.outcome.kind == ModelKind::ridge) {
    throw ConfigError("discover: the outcome model must emit probabilities "
                      "(logistic, tree, forest)");
  }

  // Region features: everything not excluded.
  std::vector<int> feature_indices;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < d.n_features(); ++c) {
    bool excluded = std::find(config.excluded_features.begin(), config.excluded_features.end(),
                              d.feature_names[c]) != config.excluded_features.end();
    if (!excluded) {
      feature_indices.push_back(static_cast<int>(c));
      feature_names.push_back(d.feature_names[c]);
    }
  }
  if (feature_indices.size() != d.n_features() - config.excluded_features.size()) {
    throw ConfigError("discover: an excluded feature is not a feature of the dataset");
  }
  if (feature_indices.empty()) {
    throw ConfigError("discover: all features are excluded; the region model needs at least one");
  }

  // Optional three-way row split: f on part 0, grouping on part 1, region
  // model and threshold on part 2.  Default: every part is all rows.
  std::vector<std::uint8_t> in_part[3];
  for (auto& part : in_part) part.assign(n, 1);
  if (config.three_way_split) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, {kThreeWayStream}));
    rng.shuffle(order);
    for (auto& part : in_part) part.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      in_part[i % 3][static_cast<std::size_t>(order[i])] = 1;
    }
    for (const auto& part : in_part) {
      if (std::find(part.begin(), part.end(), 1) == part.end()) {
        throw ConfigError("discover: three-way split needs at least 3 rows");
      }
    }
  }

  auto rows_of_part = [&](int p) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_part[p][i]) rows.push_back(static_cast<int>(i));
    }
    return rows;
  };

  // Outcome model and residuals (fixed for the whole loop).
  Model f;
  if (config.prefit_outcome != nullptr) {
    f = *config.prefit_outcome;
  } else if (config.three_way_split) {
    std::vector<int> rows = rows_of_part(0);
    Dataset part = subset(d, rows);
    f = fit_classifier(config.outcome, part.features, part.decisions, config.seed, config.jobs);
  } else {
    f = fit_classifier(config.outcome, d.features, d.decisions, config.seed, config.jobs);
  }
  Residuals r = residuals(f, d);

  // Rows and features the region model trains on.
  Matrix X_region_all = extract_columns(d.features, feature_indices);
  Matrix X_fit;
  if (config.three_way_split) {
    Dataset part = subset(d, rows_of_part(2));
    X_fit = extract_columns(part.features, feature_indices);
  } else {
    X_fit = X_region_all;
  }
  if (config.beta * static_cast<double>(X_fit.rows) < 1.0) {
    throw ConfigError("discover: beta leaves no rows for the score threshold");
  }

  std::uint64_t region_seed = derive_seed(config.seed, {kRegionModelStream});

  Membership s(n, 1);
  MembershipLog log;
  log.record(s);  // index 0: the initial all-rows region

  DiscoveryResult result;
  result.outcome_model = f;
  result.region.feature_indices = feature_indices;
  result.region.feature_names = feature_names;

  Model h;
  double threshold = 0.0;
  bool have_best = false;
  double best_l = 0.0;
  int best_iteration = 0;
  Model best_h;
  double best_threshold = 0.0;
  Membership best_membership;

  Termination termination = Termination::iteration_limit;
  int iterations = 0;

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    iterations = iter;

    // Grouping from the current region (on the grouping part's rows).
    Membership grouping_mask(n);
    for (std::size_t i = 0; i < n; ++i) grouping_mask[i] = s[i] && in_part[1][i] ? 1 : 0;
    OptimalGrouping g = optimal_grouping(r, grouping_mask);

    // Region model on targets r * G(agent).
    std::vector<double> targets;
    targets.reserve(X_fit.rows);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_part[2][i]) continue;
      targets.push_back(r.values[i] *
                        static_cast<double>(g.group[static_cast<std::size_t>(r.agent_index[i])]));
    }
    h = fit_regressor(config.region, X_fit, targets, region_seed, config.jobs);

    std::vector<double> fit_scores = h.predict(X_fit);
    threshold = score_threshold(fit_scores, config.beta);

    std::vector<double> all_scores =
        config.three_way_split ? h.predict(X_region_all) : fit_scores;
    Membership s_new(n);
    long long member_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s_new[i] = all_scores[i] >= threshold ? 1 : 0;
      member_count += s_new[i];
    }

    IterationRecord record;
    record.grouping = g.group;
    record.membership = s_new;
    record.member_count = member_count;
    record.q_hat = q_hat(r, s_new, g.group);
    record.l_hat = l_hat(r, s_new);
    result.history.push_back(std::move(record));

    if (!have_best || result.history.back().l_hat > best_l) {
      have_best = true;
      best_l = result.history.back().l_hat;
      best_iteration = iter;
      best_h = h;
      best_threshold = threshold;
      best_membership = s_new;
    }

    int seen = log.record(s_new);
    s = s_new;
    if (seen == iter - 1) {
      termination = Termination::converged;
      break;
    }
    if (seen >= 0) {
      termination = Termination::cycle_detected;
      break;
    }
  }

  result.termination = termination;
  if (termination == Termination::cycle_detected) {
    // Revisited an earlier region: keep the best iteration seen so far.
    result.region.model = best_h;
    result.region.threshold = best_threshold;
    result.membership = best_membership;
    result.returned_iteration = best_iteration;
  } else {
    result.region.model = h;
    result.region.threshold = threshold;
    result.membership = s;
    result.returned_iteration = iterations;
  }

  Membership final_mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    final_mask[i] = result.membership[i] && in_part[1][i] ? 1 : 0;
  }
  OptimalGrouping final_g = optimal_grouping(r, final_mask);
  result.grouping = final_g.group;
  result.grouping_absent = final_g.absent;
  result.training_l_hat = l_hat(r, result.membership);
  return result;
}

// ---------------------------------------------------------------------------
// Description
// ---------------------------------------------------------------------------

namespace {

double original_units(double normalized, std::size_t column, const NormStats* stats) {
  if (stats == nullptr) return normalized;
  if (stats->degenerate[column]) return stats->mean[column];
  return stats->mean[column] + stats->stddev[column] * normalized;
}

// Tightest interval a root-to-leaf path pins a feature into.  Repeated
// splits on one feature collapse to a single "lo < x <= hi" line.
struct PathBound {
  int feature;  // index into the region's feature list
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
};

void describe_tree_paths(const TreeModel& tree, const Region& region, const NormStats* stats,
                         int node, std::vector<PathBound>& bounds, std::ostringstream& out) {
  const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
  if (nd.feature < 0) {
    if (nd.value >= region.threshold) {
      out << "  rule (score " << format_double(nd.value) << ", rows " << nd.count << "):\n";
      if (bounds.empty()) out << "    always\n";
      for (const PathBound& b : bounds) {
        std::size_t source_col =
            static_cast<std::size_t>(region.feature_indices[static_cast<std::size_t>(b.feature)]);
        const std::string& name = region.feature_names[static_cast<std::size_t>(b.feature)];
        bool has_upper = std::isfinite(b.upper);
        bool has_lower = std::isfinite(b.lower);
        out << "    ";
        if (has_upper && has_lower) {
          out << format_double(original_units(b.lower, source_col, stats)) << " < " << name
              << " <= " << format_double(original_units(b.upper, source_col, stats));
        } else if (has_upper) {
          out << name << " <= " << format_double(original_units(b.upper, source_col, stats));
        } else {
          out << name << " > " << format_double(original_units(b.lower, source_col, stats));
        }
        out << "\n";
      }
    }
    return;
  }

  std::size_t slot = bounds.size();
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (bounds[k].feature == nd.feature) slot = k;
  }
  bool fresh = slot == bounds.size();
  if (fresh) bounds.push_back(PathBound{nd.feature});
  PathBound saved = bounds[slot];

  bounds[slot].upper = std::min(saved.upper, nd.threshold);
  describe_tree_paths(tree, region, stats, nd.left, bounds, out);
  bounds[slot] = saved;

  bounds[slot].lower = std::max(saved.lower, nd.threshold);
  describe_tree_paths(tree, region, stats, nd.right, bounds, out);

  if (fresh) {
    bounds.pop_back();
  } else {
    bounds[slot] = saved;
  }
}

}  // namespace

std::string describe_region(const Region& region, double member_fraction,
                            const NormStats* stats) {
  std::ostringstream out;
  char percent[32];
  std::snprintf(percent, sizeof percent, "%.1f", member_fraction * 100.0);
  out << "region: rows with score >= " << format_double(region.threshold) << " (" << percent
      << "% of training rows)\n";
  if (member_fraction >= 1.0) {
    out << "  the region covers every row\n";
  }

  switch (region.model.kind) {
    case ModelKind::tree: {
      std::vector<PathBound> bounds;
      describe_tree_paths(region.model.as_tree(), region, stats, 0, bounds, out);
      break;
    }
    case ModelKind::ridge:
    case ModelKind::logistic: {
      const LinearModel& lin = region.model.as_linear();
      out << "  linear score: intercept " << format_double(lin.intercept) << "\n";
      std::vector<std::size_t> order(lin.weights.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double wa = std::abs(lin.weights[a]);
        double wb = std::abs(lin.weights[b]);
        return wa != wb ? wa > wb : a < b;
      });
      for (std::size_t j : order) {
        out << "    " << region.feature_names[j] << ": weight "
            << format_double(lin.weights[j]) << "\n";
      }
      break;
    }
    case ModelKind::forest: {
      const ForestModel& forest = region.model.as_forest();
      std::size_t nodes = 0;
      for (const TreeModel& t : forest.trees) nodes += t.nodes.size();
      out << "  random forest score: " << forest.trees.size() << " trees, " << nodes
          << " nodes total (no compact rule form)\n";
      break;
    }
  }
  return out.str();
}

}  // namespace hetreg
