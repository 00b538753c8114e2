#include <cmath>
#include <numeric>

#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/parallel.hpp"
#include "tree_builder.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kForestStream = 0x666f72657374ULL;  // "forest"

}  // namespace

Model fit_forest(const Matrix& X, const std::vector<double>& y, const ForestOptions& opts) {
  std::size_t n = X.rows;
  std::size_t d = X.cols;
  if (n == 0 || y.size() != n) throw ConfigError("forest fit: bad input sizes");
  if (opts.n_trees < 1) throw ConfigError("forest fit: n_trees must be >= 1");
  if (opts.min_samples_leaf < 1 || static_cast<std::size_t>(opts.min_samples_leaf) > n) {
    throw ConfigError("forest fit: min_samples_leaf out of range");
  }
  if (opts.mtry < 0 || static_cast<std::size_t>(opts.mtry) > d) {
    throw ConfigError("forest fit: mtry out of range");
  }
  if (opts.classification) {
    for (double t : y) {
      if (t != 0.0 && t != 1.0) {
        throw ConfigError("forest fit: classification targets must be 0 or 1");
      }
    }
  }

  int mtry = opts.mtry > 0
                 ? opts.mtry
                 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

  TreeOptions tree_opts;
  tree_opts.min_samples_leaf = opts.min_samples_leaf;
  tree_opts.max_depth = opts.max_depth;
  tree_opts.classification = opts.classification;

  // One self-contained seed per tree: results are identical whether trees
  // are fit sequentially or across threads.
  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(opts.n_trees));
  parallel_for(static_cast<std::size_t>(opts.n_trees), opts.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(opts.seed, {kForestStream, static_cast<std::uint64_t>(t)}));
    std::vector<int> rows(n);
    if (opts.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        rows[i] = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(n) - 1));
      }
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees[t] = detail::build_tree(X, y, std::move(rows), tree_opts, &rng, mtry);
  });

  Model m;
  m.kind = ModelKind::forest;
  m.n_features = d;
  m.hyperparameters = {{"n_trees", static_cast<double>(opts.n_trees)},
                       {"min_samples_leaf", static_cast<double>(opts.min_samples_leaf)},
                       {"max_depth", static_cast<double>(opts.max_depth)},
                       {"classification", opts.classification ? 1.0 : 0.0},
                       {"mtry", static_cast<double>(mtry)},
                       {"bootstrap", opts.bootstrap ? 1.0 : 0.0}};
  m.impl = std::move(forest);
  return m;
}

}  // namespace hetreg
