#pragma once

// Internal CART builder shared by fit_tree and fit_forest.  Not installed.

#include <vector>

#include "hetreg/learners.hpp"
#include "hetreg/model.hpp"
#include "hetreg/rng.hpp"

namespace hetreg::detail {

// Builds a tree on the given rows.  When rng is non-null, each split
// considers a random subset of `mtry` features (drawn per node); otherwise
// all features are candidates.
TreeModel build_tree(const Matrix& X, const std::vector<double>& y,
                     std::vector<int> rows, const TreeOptions& opts, Rng* rng, int mtry);

}  // namespace hetreg::detail
