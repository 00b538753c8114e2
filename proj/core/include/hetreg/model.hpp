#pragma once

// Fitted models.  Four kinds: L2-penalized logistic regression, ridge
// regression, a CART-style decision tree, and a random forest of such trees.
// A Model knows its kind, the hyperparameters it was fit with, and its
// fitted parameters; prediction is the only behavior.  Logistic models emit
// probabilities in (0,1); the regressors emit raw values.

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "hetreg/matrix.hpp"

namespace hetreg {

enum class ModelKind { logistic, ridge, tree, forest };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
  bool logistic_link = false;  // apply sigmoid at predict time

  double predict_row(const double* x) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the training rows in this node
  int count = 0;       // training rows in this node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; x <= threshold goes left

  double predict_row(const double* x) const;
  int leaf_index(const double* x) const;
};

struct ForestModel {
  std::vector<TreeModel> trees;

  // Mean of the tree predictions, summed in tree order.
  double predict_row(const double* x) const;
};

struct Model {
  ModelKind kind = ModelKind::logistic;
  std::size_t n_features = 0;
  std::map<std::string, double> hyperparameters;
  std::variant<LinearModel, TreeModel, ForestModel> impl;

  double predict_row(const double* x) const;
  // Throws ConfigError if X's column count does not match n_features.
  std::vector<double> predict(const Matrix& X) const;

  const LinearModel& as_linear() const { return std::get<LinearModel>(impl); }
  const TreeModel& as_tree() const { return std::get<TreeModel>(impl); }
  const ForestModel& as_forest() const { return std::get<ForestModel>(impl); }
};

double sigmoid(double z);

}  // namespace hetreg
