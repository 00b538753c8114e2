#include "hetreg/model.hpp"

#include <cmath>

#include "hetreg/errors.hpp"

namespace hetreg {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::logistic: return "logistic";
    case ModelKind::ridge: return "ridge";
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "logistic") return ModelKind::logistic;
  if (name == "ridge") return ModelKind::ridge;
  if (name == "tree") return ModelKind::tree;
  if (name == "forest") return ModelKind::forest;
  throw ConfigError("unknown model kind '" + name + "'");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearModel::predict_row(const double* x) const {
  double z = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
  return logistic_link ? sigmoid(z) : z;
}

int TreeModel::leaf_index(const double* x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(i)];
    i = (x[node.feature] <= node.threshold) ? node.left : node.right;
  }
  return i;
}

double TreeModel::predict_row(const double* x) const {
  return nodes[static_cast<std::size_t>(leaf_index(x))].value;
}

double ForestModel::predict_row(const double* x) const {
  double sum = 0.0;
  for (const TreeModel& tree : trees) sum += tree.predict_row(x);
  return sum / static_cast<double>(trees.size());
}

double Model::predict_row(const double* x) const {
  return std::visit([&](const auto& m) { return m.predict_row(x); }, impl);
}

std::vector<double> Model::predict(const Matrix& X) const {
  if (X.cols != n_features) {
    throw ConfigError("model expects " + std::to_string(n_features) +
                      " features, got " + std::to_string(X.cols));
  }
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict_row(X.row(r));
  return out;
}

}  // namespace hetreg
