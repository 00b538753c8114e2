#include "hetreg/model_json.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "hetreg/errors.hpp"

namespace hetreg {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json tree_to_json(const TreeModel& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"value", n.value},
                     {"count", n.count}});
  }
  return nodes;
}

TreeModel tree_from_json(const nlohmann::json& nodes) {
  TreeModel tree;
  tree.nodes.reserve(nodes.size());
  for (const auto& j : nodes) {
    TreeNode n;
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.left = j.at("left").get<int>();
    n.right = j.at("right").get<int>();
    n.value = j.at("value").get<double>();
    n.count = j.at("count").get<int>();
    tree.nodes.push_back(n);
  }
  if (tree.nodes.empty()) throw DataError("model file: tree has no nodes");
  return tree;
}

}  // namespace

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["format"] = "hetreg-model";
  j["version"] = kFormatVersion;
  j["kind"] = to_string(m.kind);
  j["n_features"] = m.n_features;
  j["hyperparameters"] = m.hyperparameters;

  nlohmann::json params;
  switch (m.kind) {
    case ModelKind::logistic:
    case ModelKind::ridge: {
      const LinearModel& lin = m.as_linear();
      params["weights"] = lin.weights;
      params["intercept"] = lin.intercept;
      break;
    }
    case ModelKind::tree:
      params["nodes"] = tree_to_json(m.as_tree());
      break;
    case ModelKind::forest: {
      nlohmann::json trees = nlohmann::json::array();
      for (const TreeModel& t : m.as_forest().trees) trees.push_back(tree_to_json(t));
      params["trees"] = std::move(trees);
      break;
    }
  }
  j["parameters"] = std::move(params);
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hetreg-model") {
    throw DataError("model file: missing or wrong format marker");
  }
  if (j.value("version", -1) != kFormatVersion) {
    throw DataError("model file: unsupported version");
  }

  Model m;
  m.kind = model_kind_from_string(j.at("kind").get<std::string>());
  m.n_features = j.at("n_features").get<std::size_t>();
  if (j.contains("hyperparameters")) {
    m.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
  }

  const nlohmann::json& params = j.at("parameters");
  switch (m.kind) {
    case ModelKind::logistic:
    case ModelKind::ridge: {
      LinearModel lin;
      lin.weights = params.at("weights").get<std::vector<double>>();
      lin.intercept = params.at("intercept").get<double>();
      lin.logistic_link = m.kind == ModelKind::logistic;
      if (lin.weights.size() != m.n_features) {
        throw DataError("model file: weight count does not match n_features");
      }
      m.impl = std::move(lin);
      break;
    }
    case ModelKind::tree:
      m.impl = tree_from_json(params.at("nodes"));
      break;
    case ModelKind::forest: {
      ForestModel forest;
      for (const auto& t : params.at("trees")) forest.trees.push_back(tree_from_json(t));
      if (forest.trees.empty()) throw DataError("model file: forest has no trees");
      m.impl = std::move(forest);
      break;
    }
  }
  return m;
}

void save_model(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << model_to_json(m).dump(2) << '\n';
  if (!out) throw DataError("failed while writing '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hetreg
