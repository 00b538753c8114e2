#include "hetreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kFeatureStream = 0x66656174ULL;   // "feat"
constexpr std::uint64_t kAssignStream = 0x61676e74ULL;    // "agnt"
constexpr std::uint64_t kDecisionStream = 0x6465636eULL;  // "decn"

double sigmoid_of(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Region rules
// ---------------------------------------------------------------------------

std::string to_string(RuleOp op) {
  switch (op) {
    case RuleOp::le: return "<=";
    case RuleOp::lt: return "<";
    case RuleOp::ge: return ">=";
    case RuleOp::gt: return ">";
    case RuleOp::eq: return "==";
  }
  return "?";
}

RegionRule default_region_rule() {
  RegionRule rule;
  rule.atoms.push_back({"charge_misdemeanor", RuleOp::eq, 1.0});
  rule.atoms.push_back({"age", RuleOp::le, 35.0});
  return rule;
}

std::string describe_rule(const RegionRule& rule) {
  std::string out;
  for (std::size_t i = 0; i < rule.atoms.size(); ++i) {
    if (i > 0) out += " && ";
    const RuleAtom& atom = rule.atoms[i];
    char value[64];
    std::snprintf(value, sizeof value, "%g", atom.value);
    out += atom.feature + " " + to_string(atom.op) + " " + value;
  }
  return out;
}

RegionRule parse_rule(const std::string& text) {
  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::string();
    return s.substr(b, e - b + 1);
  };

  RegionRule rule;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find("&&", pos);
    std::string part = trim(text.substr(pos, next == std::string::npos ? std::string::npos
                                                                       : next - pos));
    if (part.empty()) throw ConfigError("region rule: empty clause in '" + text + "'");

    // Two-character operators first so "<=" is not read as "<".
    static const std::pair<const char*, RuleOp> ops[] = {
        {"<=", RuleOp::le}, {">=", RuleOp::ge}, {"==", RuleOp::eq},
        {"<", RuleOp::lt},  {">", RuleOp::gt},
    };
    std::size_t op_pos = std::string::npos;
    std::size_t op_len = 0;
    RuleOp op = RuleOp::le;
    for (const auto& [token, candidate] : ops) {
      std::size_t found = part.find(token);
      if (found != std::string::npos) {
        op_pos = found;
        op_len = std::char_traits<char>::length(token);
        op = candidate;
        break;
      }
    }
    if (op_pos == std::string::npos || op_pos == 0) {
      throw ConfigError("region rule: expected 'feature <op> value' in '" + part + "'");
    }

    RuleAtom atom;
    atom.feature = trim(part.substr(0, op_pos));
    atom.op = op;
    std::string value_text = trim(part.substr(op_pos + op_len));
    try {
      std::size_t used = 0;
      atom.value = std::stod(value_text, &used);
      if (used != value_text.size()) throw std::invalid_argument(value_text);
    } catch (const std::exception&) {
      throw ConfigError("region rule: bad numeric value '" + value_text + "' in '" + part +
                        "'");
    }
    rule.atoms.push_back(std::move(atom));

    if (next == std::string::npos) break;
    pos = next + 2;
  }
  if (rule.atoms.empty()) throw ConfigError("region rule: no clauses in '" + text + "'");
  return rule;
}

Membership rule_membership(const RegionRule& rule, const Matrix& features,
                           const std::vector<std::string>& feature_names) {
  if (rule.atoms.empty()) throw ConfigError("region rule has no clauses");
  std::vector<int> columns;
  columns.reserve(rule.atoms.size());
  for (const RuleAtom& atom : rule.atoms) {
    auto it = std::find(feature_names.begin(), feature_names.end(), atom.feature);
    if (it == feature_names.end()) {
      throw ConfigError("region rule references unknown feature '" + atom.feature + "'");
    }
    columns.push_back(static_cast<int>(it - feature_names.begin()));
  }

  Membership members(features.rows, 1);
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t k = 0; k < rule.atoms.size(); ++k) {
      double x = features.at(i, static_cast<std::size_t>(columns[k]));
      double v = rule.atoms[k].value;
      bool ok = false;
      switch (rule.atoms[k].op) {
        case RuleOp::le: ok = x <= v; break;
        case RuleOp::lt: ok = x < v; break;
        case RuleOp::ge: ok = x >= v; break;
        case RuleOp::gt: ok = x > v; break;
        case RuleOp::eq: ok = x == v; break;
      }
      if (!ok) {
        members[i] = 0;
        break;
      }
    }
  }
  return members;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string>& builtin_feature_names() {
  static const std::vector<std::string> names = {
      "age", "charge_misdemeanor", "priors_count", "juv_felony_count",
      "juv_misdemeanor_count"};
  return names;
}

Matrix sample_builtin_features(int n_rows, std::uint64_t seed) {
  Matrix x;
  x.rows = static_cast<std::size_t>(n_rows);
  x.cols = 5;
  x.data.resize(x.rows * x.cols);
  Rng rng(derive_seed(seed, {kFeatureStream}));
  for (std::size_t i = 0; i < x.rows; ++i) {
    double age = std::round(rng.normal(34.0, 11.0));
    x.at(i, 0) = std::clamp(age, 18.0, 70.0);
    x.at(i, 1) = rng.bernoulli(0.375) ? 1.0 : 0.0;
    double priors = std::floor(-2.5 * std::log(1.0 - rng.uniform()));
    x.at(i, 2) = std::min(priors, 40.0);
    x.at(i, 3) = static_cast<double>(rng.poisson(0.3));
    x.at(i, 4) = static_cast<double>(rng.poisson(0.5));
  }
  return x;
}

// Matches the typical magnitude and direction of a risk-style policy on the
// built-in features; chosen so the base rate sits near 25%.
void builtin_base_policy(std::vector<double>& weights, double& intercept) {
  weights = {-0.02, -0.3, 0.25, 0.4, 0.2};
  intercept = -1.0;
}

}  // namespace

GeneratedData generate(const SyntheticConfig& config) {
  if (config.n_agents < 1) throw ConfigError("generate: n_agents must be >= 1");
  if (config.group_coefficients.empty()) {
    throw ConfigError("generate: group_coefficients must be non-empty");
  }
  int n_groups = static_cast<int>(config.group_coefficients.size());

  // Features.
  Matrix features;
  std::vector<std::string> names;
  bool seeded = config.seed_features.rows > 0;
  if (seeded) {
    if (config.seed_feature_names.size() != config.seed_features.cols) {
      throw ConfigError("generate: seed feature names do not match the matrix width");
    }
    features = config.seed_features;
    names = config.seed_feature_names;
  } else {
    if (config.n_rows < 2) throw ConfigError("generate: n_rows must be >= 2");
    features = sample_builtin_features(config.n_rows, config.seed);
    names = builtin_feature_names();
  }
  std::size_t n = features.rows;

  // Agent -> group map.
  std::vector<int> agent_group = config.agent_group;
  if (agent_group.empty()) {
    agent_group.resize(static_cast<std::size_t>(config.n_agents));
    for (int a = 0; a < config.n_agents; ++a) {
      agent_group[static_cast<std::size_t>(a)] =
          static_cast<int>(static_cast<long long>(a) * n_groups / config.n_agents);
    }
  } else {
    if (agent_group.size() != static_cast<std::size_t>(config.n_agents)) {
      throw ConfigError("generate: agent_group must have one entry per agent");
    }
    for (int g : agent_group) {
      if (g < 0 || g >= n_groups) throw ConfigError("generate: agent_group value out of range");
    }
  }

  // Assignment weights.
  std::vector<double> weights = config.agent_weights;
  if (weights.empty()) {
    weights.assign(static_cast<std::size_t>(config.n_agents),
                   1.0 / static_cast<double>(config.n_agents));
  } else {
    if (weights.size() != static_cast<std::size_t>(config.n_agents)) {
      throw ConfigError("generate: agent_weights must have one entry per agent");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("generate: agent_weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("generate: agent_weights must have positive sum");
    for (double& w : weights) w /= total;
  }

  // Region.
  RegionRule rule = config.region_rule.atoms.empty() ? default_region_rule()
                                                     : config.region_rule;
  Membership region = rule_membership(rule, features, names);
  long long in_region = 0;
  for (std::uint8_t m : region) in_region += m;
  if (in_region == 0) {
    throw DataError("generate: region rule '" + describe_rule(rule) + "' selects no rows");
  }
  if (in_region == static_cast<long long>(n)) {
    throw DataError("generate: region rule '" + describe_rule(rule) + "' selects every row");
  }

  // Base policy.
  std::vector<double> base = config.base_weights;
  double intercept = config.base_intercept;
  if (base.empty()) {
    if (!config.seed_decisions.empty()) {
      if (config.seed_decisions.size() != n) {
        throw ConfigError("generate: seed_decisions must have one entry per seed row");
      }
      Model fitted = fit_logistic(features, config.seed_decisions, LogisticOptions{});
      const LinearModel& lm = fitted.as_linear();
      base = lm.weights;
      intercept = lm.intercept;
    } else if (names == builtin_feature_names()) {
      builtin_base_policy(base, intercept);
    } else {
      throw ConfigError(
          "generate: custom features need base_weights or seed_decisions to define the "
          "base policy");
    }
  } else if (base.size() != features.cols) {
    throw ConfigError("generate: base_weights must have one entry per feature");
  }

  // Oracle probabilities for every (row, group).
  SyntheticTruth truth;
  truth.region = region;
  truth.agent_group = agent_group;
  truth.agent_names.reserve(static_cast<std::size_t>(config.n_agents));
  for (int a = 0; a < config.n_agents; ++a) {
    truth.agent_names.push_back("agent_" + std::to_string(a));
  }
  truth.group_coefficients = config.group_coefficients;
  truth.base_weights = base;
  truth.base_intercept = intercept;
  truth.group_weights.assign(static_cast<std::size_t>(n_groups), 0.0);
  for (int a = 0; a < config.n_agents; ++a) {
    truth.group_weights[static_cast<std::size_t>(agent_group[static_cast<std::size_t>(a)])] +=
        weights[static_cast<std::size_t>(a)];
  }

  truth.prob_by_group.rows = n;
  truth.prob_by_group.cols = static_cast<std::size_t>(n_groups);
  truth.prob_by_group.data.resize(n * static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < n; ++i) {
    double z = intercept;
    for (std::size_t j = 0; j < features.cols; ++j) z += base[j] * features.at(i, j);
    for (int g = 0; g < n_groups; ++g) {
      double logit = z;
      if (region[i]) logit += config.group_coefficients[static_cast<std::size_t>(g)];
      truth.prob_by_group.at(i, static_cast<std::size_t>(g)) = sigmoid_of(logit);
    }
  }

  // Assign agents, then draw decisions from the assigned agent's policy.
  Dataset data;
  data.features = std::move(features);
  data.feature_names = names;
  data.agent_index.resize(n);
  data.decisions.resize(n);
  data.agent_names = truth.agent_names;

  Rng assign_rng(derive_seed(config.seed, {kAssignStream}));
  bool uniform = config.agent_weights.empty();
  std::vector<double> cumulative;
  if (!uniform) {
    cumulative.resize(weights.size());
    double acc = 0.0;
    for (std::size_t a = 0; a < weights.size(); ++a) {
      acc += weights[a];
      cumulative[a] = acc;
    }
    cumulative.back() = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    int a;
    if (uniform) {
      a = assign_rng.index(config.n_agents);
    } else {
      double u = assign_rng.uniform();
      a = static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                           cumulative.begin());
      if (a >= config.n_agents) a = config.n_agents - 1;
    }
    data.agent_index[i] = a;
  }

  Rng decision_rng(derive_seed(config.seed, {kDecisionStream}));
  for (std::size_t i = 0; i < n; ++i) {
    int g = agent_group[static_cast<std::size_t>(data.agent_index[i])];
    double p = truth.prob_by_group.at(i, static_cast<std::size_t>(g));
    data.decisions[i] = decision_rng.bernoulli(p) ? 1 : 0;
  }

  validate_dataset(data);
  return GeneratedData{std::move(data), std::move(truth)};
}

GeneratedData generate_multigroup(SyntheticConfig config, int n_groups, double lo, double hi) {
  if (n_groups < 2) throw ConfigError("generate_multigroup: n_groups must be >= 2");
  if (!(hi > lo)) throw ConfigError("generate_multigroup: coefficient range must be increasing");
  config.group_coefficients.resize(static_cast<std::size_t>(n_groups));
  for (int g = 0; g < n_groups; ++g) {
    config.group_coefficients[static_cast<std::size_t>(g)] =
        lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(n_groups - 1);
  }
  config.agent_group.clear();  // redeal into near-equal blocks
  return generate(config);
}

// ---------------------------------------------------------------------------
// Oracle objective
// ---------------------------------------------------------------------------

double counterfactual_q(const SyntheticTruth& truth, const Membership& region,
                        const Grouping& selected_groups) {
  std::size_t n = truth.prob_by_group.rows;
  int n_groups = truth.n_groups();
  if (region.size() != n) {
    throw ConfigError("counterfactual_q: membership length does not match the truth");
  }
  if (selected_groups.size() != static_cast<std::size_t>(n_groups)) {
    throw ConfigError("counterfactual_q: need one selection flag per group");
  }

  long long members = 0;
  for (std::uint8_t m : region) members += m;
  if (members == 0) throw ComputeError("counterfactual_q: empty region");

  // mean over rows in the region of (p_g(x) - pbar(x)), per group.
  std::vector<double> gap(static_cast<std::size_t>(n_groups), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!region[i]) continue;
    double pbar = 0.0;
    for (int g = 0; g < n_groups; ++g) {
      pbar += truth.group_weights[static_cast<std::size_t>(g)] *
              truth.prob_by_group.at(i, static_cast<std::size_t>(g));
    }
    for (int g = 0; g < n_groups; ++g) {
      gap[static_cast<std::size_t>(g)] +=
          truth.prob_by_group.at(i, static_cast<std::size_t>(g)) - pbar;
    }
  }

  double q = 0.0;
  for (int g = 0; g < n_groups; ++g) {
    if (!selected_groups[static_cast<std::size_t>(g)]) continue;
    q += truth.group_weights[static_cast<std::size_t>(g)] *
         (gap[static_cast<std::size_t>(g)] / static_cast<double>(members));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Truth sidecar
// ---------------------------------------------------------------------------

void save_truth(const SyntheticTruth& truth, const std::string& path) {
  nlohmann::json j;
  j["format"] = "hetreg-truth";
  j["version"] = 1;
  j["region"] = truth.region;
  j["agent_group"] = truth.agent_group;
  j["agent_names"] = truth.agent_names;
  j["group_weights"] = truth.group_weights;
  j["group_coefficients"] = truth.group_coefficients;
  j["base_weights"] = truth.base_weights;
  j["base_intercept"] = truth.base_intercept;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < truth.prob_by_group.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t g = 0; g < truth.prob_by_group.cols; ++g) {
      row.push_back(truth.prob_by_group.at(i, g));
    }
    rows.push_back(std::move(row));
  }
  j["prob_by_group"] = std::move(rows);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

SyntheticTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "hetreg-truth" || j.value("version", 0) != 1) {
    throw DataError("'" + path + "' is not a version-1 truth file");
  }

  SyntheticTruth truth;
  try {
    truth.region = j.at("region").get<Membership>();
    truth.agent_group = j.at("agent_group").get<std::vector<int>>();
    truth.agent_names = j.at("agent_names").get<std::vector<std::string>>();
    truth.group_weights = j.at("group_weights").get<std::vector<double>>();
    truth.group_coefficients = j.at("group_coefficients").get<std::vector<double>>();
    truth.base_weights = j.at("base_weights").get<std::vector<double>>();
    truth.base_intercept = j.at("base_intercept").get<double>();
    const auto& rows = j.at("prob_by_group");
    truth.prob_by_group.rows = rows.size();
    truth.prob_by_group.cols = static_cast<std::size_t>(truth.n_groups());
    truth.prob_by_group.data.reserve(truth.prob_by_group.rows * truth.prob_by_group.cols);
    for (const auto& row : rows) {
      if (row.size() != truth.prob_by_group.cols) {
        throw DataError("'" + path + "': oracle row width does not match the group count");
      }
      for (const auto& v : row) truth.prob_by_group.data.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' has the wrong shape: " + e.what());
  }
  if (truth.region.size() != truth.prob_by_group.rows) {
    throw DataError("'" + path + "': region length does not match the oracle");
  }
  if (truth.agent_names.size() != truth.agent_group.size()) {
    throw DataError("'" + path + "': agent_names and agent_group lengths differ");
  }
  return truth;
}

}  // namespace hetreg
