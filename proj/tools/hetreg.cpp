// hetreg: find regions of a feature space where decision-makers disagree.
//
// Subcommands cover the full pipeline: generate synthetic decision data with
// known structure, discover a disagreement region on real or synthetic data,
// tune the region-fraction parameter by permutation testing, benchmark a
// region against random ones on held-out data, run the direct predictive
// baseline, score candidate regions against a known truth, and measure
// refit stability across folds.
//
// Every report is JSON with the resolved configuration and a hash of it
// embedded; no timestamps or machine-specific values, so identical inputs
// produce byte-identical reports (the --jobs flag changes scheduling only,
// never results).  Exit codes: 0 success, 2 bad configuration or arguments,
// 3 unreadable or malformed data, 4 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hetreg/baselines.hpp"
#include "hetreg/beta_tuning.hpp"
#include "hetreg/dataset.hpp"
#include "hetreg/discovery.hpp"
#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/model_json.hpp"
#include "hetreg/objective.hpp"
#include "hetreg/rng.hpp"
#include "hetreg/synthetic.hpp"
#include "hetreg/validation.hpp"

namespace {

using hetreg::ComputeError;
using hetreg::ConfigError;
using hetreg::DataError;
using json = nlohmann::json;

constexpr std::uint64_t kBenchStream = 0x62656e6368ULL;      // "bench"
constexpr std::uint64_t kFoldSplitStream = 0x6673706c74ULL;  // "fsplt"
constexpr std::uint64_t kCliSplitStream = 0x63736c74ULL;     // "cslt"

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

// FNV-1a over the serialized config; a cheap fingerprint for "same inputs".
std::string fingerprint(const json& j) {
  std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

// Reports embed the config and its fingerprint, then go to --report (and a
// short human summary to stdout).
void emit_report(json& report, const json& config, const std::string& path) {
  report["config"] = config;
  report["config_hash"] = fingerprint(config);
  if (!path.empty()) write_text(path, report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct DataOptions {
  std::string path;
  std::string agent_column = "agent";
  std::string decision_column = "decision";
};

void add_data_options(CLI::App* cmd, DataOptions& opts, bool required = true) {
  auto* o = cmd->add_option("--data", opts.path, "Input dataset CSV");
  if (required) o->required();
  cmd->add_option("--agent-column", opts.agent_column, "Agent id column name")
      ->capture_default_str();
  cmd->add_option("--decision-column", opts.decision_column, "Binary decision column name")
      ->capture_default_str();
}

hetreg::Dataset load_data(const DataOptions& opts, const std::string& path_override = "") {
  hetreg::CsvSchema schema;
  schema.agent_column = opts.agent_column;
  schema.decision_column = opts.decision_column;
  return hetreg::load_csv(path_override.empty() ? opts.path : path_override, schema);
}

struct LearnerOptions {
  std::string kind;
  double logistic_c = 1.0;
  double ridge_alpha = 1.0;
  int min_samples_leaf = 10;
  int max_depth = -1;
  int n_trees = 100;
};

void add_learner_options(CLI::App* cmd, const std::string& prefix, LearnerOptions& opts,
                         const std::string& default_kind, const std::string& allowed) {
  opts.kind = default_kind;
  cmd->add_option("--" + prefix + "-model", opts.kind, "Model for the " + prefix + " (" + allowed + ")")
      ->capture_default_str();
  if (allowed.find("logistic") != std::string::npos) {
    cmd->add_option("--" + prefix + "-c", opts.logistic_c,
                    "Logistic inverse regularization strength")
        ->capture_default_str();
  }
  if (allowed.find("ridge") != std::string::npos) {
    cmd->add_option("--" + prefix + "-alpha", opts.ridge_alpha, "Ridge penalty")
        ->capture_default_str();
  }
  cmd->add_option("--" + prefix + "-min-leaf", opts.min_samples_leaf,
                  "Tree/forest minimum samples per leaf")
      ->capture_default_str();
  cmd->add_option("--" + prefix + "-depth", opts.max_depth, "Tree/forest depth cap (-1 = none)")
      ->capture_default_str();
  cmd->add_option("--" + prefix + "-trees", opts.n_trees, "Forest size")
      ->capture_default_str();
}

hetreg::LearnerSpec to_spec(const LearnerOptions& opts) {
  hetreg::LearnerSpec spec;
  spec.kind = hetreg::model_kind_from_string(opts.kind);
  spec.logistic_c = opts.logistic_c;
  spec.ridge_alpha = opts.ridge_alpha;
  spec.min_samples_leaf = opts.min_samples_leaf;
  spec.max_depth = opts.max_depth;
  spec.n_trees = opts.n_trees;
  return spec;
}

json spec_to_json(const hetreg::LearnerSpec& spec) {
  json j;
  j["kind"] = hetreg::to_string(spec.kind);
  switch (spec.kind) {
    case hetreg::ModelKind::logistic:
      j["c"] = spec.logistic_c;
      break;
    case hetreg::ModelKind::ridge:
      j["alpha"] = spec.ridge_alpha;
      break;
    case hetreg::ModelKind::tree:
      j["min_samples_leaf"] = spec.min_samples_leaf;
      j["max_depth"] = spec.max_depth;
      break;
    case hetreg::ModelKind::forest:
      j["min_samples_leaf"] = spec.min_samples_leaf;
      j["max_depth"] = spec.max_depth;
      j["n_trees"] = spec.n_trees;
      break;
  }
  return j;
}

json norm_to_json(const hetreg::NormStats& stats, const std::vector<std::string>& names) {
  json j;
  j["feature_names"] = names;
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  j["degenerate"] = stats.degenerate;
  return j;
}

hetreg::NormStats norm_from_json(const json& j) {
  hetreg::NormStats stats;
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.stddev = j.at("stddev").get<std::vector<double>>();
  stats.degenerate = j.at("degenerate").get<std::vector<std::uint8_t>>();
  return stats;
}

json region_to_json(const hetreg::Region& region) {
  json j;
  j["format"] = "hetreg-region";
  j["version"] = 1;
  j["threshold"] = region.threshold;
  j["feature_indices"] = region.feature_indices;
  j["feature_names"] = region.feature_names;
  j["model"] = hetreg::model_to_json(region.model);
  return j;
}

hetreg::Region region_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "hetreg-region" || j.value("version", 0) != 1) {
    throw DataError("not a version-1 region description");
  }
  hetreg::Region region;
  region.threshold = j.at("threshold").get<double>();
  region.feature_indices = j.at("feature_indices").get<std::vector<int>>();
  region.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  region.model = hetreg::model_from_json(j.at("model"));
  return region;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(',', pos);
    std::string piece =
        text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(piece, &used));
      while (used < piece.size() && std::isspace(static_cast<unsigned char>(piece[used]))) ++used;
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw ConfigError(what + ": bad number '" + piece + "'");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discovery plumbing shared by discover / tune-beta / validate / stability
// ---------------------------------------------------------------------------

struct PipelineOptions {
  DataOptions data;
  LearnerOptions outcome;
  LearnerOptions region;
  double beta = 0.25;
  int max_iter = 100;
  std::vector<std::string> excluded;
  bool three_way_split = false;
  bool no_normalize = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string report;
};

void add_pipeline_options(CLI::App* cmd, PipelineOptions& opts, bool with_beta = true) {
  add_data_options(cmd, opts.data);
  add_learner_options(cmd, "outcome", opts.outcome, "logistic", "logistic|tree|forest");
  add_learner_options(cmd, "region", opts.region, "tree", "ridge|tree|forest");
  if (with_beta) {
    cmd->add_option("--beta", opts.beta, "Region fraction to keep, in (0, 1]")
        ->capture_default_str();
  }
  cmd->add_option("--max-iter", opts.max_iter, "Iteration cap for the alternating loop")
      ->capture_default_str();
  cmd->add_option("--exclude", opts.excluded,
                  "Features the region model must not use (repeatable)");
  cmd->add_flag("--three-way-split", opts.three_way_split,
                "Fit outcome model, grouping, and region model on disjoint thirds");
  cmd->add_flag("--no-normalize", opts.no_normalize, "Skip feature standardization");
  cmd->add_option("--seed", opts.seed, "Master random seed")->capture_default_str();
  cmd->add_option("--jobs", opts.jobs, "Worker threads (never changes results)")
      ->capture_default_str();
  cmd->add_option("--report", opts.report, "Write the JSON report here");
}

json pipeline_config_json(const PipelineOptions& opts, bool with_beta = true) {
  json c;
  c["data"] = opts.data.path;
  c["agent_column"] = opts.data.agent_column;
  c["decision_column"] = opts.data.decision_column;
  c["outcome"] = spec_to_json(to_spec(opts.outcome));
  c["region"] = spec_to_json(to_spec(opts.region));
  if (with_beta) c["beta"] = opts.beta;
  c["max_iter"] = opts.max_iter;
  c["excluded_features"] = opts.excluded;
  c["three_way_split"] = opts.three_way_split;
  c["normalize"] = !opts.no_normalize;
  c["seed"] = opts.seed;
  return c;
}

hetreg::DiscoverConfig to_discover_config(const PipelineOptions& opts) {
  hetreg::DiscoverConfig config;
  config.outcome = to_spec(opts.outcome);
  config.region = to_spec(opts.region);
  config.beta = opts.beta;
  config.max_iter = opts.max_iter;
  config.seed = opts.seed;
  config.excluded_features = opts.excluded;
  config.three_way_split = opts.three_way_split;
  config.jobs = opts.jobs;
  return config;
}

json discovery_to_json(const hetreg::DiscoveryResult& result, const hetreg::Dataset& d,
                       const hetreg::NormStats* stats) {
  json r;
  r["termination"] = hetreg::to_string(result.termination);
  r["iterations"] = result.history.size();
  r["returned_iteration"] = result.returned_iteration;
  r["training_l_hat"] = result.training_l_hat;
  r["threshold"] = result.region.threshold;

  long long members = 0;
  for (std::uint8_t m : result.membership) members += m;
  r["member_count"] = members;
  double fraction = static_cast<double>(members) / static_cast<double>(d.n_rows());
  r["member_fraction"] = fraction;

  r["grouping"] = result.grouping;
  r["grouping_absent"] = result.grouping_absent;
  json history = json::array();
  for (const auto& it : result.history) {
    history.push_back(
        {{"q_hat", it.q_hat}, {"l_hat", it.l_hat}, {"member_count", it.member_count}});
  }
  r["history"] = std::move(history);
  r["region_description"] = hetreg::describe_region(result.region, fraction, stats);
  return r;
}

// Truth group (0/1) of each listed agent, joined by name.
hetreg::Grouping truth_grouping_for(const hetreg::SyntheticTruth& truth,
                                    const std::vector<std::string>& agents) {
  std::map<std::string, int> group_of;
  for (std::size_t a = 0; a < truth.agent_names.size(); ++a) {
    group_of[truth.agent_names[a]] = truth.agent_group[a];
  }
  hetreg::Grouping g;
  g.reserve(agents.size());
  for (const std::string& name : agents) {
    auto it = group_of.find(name);
    if (it == group_of.end()) {
      throw DataError("truth file does not know agent '" + name + "'");
    }
    g.push_back(static_cast<std::uint8_t>(it->second));
  }
  return g;
}

// Loads, optionally standardizes, and reports the warnings.
hetreg::NormStats prepare_features(hetreg::Dataset& d, bool no_normalize, json* norm_json) {
  hetreg::NormStats stats;
  if (no_normalize) {
    if (norm_json) *norm_json = nullptr;
    return stats;
  }
  stats = hetreg::normalize(d);
  for (const std::string& w : stats.warnings) std::cerr << "warning: " << w << "\n";
  if (norm_json) *norm_json = norm_to_json(stats, d.feature_names);
  return stats;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string out_data;
  std::string out_truth;
  std::string report;
  int rows = 4500;
  int agents = 40;
  std::string coefficients = "0,1.5";
  int groups = 0;  // 0: use --coefficients; >= 2: equally spaced
  double coef_lo = -1.5;
  double coef_hi = 1.5;
  std::string rule;
  std::string agent_weights;
  std::string seed_data;
  DataOptions seed_schema;
  std::string base_weights;
  double base_intercept = 0.0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateOptions& opts) {
  hetreg::SyntheticConfig config;
  config.n_rows = opts.rows;
  config.n_agents = opts.agents;
  config.seed = opts.seed;
  if (!opts.rule.empty()) config.region_rule = hetreg::parse_rule(opts.rule);
  if (!opts.agent_weights.empty()) {
    config.agent_weights = parse_double_list(opts.agent_weights, "--agent-weights");
  }
  if (!opts.base_weights.empty()) {
    config.base_weights = parse_double_list(opts.base_weights, "--base-weights");
    config.base_intercept = opts.base_intercept;
  }
  if (!opts.seed_data.empty()) {
    hetreg::Dataset seed_set = load_data(opts.seed_schema, opts.seed_data);
    config.seed_features = std::move(seed_set.features);
    config.seed_feature_names = std::move(seed_set.feature_names);
    if (config.base_weights.empty()) config.seed_decisions = std::move(seed_set.decisions);
  }

  hetreg::GeneratedData generated;
  if (opts.groups >= 2) {
    generated = hetreg::generate_multigroup(config, opts.groups, opts.coef_lo, opts.coef_hi);
  } else {
    config.group_coefficients = parse_double_list(opts.coefficients, "--coefficients");
    generated = hetreg::generate(config);
  }
  const hetreg::Dataset& d = generated.data;
  const hetreg::SyntheticTruth& truth = generated.truth;

  hetreg::write_csv(opts.out_data, d);
  hetreg::save_truth(truth, opts.out_truth);

  long long in_region = 0;
  for (std::uint8_t m : truth.region) in_region += m;
  double fraction = static_cast<double>(in_region) / static_cast<double>(d.n_rows());
  std::vector<int> group_sizes(static_cast<std::size_t>(truth.n_groups()), 0);
  for (int g : truth.agent_group) group_sizes[static_cast<std::size_t>(g)] += 1;
  double decision_rate = 0.0;
  for (std::uint8_t y : d.decisions) decision_rate += y;
  decision_rate /= static_cast<double>(d.n_rows());

  json config_json;
  config_json["rows"] = d.n_rows();
  config_json["agents"] = opts.agents;
  config_json["group_coefficients"] = truth.group_coefficients;
  config_json["rule"] = opts.rule;
  config_json["agent_weights"] = opts.agent_weights;
  config_json["seed_data"] = opts.seed_data;
  config_json["base_weights"] = opts.base_weights;
  config_json["seed"] = opts.seed;

  json report;
  report["command"] = "generate";
  report["files"] = {{"data", opts.out_data}, {"truth", opts.out_truth}};
  report["n_rows"] = d.n_rows();
  report["n_agents"] = opts.agents;
  report["region_fraction"] = fraction;
  report["group_sizes"] = group_sizes;
  report["decision_rate"] = decision_rate;
  report["base_intercept"] = truth.base_intercept;
  report["resolved_base_weights"] = truth.base_weights;
  emit_report(report, config_json, opts.report);

  std::printf("wrote %zu rows x %zu features for %d agents to %s\n", d.n_rows(),
              d.n_features(), opts.agents, opts.out_data.c_str());
  std::printf("region fraction %.4f, decision rate %.4f, truth in %s\n", fraction,
              decision_rate, opts.out_truth.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// discover
// ---------------------------------------------------------------------------

struct DiscoverOptions {
  PipelineOptions pipeline;
  std::string save_region;
  std::string save_outcome;
};

int cmd_discover(const DiscoverOptions& opts) {
  hetreg::Dataset d = load_data(opts.pipeline.data);
  json norm_json;
  hetreg::NormStats stats = prepare_features(d, opts.pipeline.no_normalize, &norm_json);

  hetreg::DiscoveryResult result = hetreg::discover(d, to_discover_config(opts.pipeline));

  json report;
  report["command"] = "discover";
  report["agents"] = d.agent_names;
  report["normalization"] = norm_json;
  report["result"] =
      discovery_to_json(result, d, opts.pipeline.no_normalize ? nullptr : &stats);
  report["region"] = region_to_json(result.region);
  report["outcome_model"] = hetreg::model_to_json(result.outcome_model);
  emit_report(report, pipeline_config_json(opts.pipeline), opts.pipeline.report);

  if (!opts.save_region.empty()) {
    json r = region_to_json(result.region);
    r["normalization"] = norm_json;
    write_text(opts.save_region, r.dump(2) + "\n");
  }
  if (!opts.save_outcome.empty()) {
    hetreg::save_model(opts.save_outcome, result.outcome_model);
  }

  std::printf("%s after %zu iteration(s); training objective %.6f\n",
              hetreg::to_string(result.termination).c_str(), result.history.size(),
              result.training_l_hat);
  std::fputs(report["result"]["region_description"].get<std::string>().c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// tune-beta
// ---------------------------------------------------------------------------

struct TuneBetaOptions {
  PipelineOptions pipeline;
  std::string betas;
  int permutations = 40;
  std::string plot;
};

int cmd_tune_beta(const TuneBetaOptions& opts) {
  hetreg::Dataset d = load_data(opts.pipeline.data);
  json norm_json;
  prepare_features(d, opts.pipeline.no_normalize, &norm_json);

  hetreg::BetaScanConfig scan;
  scan.candidates = opts.betas.empty() ? hetreg::default_beta_grid()
                                       : parse_double_list(opts.betas, "--betas");
  scan.permutations = opts.permutations;
  scan.seed = opts.pipeline.seed;
  scan.jobs = opts.pipeline.jobs;

  hetreg::BetaScan result = hetreg::tune_beta(d, to_discover_config(opts.pipeline), scan);

  json config_json = pipeline_config_json(opts.pipeline, /*with_beta=*/false);
  config_json["betas"] = scan.candidates;
  config_json["permutations"] = scan.permutations;

  json candidates = json::array();
  std::string plot_csv = "beta,p_value,q_obs,null_mean,null_std\n";
  for (const auto& c : result.candidates) {
    double mean = 0.0;
    for (double v : c.null_values) mean += v;
    mean /= static_cast<double>(c.null_values.size());
    double ss = 0.0;
    for (double v : c.null_values) ss += (v - mean) * (v - mean);
    double stddev = std::sqrt(ss / static_cast<double>(c.null_values.size()));
    candidates.push_back({{"beta", c.beta},
                          {"q_obs", c.q_obs},
                          {"p_value", c.p_value},
                          {"null_mean", mean},
                          {"null_std", stddev},
                          {"null_values", c.null_values}});
    char line[160];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", c.beta, c.p_value,
                  c.q_obs, mean, stddev);
    plot_csv += line;
  }

  json report;
  report["command"] = "tune-beta";
  report["agents"] = d.agent_names;
  report["normalization"] = norm_json;
  report["candidates"] = std::move(candidates);
  report["selected_beta"] = result.selected_beta;
  report["selected_index"] = result.selected_index;
  emit_report(report, config_json, opts.pipeline.report);

  if (!opts.plot.empty()) write_text(opts.plot, plot_csv);

  for (const auto& c : result.candidates) {
    std::printf("beta %.2f  p %.4f  q_obs %.6f\n", c.beta, c.p_value, c.q_obs);
  }
  std::printf("selected beta %.2f\n", result.selected_beta);
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateOptions {
  PipelineOptions pipeline;
  std::string test_path;
  double test_fraction = 0.2;
  int n_random = 100;
};

int cmd_validate(const ValidateOptions& opts) {
  hetreg::Dataset train = load_data(opts.pipeline.data);
  hetreg::Dataset test;
  if (!opts.test_path.empty()) {
    test = load_data(opts.pipeline.data, opts.test_path);
    if (test.feature_names != train.feature_names) {
      throw DataError("validate: --test columns do not match --data");
    }
  } else {
    if (!(opts.test_fraction > 0.0 && opts.test_fraction < 1.0)) {
      throw ConfigError("validate: --test-fraction must be in (0, 1)");
    }
    hetreg::SplitSpec spec;
    spec.fractions[0] = 1.0 - opts.test_fraction;
    spec.fractions[1] = 0.0;
    spec.fractions[2] = opts.test_fraction;
    spec.seed = hetreg::derive_seed(opts.pipeline.seed, {kCliSplitStream});
    hetreg::SplitResult split = hetreg::split_stratified(train, spec);
    test = std::move(split.test);
    train = std::move(split.train);
  }

  json norm_json;
  hetreg::NormStats stats = prepare_features(train, opts.pipeline.no_normalize, &norm_json);
  if (!opts.pipeline.no_normalize) hetreg::apply_normalization(test, stats);

  hetreg::DiscoveryResult result = hetreg::discover(train, to_discover_config(opts.pipeline));
  hetreg::RegionBenchmark bench = hetreg::benchmark_region(
      result.region, result.outcome_model, train, test, opts.n_random,
      hetreg::derive_seed(opts.pipeline.seed, {kBenchStream}), opts.pipeline.jobs);

  json config_json = pipeline_config_json(opts.pipeline);
  config_json["test"] = opts.test_path;
  config_json["test_fraction"] = opts.test_path.empty() ? json(opts.test_fraction) : json();
  config_json["n_random"] = opts.n_random;

  json report;
  report["command"] = "validate";
  report["agents"] = train.agent_names;
  report["normalization"] = norm_json;
  report["result"] =
      discovery_to_json(result, train, opts.pipeline.no_normalize ? nullptr : &stats);
  report["benchmark"] = {{"l_train", bench.l_train},
                         {"l_test", bench.l_test},
                         {"train_members", bench.train_members},
                         {"test_members", bench.test_members},
                         {"n_random", bench.n_random},
                         {"random_mean", bench.random_mean},
                         {"random_std", bench.random_std},
                         {"z_score", bench.z_score},
                         {"significant", bench.l_test > bench.random_mean + 2.0 * bench.random_std},
                         {"random_values", bench.random_values}};
  emit_report(report, config_json, opts.pipeline.report);

  std::printf("held-out objective %.6f vs random %.6f +/- %.6f (z = %.2f)\n", bench.l_test,
              bench.random_mean, bench.random_std, bench.z_score);
  std::printf("the region %s the mean + 2 std bar\n",
              bench.l_test > bench.random_mean + 2.0 * bench.random_std ? "clears"
                                                                        : "does not clear");
  return 0;
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

struct BaselineOptions {
  DataOptions data;
  std::string train_path;
  std::string validation_path;
  std::string test_path;
  std::string fractions = "0.6,0.2,0.2";
  LearnerOptions region;
  double beta = 0.25;
  std::string truth_path;
  bool no_normalize = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string report;
};

std::vector<hetreg::LearnerSpec> baseline_region_grid(const std::string& kind) {
  hetreg::ModelKind k = hetreg::model_kind_from_string(kind);
  switch (k) {
    case hetreg::ModelKind::ridge: return hetreg::default_ridge_grid();
    case hetreg::ModelKind::tree: return hetreg::default_tree_grid();
    case hetreg::ModelKind::forest: return hetreg::default_forest_grid();
    case hetreg::ModelKind::logistic: break;
  }
  throw ConfigError("baseline region model must be ridge, tree, or forest");
}

int cmd_baseline(const BaselineOptions& opts) {
  hetreg::Dataset train;
  hetreg::Dataset validation;
  hetreg::Dataset test;
  std::vector<int> test_rows;  // into --data, when split internally
  bool internal_split = opts.train_path.empty();
  if (internal_split) {
    if (opts.data.path.empty()) throw ConfigError("baseline: need --data or --train/--validation/--test");
    hetreg::Dataset d = load_data(opts.data);
    std::vector<double> f = parse_double_list(opts.fractions, "--fractions");
    if (f.size() != 3) throw ConfigError("--fractions needs exactly 3 values");
    hetreg::SplitSpec spec;
    spec.fractions[0] = f[0];
    spec.fractions[1] = f[1];
    spec.fractions[2] = f[2];
    spec.seed = hetreg::derive_seed(opts.seed, {kCliSplitStream});
    hetreg::SplitResult split = hetreg::split_stratified(d, spec);
    train = std::move(split.train);
    validation = std::move(split.validation);
    test = std::move(split.test);
    test_rows = std::move(split.test_rows);
  } else {
    if (opts.validation_path.empty() || opts.test_path.empty()) {
      throw ConfigError("baseline: --train needs --validation and --test");
    }
    train = load_data(opts.data, opts.train_path);
    validation = load_data(opts.data, opts.validation_path);
    test = load_data(opts.data, opts.test_path);
  }

  json norm_json;
  hetreg::NormStats stats;
  if (!opts.no_normalize) {
    stats = hetreg::normalize(train);
    for (const std::string& w : stats.warnings) std::cerr << "warning: " << w << "\n";
    hetreg::apply_normalization(validation, stats);
    hetreg::apply_normalization(test, stats);
    norm_json = norm_to_json(stats, train.feature_names);
  }

  hetreg::DirectBaselineResult result =
      hetreg::direct_baseline(train, validation, test, opts.beta,
                              baseline_region_grid(opts.region.kind), opts.seed, opts.jobs);

  json config_json;
  config_json["data"] = opts.data.path;
  config_json["train"] = opts.train_path;
  config_json["validation"] = opts.validation_path;
  config_json["test"] = opts.test_path;
  config_json["fractions"] = opts.fractions;
  config_json["region_model"] = opts.region.kind;
  config_json["beta"] = opts.beta;
  config_json["truth"] = opts.truth_path;
  config_json["normalize"] = !opts.no_normalize;
  config_json["seed"] = opts.seed;

  long long members = 0;
  for (std::uint8_t m : result.test_region) members += m;

  json report;
  report["command"] = "baseline";
  report["agents"] = train.agent_names;
  report["normalization"] = norm_json;
  report["cutoff"] = result.cutoff;
  report["agent_coefficients"] = result.agent_coefficients;
  report["grouping"] = result.grouping;
  report["test_region_fraction"] =
      static_cast<double>(members) / static_cast<double>(test.n_rows());
  report["test_scores"] = result.test_scores;

  if (!opts.truth_path.empty()) {
    hetreg::SyntheticTruth truth = hetreg::load_truth(opts.truth_path);
    hetreg::Membership truth_bits;
    if (internal_split) {
      truth_bits.reserve(test_rows.size());
      for (int row : test_rows) {
        if (row < 0 || static_cast<std::size_t>(row) >= truth.region.size()) {
          throw DataError("baseline: truth file is shorter than the dataset");
        }
        truth_bits.push_back(truth.region[static_cast<std::size_t>(row)]);
      }
    } else {
      if (truth.region.size() != test.n_rows()) {
        throw DataError("baseline: truth rows do not match the --test file");
      }
      truth_bits = truth.region;
    }
    hetreg::EvaluationReport metrics =
        hetreg::region_metrics(result.test_scores, result.cutoff, truth_bits);
    json m;
    m["region_auc"] = metrics.region_auc;
    m["region_precision"] = metrics.region_precision;
    m["region_recall"] = metrics.region_recall;
    if (truth.n_groups() == 2) {
      hetreg::Grouping truth_grouping = truth_grouping_for(truth, train.agent_names);
      m["partition_accuracy"] = hetreg::partition_accuracy(result.grouping, truth_grouping);
    }
    report["metrics"] = std::move(m);
  }
  emit_report(report, config_json, opts.report);

  std::printf("baseline cutoff %.6f; test region fraction %.4f\n", result.cutoff,
              report["test_region_fraction"].get<double>());
  if (report.contains("metrics")) {
    std::printf("region AUC %.4f\n", report["metrics"]["region_auc"].get<double>());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  DataOptions data;
  std::string truth_path;
  std::string region_path;
  std::string from_report;
  std::string scores_path;
  double cutoff = 0.0;
  bool cutoff_given = false;
  std::string report;
};

std::vector<double> load_scores_csv(const std::string& path, std::size_t expected_rows) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "score") throw DataError("'" + path + "' must have a single 'score' column");
  std::vector<double> scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      scores.push_back(std::stod(line, &used));
      if (used != line.size()) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw DataError("'" + path + "' line " + std::to_string(line_no) + ": bad score '" +
                      line + "'");
    }
  }
  if (scores.size() != expected_rows) {
    throw DataError("'" + path + "' has " + std::to_string(scores.size()) +
                    " scores for " + std::to_string(expected_rows) + " data rows");
  }
  return scores;
}

int cmd_evaluate(const EvaluateOptions& opts) {
  int sources = (!opts.region_path.empty()) + (!opts.from_report.empty()) +
                (!opts.scores_path.empty());
  if (sources != 1) {
    throw ConfigError("evaluate: pass exactly one of --region, --from-report, --scores");
  }

  hetreg::Dataset d = load_data(opts.data);
  hetreg::SyntheticTruth truth = hetreg::load_truth(opts.truth_path);
  if (truth.region.size() != d.n_rows()) {
    throw DataError("evaluate: truth rows do not match the dataset");
  }

  std::vector<double> scores;
  double cutoff = opts.cutoff;
  json grouping_json;  // set when the source carries one
  std::vector<std::string> agents;

  if (!opts.scores_path.empty()) {
    if (!opts.cutoff_given) throw ConfigError("evaluate: --scores needs --cutoff");
    scores = load_scores_csv(opts.scores_path, d.n_rows());
  } else {
    bool from_report = !opts.from_report.empty();
    json source = read_json(from_report ? opts.from_report : opts.region_path);
    json region_json = from_report ? source.at("region") : source;
    hetreg::Region region = region_from_json(region_json);

    json norm = region_json.contains("normalization") ? region_json["normalization"]
                                                      : source.value("normalization", json());
    if (!norm.is_null()) hetreg::apply_normalization(d, norm_from_json(norm));
    scores = hetreg::region_scores(region, d.features);
    cutoff = opts.cutoff_given ? opts.cutoff : region.threshold;
    if (from_report) {
      // a discover report also carries the grouping and the agent order
      if (source.contains("result") && source["result"].contains("grouping")) {
        grouping_json = source["result"]["grouping"];
      }
      if (source.contains("agents")) {
        agents = source["agents"].get<std::vector<std::string>>();
      }
    }
  }

  hetreg::EvaluationReport metrics = hetreg::region_metrics(scores, cutoff, truth.region);

  json config_json;
  config_json["data"] = opts.data.path;
  config_json["truth"] = opts.truth_path;
  config_json["region"] = opts.region_path;
  config_json["from_report"] = opts.from_report;
  config_json["scores"] = opts.scores_path;
  config_json["cutoff"] = opts.cutoff_given ? json(opts.cutoff) : json();

  json report;
  report["command"] = "evaluate";
  report["metrics"] = {{"region_auc", metrics.region_auc},
                       {"region_precision", metrics.region_precision},
                       {"region_recall", metrics.region_recall}};
  if (!grouping_json.is_null() && truth.n_groups() == 2 && !agents.empty()) {
    hetreg::Grouping predicted = grouping_json.get<hetreg::Grouping>();
    if (predicted.size() == agents.size()) {
      hetreg::Grouping truth_grouping = truth_grouping_for(truth, agents);
      report["metrics"]["partition_accuracy"] =
          hetreg::partition_accuracy(predicted, truth_grouping);
    }
  }
  emit_report(report, config_json, opts.report);

  std::printf("region AUC %.4f, precision %.4f, recall %.4f\n", metrics.region_auc,
              metrics.region_precision, metrics.region_recall);
  return 0;
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

struct StabilityOptions {
  PipelineOptions pipeline;
  std::string test_path;
  int folds = 5;
};

int cmd_stability(const StabilityOptions& opts) {
  hetreg::Dataset pool = load_data(opts.pipeline.data);
  hetreg::Dataset test;
  if (!opts.test_path.empty()) {
    test = load_data(opts.pipeline.data, opts.test_path);
    if (test.feature_names != pool.feature_names) {
      throw DataError("stability: --test columns do not match --data");
    }
  }

  json norm_json;
  hetreg::NormStats stats = prepare_features(pool, opts.pipeline.no_normalize, &norm_json);
  if (!opts.pipeline.no_normalize && test.n_rows() > 0) {
    hetreg::apply_normalization(test, stats);
  }

  hetreg::FoldSplit folds = hetreg::make_fold_split(
      pool, opts.folds, hetreg::derive_seed(opts.pipeline.seed, {kFoldSplitStream}));
  hetreg::StabilityReport result =
      hetreg::stability(pool, folds, test, to_discover_config(opts.pipeline),
                        opts.pipeline.seed, opts.pipeline.jobs);

  json config_json = pipeline_config_json(opts.pipeline);
  config_json["test"] = opts.test_path;
  config_json["folds"] = opts.folds;

  json report;
  report["command"] = "stability";
  report["agents"] = pool.agent_names;
  report["normalization"] = norm_json;
  report["stability"] = {{"folds", result.folds},
                         {"heldout_eligible", result.heldout_eligible},
                         {"heldout_agreement", result.heldout_agreement},
                         {"mean_test_region_size", result.mean_test_region_size},
                         {"test_points_in_majority", result.test_points_in_majority},
                         {"weighted_test_overlap", result.weighted_test_overlap},
                         {"eligible_pairs", result.eligible_pairs},
                         {"pairwise_consistency", result.pairwise_consistency},
                         {"pairwise_consistency_shuffled", result.pairwise_consistency_shuffled},
                         {"fold_training_l_hat", result.fold_training_l_hat}};
  emit_report(report, config_json, opts.pipeline.report);

  std::printf("held-out agreement %.4f over %lld eligible points\n", result.heldout_agreement,
              result.heldout_eligible);
  std::printf("pairwise consistency %.4f (shuffled %.4f) over %lld pairs\n",
              result.pairwise_consistency, result.pairwise_consistency_shuffled,
              result.eligible_pairs);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"Find regions of a feature space where decision-makers disagree"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  GenerateOptions gen;
  CLI::App* cmd_gen = app.add_subcommand("generate", "Generate synthetic decision data");
  cmd_gen->add_option("--out-data", gen.out_data, "Output dataset CSV")->required();
  cmd_gen->add_option("--out-truth", gen.out_truth, "Output truth JSON")->required();
  cmd_gen->add_option("--report", gen.report, "Write the JSON report here");
  cmd_gen->add_option("--rows", gen.rows, "Rows to sample")->capture_default_str();
  cmd_gen->add_option("--agents", gen.agents, "Number of agents")->capture_default_str();
  cmd_gen->add_option("--coefficients", gen.coefficients,
                      "Per-group extra logit inside the region, comma separated")
      ->capture_default_str();
  cmd_gen->add_option("--groups", gen.groups,
                      "Use this many equally spaced group coefficients instead")
      ->capture_default_str();
  cmd_gen->add_option("--coef-lo", gen.coef_lo, "Low end for --groups spacing")
      ->capture_default_str();
  cmd_gen->add_option("--coef-hi", gen.coef_hi, "High end for --groups spacing")
      ->capture_default_str();
  cmd_gen->add_option("--rule", gen.rule,
                      "Region rule, e.g. \"charge_misdemeanor == 1 && age <= 35\"");
  cmd_gen->add_option("--agent-weights", gen.agent_weights,
                      "Non-uniform case assignment weights, comma separated");
  cmd_gen->add_option("--seed-data", gen.seed_data,
                      "Reuse this CSV's features; fit the base policy to its decisions");
  cmd_gen->add_option("--agent-column", gen.seed_schema.agent_column,
                      "Agent column in --seed-data")
      ->capture_default_str();
  cmd_gen->add_option("--decision-column", gen.seed_schema.decision_column,
                      "Decision column in --seed-data")
      ->capture_default_str();
  cmd_gen->add_option("--base-weights", gen.base_weights,
                      "Explicit base policy logit weights, comma separated");
  cmd_gen->add_option("--base-intercept", gen.base_intercept, "Base policy intercept")
      ->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "Master random seed")->capture_default_str();

  DiscoverOptions dis;
  CLI::App* cmd_dis = app.add_subcommand("discover", "Find a disagreement region");
  add_pipeline_options(cmd_dis, dis.pipeline);
  cmd_dis->add_option("--save-region", dis.save_region, "Write the region (model + threshold)");
  cmd_dis->add_option("--save-outcome", dis.save_outcome, "Write the outcome model");

  TuneBetaOptions tune;
  CLI::App* cmd_tune = app.add_subcommand("tune-beta", "Pick beta by permutation testing");
  add_pipeline_options(cmd_tune, tune.pipeline, /*with_beta=*/false);
  cmd_tune->add_option("--betas", tune.betas, "Candidate betas, comma separated");
  cmd_tune->add_option("--permutations", tune.permutations, "Null replicates per candidate")
      ->capture_default_str();
  cmd_tune->add_option("--plot", tune.plot, "Write a beta,p_value,... CSV here");

  ValidateOptions val;
  CLI::App* cmd_val = app.add_subcommand("validate", "Benchmark a region on held-out data");
  add_pipeline_options(cmd_val, val.pipeline);
  cmd_val->add_option("--test", val.test_path, "Held-out CSV (default: split --data)");
  cmd_val->add_option("--test-fraction", val.test_fraction,
                      "Held-out fraction when splitting internally")
      ->capture_default_str();
  cmd_val->add_option("--n-random", val.n_random, "Random regions to compare against")
      ->capture_default_str();

  BaselineOptions base;
  base.region.kind = "tree";
  CLI::App* cmd_base = app.add_subcommand("baseline", "Direct predictive baseline");
  add_data_options(cmd_base, base.data, /*required=*/false);
  cmd_base->add_option("--train", base.train_path, "Training CSV (with --validation/--test)");
  cmd_base->add_option("--validation", base.validation_path, "Validation CSV");
  cmd_base->add_option("--test", base.test_path, "Test CSV");
  cmd_base->add_option("--fractions", base.fractions,
                       "train,validation,test fractions for the internal split")
      ->capture_default_str();
  cmd_base->add_option("--region-model", base.region.kind, "ridge|tree|forest")
      ->capture_default_str();
  cmd_base->add_option("--beta", base.beta, "Region fraction cutoff")->capture_default_str();
  cmd_base->add_option("--truth", base.truth_path, "Score against this truth JSON");
  cmd_base->add_flag("--no-normalize", base.no_normalize, "Skip feature standardization");
  cmd_base->add_option("--seed", base.seed, "Master random seed")->capture_default_str();
  cmd_base->add_option("--jobs", base.jobs, "Worker threads (never changes results)")
      ->capture_default_str();
  cmd_base->add_option("--report", base.report, "Write the JSON report here");

  EvaluateOptions eval;
  CLI::App* cmd_eval = app.add_subcommand("evaluate", "Score a region against a truth file");
  add_data_options(cmd_eval, eval.data);
  cmd_eval->add_option("--truth", eval.truth_path, "Truth JSON")->required();
  cmd_eval->add_option("--region", eval.region_path, "Region JSON from discover --save-region");
  cmd_eval->add_option("--from-report", eval.from_report, "Discover report JSON");
  cmd_eval->add_option("--scores", eval.scores_path, "External per-row score CSV");
  CLI::Option* cutoff_opt =
      cmd_eval->add_option("--cutoff", eval.cutoff, "Score cutoff (default: region threshold)");
  cmd_eval->add_option("--report", eval.report, "Write the JSON report here");

  StabilityOptions stab;
  CLI::App* cmd_stab = app.add_subcommand("stability", "Refit stability across folds");
  add_pipeline_options(cmd_stab, stab.pipeline);
  cmd_stab->add_option("--test", stab.test_path, "Optional held-out CSV for overlap stats");
  cmd_stab->add_option("--folds", stab.folds, "Number of folds")->capture_default_str();

  try {
    app.parse(argc, argv);
    eval.cutoff_given = cutoff_opt->count() > 0;
    if (cmd_gen->parsed()) return cmd_generate(gen);
    if (cmd_dis->parsed()) return cmd_discover(dis);
    if (cmd_tune->parsed()) return cmd_tune_beta(tune);
    if (cmd_val->parsed()) return cmd_validate(val);
    if (cmd_base->parsed()) return cmd_baseline(base);
    if (cmd_eval->parsed()) return cmd_evaluate(eval);
    if (cmd_stab->parsed()) return cmd_stability(stab);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ComputeError& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
