#include "hetreg/beta_tuning.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "hetreg/errors.hpp"
#include "hetreg/parallel.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

constexpr std::uint64_t kPermuteStream = 0x7065726d757465ULL;  // "permute"

// Structural fingerprint of everything that shapes a discovery run, used to
// assert that observed and null runs really share one configuration.
std::uint64_t config_fingerprint(const DiscoverConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_double = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix64(h ^ bits);
  };
  auto mix_int = [&](std::uint64_t v) { h = mix64(h ^ v); };
  auto mix_spec = [&](const LearnerSpec& s) {
    mix_int(static_cast<std::uint64_t>(s.kind));
    mix_double(s.logistic_c);
    mix_double(s.ridge_alpha);
    mix_int(static_cast<std::uint64_t>(s.min_samples_leaf));
    mix_int(static_cast<std::uint64_t>(s.max_depth));
    mix_int(static_cast<std::uint64_t>(s.n_trees));
  };
  mix_spec(c.outcome);
  mix_spec(c.region);
  mix_double(c.beta);
  mix_int(static_cast<std::uint64_t>(c.max_iter));
  mix_int(c.seed);
  mix_int(c.three_way_split ? 1 : 0);
  for (const std::string& name : c.excluded_features) {
    for (char ch : name) mix_int(static_cast<std::uint64_t>(ch));
    mix_int(0x1f);
  }
  return h;
}

}  // namespace

Dataset permute_agents(const Dataset& d, std::uint64_t seed) {
  Dataset out = d;
  Rng rng(derive_seed(seed, {kPermuteStream}));
  rng.shuffle(out.agent_index);
  return out;
}

double permutation_p_value(double q_obs, const std::vector<double>& null_values) {
  if (null_values.empty()) throw ConfigError("p-value needs at least one null value");
  long long at_least = 0;
  for (double q : null_values) {
    if (q >= q_obs) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(null_values.size() + 1);
}

std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 11; ++i) grid.push_back(0.02 + 0.04 * i);
  return grid;
}

BetaScan tune_beta(const Dataset& d, const DiscoverConfig& base, const BetaScanConfig& scan) {
  if (scan.candidates.empty()) throw ConfigError("tune_beta: no beta candidates");
  if (scan.permutations < 1) throw ConfigError("tune_beta: permutations must be >= 1");
  for (double beta : scan.candidates) {
    if (!(beta > 0.0 && beta <= 1.0)) {
      throw ConfigError("tune_beta: candidate beta outside (0, 1]");
    }
  }

  // The outcome model sees only features and decisions, which every
  // agent-permuted copy shares, so one fit serves observed and null runs
  // alike.  (With a three-way row split the outcome fit depends on row
  // parts, which are seeded per run; keep per-run fits in that case.)
  Model shared_outcome;
  bool share_outcome = !base.three_way_split && base.prefit_outcome == nullptr;
  if (share_outcome) {
    shared_outcome =
        fit_classifier(base.outcome, d.features, d.decisions, base.seed, scan.jobs);
  }

  std::size_t n_candidates = scan.candidates.size();
  std::size_t runs_per_candidate = static_cast<std::size_t>(scan.permutations) + 1;
  std::vector<double> q(n_candidates * runs_per_candidate, 0.0);

  parallel_for(q.size(), scan.jobs, [&](std::size_t task) {
    std::size_t ci = task / runs_per_candidate;
    std::size_t t = task % runs_per_candidate;  // 0 = observed, 1..T = null

    DiscoverConfig config = base;
    config.beta = scan.candidates[ci];
    config.jobs = 1;  // concurrency lives at the task level
    if (share_outcome) config.prefit_outcome = &shared_outcome;

    DiscoveryResult result;
    if (t == 0) {
      result = discover(d, config);
    } else {
      Dataset null_copy = permute_agents(
          d, derive_seed(scan.seed, {static_cast<std::uint64_t>(ci),
                                     static_cast<std::uint64_t>(t)}));
      // Same configuration for observed and null runs, by construction;
      // keep the guarantee checked.
      DiscoverConfig null_config = base;
      null_config.beta = scan.candidates[ci];
      null_config.jobs = 1;
      if (share_outcome) null_config.prefit_outcome = &shared_outcome;
      if (config_fingerprint(null_config) != config_fingerprint(config)) {
        throw ComputeError("tune_beta: observed and null configurations diverged");
      }
      result = discover(null_copy, null_config);
    }
    q[task] = result.training_l_hat;
  });

  BetaScan out;
  out.candidates.resize(n_candidates);
  for (std::size_t ci = 0; ci < n_candidates; ++ci) {
    BetaCandidateResult& c = out.candidates[ci];
    c.beta = scan.candidates[ci];
    c.q_obs = q[ci * runs_per_candidate];
    c.null_values.assign(q.begin() + static_cast<std::ptrdiff_t>(ci * runs_per_candidate + 1),
                         q.begin() + static_cast<std::ptrdiff_t>((ci + 1) * runs_per_candidate));
    c.p_value = permutation_p_value(c.q_obs, c.null_values);
  }

  out.selected_index = 0;
  for (std::size_t ci = 1; ci < n_candidates; ++ci) {
    const BetaCandidateResult& cur = out.candidates[ci];
    const BetaCandidateResult& best = out.candidates[out.selected_index];
    if (cur.p_value < best.p_value ||
        (cur.p_value == best.p_value && cur.beta < best.beta)) {
      out.selected_index = ci;
    }
  }
  out.selected_beta = out.candidates[out.selected_index].beta;
  return out;
}

}  // namespace hetreg
