#include "hetreg/objective.hpp"

#include <string>

#include "hetreg/errors.hpp"

namespace hetreg {

Residuals residuals_from_scores(const std::vector<double>& scores, const Dataset& d) {
  if (scores.size() != d.n_rows()) {
    throw ConfigError("residuals: score count does not match the dataset");
  }
  Residuals r;
  r.values.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw ComputeError("residuals: outcome score " + std::to_string(scores[i]) +
                         " at row " + std::to_string(i) +
                         " is outside [0,1]; scores are never clipped");
    }
    r.values[i] = static_cast<double>(d.decisions[i]) - scores[i];
  }
  r.agent_index = d.agent_index;
  r.n_agents = d.n_agents();
  return r;
}

Residuals residuals(const Model& outcome_model, const Dataset& d) {
  return residuals_from_scores(outcome_model.predict(d.features), d);
}

RegionSums region_sums(const Residuals& r, const Membership& s) {
  if (s.size() != r.values.size()) {
    throw ConfigError("region mask length does not match the residuals");
  }
  RegionSums sums;
  sums.residual_sum.assign(static_cast<std::size_t>(r.n_agents), 0.0);
  sums.row_count.assign(static_cast<std::size_t>(r.n_agents), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i]) continue;
    std::size_t a = static_cast<std::size_t>(r.agent_index[i]);
    sums.residual_sum[a] += r.values[i];
    sums.row_count[a] += 1;
    sums.rows_in_region += 1;
  }
  return sums;
}

double q_hat(const Residuals& r, const Membership& s, const Grouping& g) {
  if (g.size() != static_cast<std::size_t>(r.n_agents)) {
    throw ConfigError("grouping length does not match the agent count");
  }
  RegionSums sums = region_sums(r, s);
  if (sums.rows_in_region == 0) throw ComputeError("q_hat: the region is empty");
  double total = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (g[a]) total += sums.residual_sum[a];
  }
  return total / static_cast<double>(sums.rows_in_region);
}

AgentBias per_agent_bias(const Residuals& r, const Membership& s) {
  RegionSums sums = region_sums(r, s);
  if (sums.rows_in_region == 0) throw ComputeError("per_agent_bias: the region is empty");
  AgentBias out;
  out.bias.resize(sums.residual_sum.size());
  out.absent.resize(sums.residual_sum.size());
  for (std::size_t a = 0; a < sums.residual_sum.size(); ++a) {
    out.bias[a] = sums.residual_sum[a] / static_cast<double>(sums.rows_in_region);
    out.absent[a] = sums.row_count[a] == 0 ? 1 : 0;
  }
  return out;
}

OptimalGrouping optimal_grouping(const Residuals& r, const Membership& s) {
  RegionSums sums = region_sums(r, s);
  if (sums.rows_in_region == 0) throw ComputeError("optimal_grouping: the region is empty");
  OptimalGrouping out;
  out.group.resize(sums.residual_sum.size());
  out.absent.resize(sums.residual_sum.size());
  for (std::size_t a = 0; a < sums.residual_sum.size(); ++a) {
    out.group[a] = sums.residual_sum[a] >= 0.0 ? 1 : 0;  // ties go to group 1
    out.absent[a] = sums.row_count[a] == 0 ? 1 : 0;
  }
  return out;
}

double l_hat(const Residuals& r, const Membership& s) {
  RegionSums sums = region_sums(r, s);
  if (sums.rows_in_region == 0) throw ComputeError("l_hat: the region is empty");
  double total = 0.0;
  for (double sum : sums.residual_sum) {
    if (sum > 0.0) total += sum;
  }
  return total / static_cast<double>(sums.rows_in_region);
}

}  // namespace hetreg
