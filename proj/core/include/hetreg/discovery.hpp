#pragma once

// Region discovery: alternate between (a) the optimal grouping for the
// current region and (b) refitting a region model h on the per-row targets
// r * G(agent), keeping the top-beta fraction of rows by h score.
//
// One pass:
//   1. fit the outcome model f once and form residuals r = y - f(x)
//   2. start from S = all rows
//   3. repeat: G <- optimal grouping for S; fit h to predict r * G(agent)
//      from the (non-excluded) features; b <- the score threshold keeping a
//      beta fraction; S <- { rows with h(x) >= b }
//   4. stop when S repeats the previous iteration (converged), revisits any
//      earlier iteration (cycle: return the iteration with the highest
//      training objective; earliest on ties), or hits the iteration cap.
//
// The region model's seed is held constant across iterations, so each
// iteration's membership is a pure function of the previous one; the loop
// therefore cannot wander forever without the cycle detector noticing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/learners.hpp"
#include "hetreg/objective.hpp"

namespace hetreg {

struct DiscoverConfig {
  LearnerSpec outcome;                 // probability model for E[Y|X]
  LearnerSpec region;                  // regression model scoring rows
  double beta = 0.25;                  // target region fraction, in (0, 1]
  int max_iter = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> excluded_features;  // never seen by the region model
  // Optional: fit f, the grouping, and h on three disjoint row thirds.
  bool three_way_split = false;
  int jobs = 1;
  // Reuse of an already-fit outcome model (it only sees features and
  // decisions, so e.g. agent-permuted reruns of the same rows can share it).
  const Model* prefit_outcome = nullptr;
};

struct Region {
  Model model;                      // scores rows; membership is score >= threshold
  double threshold = 0.0;
  std::vector<int> feature_indices;        // columns of the source dataset used
  std::vector<std::string> feature_names;  // aligned with feature_indices
};

struct IterationRecord {
  Grouping grouping;        // grouping used to build this iteration's targets
  Membership membership;    // region after refitting h
  long long member_count = 0;
  double q_hat = 0.0;       // objective of (membership, grouping)
  double l_hat = 0.0;       // objective of membership at its optimal grouping
};

enum class Termination { converged, iteration_limit, cycle_detected };

std::string to_string(Termination t);

struct DiscoveryResult {
  Model outcome_model;
  Region region;
  Membership membership;    // rows of the training data inside the final region
  Grouping grouping;        // optimal grouping of the final region
  std::vector<std::uint8_t> grouping_absent;  // agents with no rows in it
  double training_l_hat = 0.0;
  std::vector<IterationRecord> history;  // one record per executed iteration
  Termination termination = Termination::converged;
  int returned_iteration = 0;  // 1-based index into history of the result
};

DiscoveryResult discover(const Dataset& d, const DiscoverConfig& config);

// Membership of arbitrary rows (e.g. test data) in a learned region.  X must
// have the full original column layout; the region extracts its own columns.
Membership region_membership(const Region& region, const Matrix& X);
std::vector<double> region_scores(const Region& region, const Matrix& X);

// Human-readable description.  Trees render as indented threshold rules for
// every leaf at or above the threshold; linear models list their weights;
// forests summarize their shape.  When `stats` is given, thresholds are
// translated back to original feature units.
std::string describe_region(const Region& region, double member_fraction,
                            const NormStats* stats);

// The score cutting off the top `beta` fraction: the order statistic at
// 1-based index ceil((1-beta)*n) of the ascending sorted scores (clamped to
// the ends; ties at the cutoff are all kept by >= comparisons).
double score_threshold(std::vector<double> scores, double beta);

// Bookkeeping for convergence/cycle detection over membership bitmaps.
// record() returns the 0-based index of an identical earlier membership, or
// -1 if this one is new.  Bitmaps are packed and pre-hashed; equality is
// confirmed bit-for-bit, so hash collisions cannot fake a cycle.
class MembershipLog {
 public:
  int record(const Membership& s);

 private:
  struct Entry {
    std::uint64_t hash;
    std::vector<std::uint64_t> bits;
  };
  std::vector<Entry> entries_;
};

}  // namespace hetreg
