#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "regsyn/synthesis.hpp"

namespace regsyn {

enum class FamilyKind {
  truncated_gaussian,
  uniform_ellipsoid,
  constant,
  sinusoidal,
  sawtooth,
  step,
  stair,
};

const char* family_name(FamilyKind kind);
const std::vector<FamilyKind>& all_families();

struct DisturbanceFamily {
  FamilyKind kind = FamilyKind::constant;
  // Deterministic families follow a scalar shape along a fixed direction,
  // normalised so the peak touches the ellipsoid boundary. An empty
  // direction selects the longest ellipsoid axis.
  Vec direction;
  double period = 8.0;    // sinusoidal, sawtooth
  int step_time = -1;     // step; negative means T/2
  int stair_width = -1;   // stair; negative means max(1, T/5)
  int stair_levels = 4;   // stair
};

// Realisation `index` of the family on horizon T inside {w : w'Pw <= 1}.
// Deterministic families ignore the index; random families draw from a
// stream keyed by (seed, kind, index) only.
std::vector<Vec> generate(const DisturbanceFamily& family, const Mat& p_shape,
                          int T, unsigned seed, int index);

struct RunRecord {
  std::vector<Vec> x;  // T+1
  std::vector<Vec> u;  // T+1
  std::vector<Vec> w;  // T
  double cost = 0.0;
  double benchmark_cost = 0.0;
  double regret = 0.0;
  // cost / benchmark_cost; NaN when the benchmark cost is below 1e-12
  double competitive_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Largest constraint row value over the whole trajectory; feasible runs stay
// at or below 1. Returns 0 for an empty specification.
double max_constraint_value(const ConstraintSpec& spec, const RunRecord& run);

// Closed-loop rollout of the feedback against a disturbance realisation;
// the cost accumulates stage by stage.
RunRecord rollout(const LTVSystem& sys, const CostSpec& cost,
                  const Controller& k, const Vec& x0,
                  const std::vector<Vec>& w);

// Rollout plus clairvoyant comparison: benchmark_cost = delta'O delta and
// regret = cost - benchmark_cost.
RunRecord evaluate_run(const LTVSystem& sys, const CostSpec& cost,
                       const BenchmarkOperator& o, const Controller& k,
                       const Vec& x0, const std::vector<Vec>& w);

struct BenchmarkTable {
  std::vector<std::string> controllers;  // column labels
  std::vector<std::string> families;     // row labels
  Mat mean_cost;                         // families x controllers, raw means
  Mat normalised;                        // each row divided by its minimum

  std::string to_csv() const;  // normalised values, fixed 6-decimal format
};

// Mean closed-loop cost of every controller under every family
// (realisations per cell, same seeds across controllers), normalised per row
// so the best controller scores exactly 1.
BenchmarkTable benchmark_table(
    const LTVSystem& sys, const CostSpec& cost, const BenchmarkOperator& o,
    const std::vector<std::pair<std::string, Controller>>& controllers,
    const std::vector<DisturbanceFamily>& families, const Mat& p_shape,
    const Vec& x0, int realisations, unsigned seed);

}  // namespace regsyn
