#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regsyn/sim.hpp"
#include "regsyn/synthesis.hpp"

namespace regsyn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk problem description. Stage matrices may be given once
// (time-invariant) or per stage; they are expanded at load time so the
// in-memory instance is always explicit.
struct InstanceConfig {
  std::string name;
  int horizon = 0;
  int n = 0, m = 0, p = 0;

  std::vector<Mat> A, B, E;  // A,B: T+1 entries; E: T
  std::vector<Mat> Q, R;     // T+1 entries each
  Vec x0;

  Mat disturbance_shape;           // P, p x p PD
  std::optional<double> energy;    // omega; defaults to T / min eig(P)

  RegretWeight::Kind weight_kind = RegretWeight::Kind::identity;
  std::optional<Mat> custom_weight;

  std::optional<ConstraintSpec> constraints;

  conic::SolveSettings solver;

  int benchmark_realisations = 100;
  unsigned benchmark_seed = 1;

  double omega_or_default() const;

  LTVSystem make_system() const;
  CostSpec make_cost() const;
  RegretWeight make_weight(const BenchmarkOperator& o) const;
};

InstanceConfig load_config(const std::string& path);
void save_config(const InstanceConfig& config, const std::string& path);

bool config_equal(const InstanceConfig& a, const InstanceConfig& b);

// Serialized synthesis outcome.
struct SynthesisRecord {
  std::string variant;
  std::string status;
  double level = 0.0;
  std::vector<double> multipliers;
  Mat gain;   // dense controller, m(T+1) x n(T+1)
  Mat phi_x;  // dense response maps
  Mat phi_u;
  int n = 0, m = 0, p = 0, horizon = 0;
  double achievability = 0.0;
  double solver_gap = 0.0;
  int solver_iterations = 0;
  bool constrained = false;
};

void save_result(const SynthesisRecord& record, const std::string& path);
SynthesisRecord load_result(const std::string& path);

}  // namespace regsyn
