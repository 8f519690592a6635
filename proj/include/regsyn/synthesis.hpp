#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "regsyn/conic.hpp"
#include "regsyn/response.hpp"

namespace regsyn {

// PD weight on delta = [x0; w] that scales the excess cost over the
// clairvoyant benchmark. Partitioned like the benchmark operator.
class RegretWeight {
 public:
  enum class Kind { identity, benchmark, custom };

  static RegretWeight identity(int n, int p, int T);
  // Weight equal to the benchmark quadratic form. A singular benchmark is
  // regularised by epsilon*I with epsilon = 1e-8 * trace/dim, recorded in
  // regularisation().
  static RegretWeight benchmark(const BenchmarkOperator& o,
                                double tol_pd = 1e-12);
  static RegretWeight custom(Mat w, int n, int p, int T,
                             double tol_pd = 1e-12);

  Kind kind() const { return kind_; }
  const Mat& matrix() const { return matrix_; }
  Mat head() const { return matrix_.topLeftCorner(n_, n_); }
  Mat cross() const { return matrix_.bottomLeftCorner(pT_, n_); }
  Mat tail() const { return matrix_.bottomRightCorner(pT_, pT_); }

  int state_dim() const { return n_; }
  int tail_dim() const { return pT_; }
  int dim() const { return n_ + pT_; }

  double regularisation() const { return regularisation_; }

 private:
  RegretWeight(Mat m, int n, int pT, Kind kind, double reg);

  Mat matrix_;
  int n_ = 0, pT_ = 0;
  Kind kind_ = Kind::identity;
  double regularisation_ = 0.0;
};

// Polytopic trajectory constraints, one row per half-space, unit right-hand
// side: state_rows * x_k <= 1 and input_rows * u_k <= 1 at every stage.
struct ConstraintSpec {
  Mat state_rows;  // q_x x n, may have zero rows
  Mat input_rows;  // q_u x m, may have zero rows
};

struct SynthOptions {
  std::optional<ConstraintSpec> constraints;
  // Per-step ellipsoid {w : w'Pw <= 1} used to tighten the constraint rows;
  // required with constraints unless the disturbance model already carries
  // one (pointwise synthesis).
  std::optional<Mat> constraint_shape;
  // Initial state entering the tightened rows for models without one
  // (H2 / Hinf); defaults to zero.
  std::optional<Vec> constraint_x0;
  conic::SolveSettings solver;
};

struct SynthesisResult {
  conic::Status status = conic::Status::numerical_failure;
  // Optimal objective: the regret level for the regret programs, the squared
  // worst-case gain for synth_hinf, the squared Frobenius cost for synth_h2.
  double level = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> multipliers;  // energy ball: one; pointwise: T
  std::optional<SystemResponse> response;
  std::optional<Controller> controller;
  double achievability = std::numeric_limits<double>::quiet_NaN();
  conic::SolveReport report;
  bool weight_regularised = false;
  std::string note;

  bool ok() const {
    return status == conic::Status::optimal ||
           status == conic::Status::near_optimal;
  }
};

// Excess cost bounded on the energy ball ||w||^2 <= omega with fixed x0:
// minimises the level mu with a nonnegative multiplier on the ball
// constraint. With ||x0|| = 0 the multiplier is forced to zero and the
// reduced zero-initial-state program is solved instead.
SynthesisResult synth_energy_ball(const LTVSystem& sys, const CostSpec& cost,
                                  const BenchmarkOperator& o,
                                  const RegretWeight& w, const Vec& x0,
                                  double omega,
                                  const SynthOptions& opts = {});

// Zero initial state, unit-energy-normalised disturbances: the level is the
// top eigenvalue of the weighted excess-cost form, minimised exactly.
SynthesisResult synth_zero_init(const LTVSystem& sys, const CostSpec& cost,
                                const BenchmarkOperator& o,
                                const RegretWeight& w,
                                const SynthOptions& opts = {});

// Adversarial initial state: x0 joins the disturbance, the bound holds on
// the whole delta vector.
SynthesisResult synth_adversarial_init(const LTVSystem& sys,
                                       const CostSpec& cost,
                                       const BenchmarkOperator& o,
                                       const RegretWeight& w,
                                       const SynthOptions& opts = {});

// Pointwise-in-time ellipsoidal disturbances w_k'Pw_k <= 1 with fixed x0:
// one multiplier per stage.
SynthesisResult synth_pointwise(const LTVSystem& sys, const CostSpec& cost,
                                const BenchmarkOperator& o,
                                const RegretWeight& w, const Vec& x0,
                                const Mat& p_shape,
                                const SynthOptions& opts = {});

// Baselines. synth_h2 minimises the squared Frobenius norm of the weighted
// response; synth_hinf the squared worst-case gain from disturbance energy
// to cost (level = gamma^2).
SynthesisResult synth_h2(const LTVSystem& sys, const CostSpec& cost,
                         const SynthOptions& opts = {});
SynthesisResult synth_hinf(const LTVSystem& sys, const CostSpec& cost,
                           const SynthOptions& opts = {});

struct NoncausalBenchmarkResult {
  conic::Status status = conic::Status::numerical_failure;
  std::optional<BenchmarkOperator> benchmark;
  std::optional<SystemResponse> response;  // full block, not causal
  double objective = std::numeric_limits<double>::quiet_NaN();
  conic::SolveReport report;
};

// Minimal-cost non-causal response subject to the tightened trajectory
// constraints; its quadratic form replaces the unconstrained benchmark when
// comparing against constrained controllers.
NoncausalBenchmarkResult constrained_noncausal_benchmark(
    const LTVSystem& sys, const CostSpec& cost, const ConstraintSpec& spec,
    const Mat& p_shape, const Vec& x0,
    const conic::SolveSettings& settings = {});

}  // namespace regsyn
