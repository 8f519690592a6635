#pragma once

#include <vector>

#include "regsyn/synthesis.hpp"

namespace regsyn {

// Excess cost of a response over the clairvoyant benchmark as a quadratic
// form on delta: stacked'C*stacked - benchmark. PSD for any achievable
// response.
Mat excess_cost_operator(const SystemResponse& phi, const CostSpec& cost,
                         const BenchmarkOperator& o);

// (delta' M delta) / (delta' W delta) for delta = [x0; w].
double regret_ratio(const Mat& excess, const Mat& weight, const Vec& x0,
                    const Vec& w);

// Level attained by a response with zero initial state: the top eigenvalue of
// W3^{-1/2} (Phi_w' C Phi_w - O3) W3^{-1/2}. Matches the zero-init synthesis
// optimum at the returned response.
double tight_level_zero_init(const SystemResponse& phi, const CostSpec& cost,
                             const BenchmarkOperator& o,
                             const RegretWeight& w);

// Unit-weight disturbance direction achieving that level (top eigenvector
// mapped back through W3^{-1/2}).
Vec worst_case_disturbance_zero_init(const SystemResponse& phi,
                                     const CostSpec& cost,
                                     const BenchmarkOperator& o,
                                     const RegretWeight& w);

// 2 / (pi * cond(W_w)) over the disturbance block of the weight: no synthesis
// can improve the pointwise level by more than this factor relative to its
// own upper bound.
double suboptimality_floor(const RegretWeight& w);

// Exact maximum of w'Aw + 2b'w + c over the ellipsoid w'Pw <= 1
// (eigendecomposition plus secular equation; handles the interior and
// degenerate cases). Optionally returns a maximiser.
double max_quadratic_over_ellipsoid(const Mat& a, const Vec& b, double c,
                                    const Mat& p_shape, Vec* argmax = nullptr);

// Level of a response over disturbances confined stage-wise to
// conv(vertices): bisection on the level, inner maximisation over all
// vertex tuples (exact when the excess-minus-level form is convex over the
// polytope). Vertex tuple count is capped at 1e5.
double polytopic_exact_level(const SystemResponse& phi, const CostSpec& cost,
                             const BenchmarkOperator& o, const RegretWeight& w,
                             const Vec& x0, const std::vector<Vec>& vertices,
                             double tol = 1e-6);

// Exact level for a single-stage horizon (T == 1), where the one-constraint
// maximisation is tight: bisection with the exact ellipsoid maximiser inside.
double exact_level_single_step(const SystemResponse& phi, const CostSpec& cost,
                               const BenchmarkOperator& o,
                               const RegretWeight& w, const Vec& x0,
                               const Mat& p_shape, double tol = 1e-9);

struct AscentResult {
  double level = 0.0;
  Vec w;  // stacked pT disturbance attaining it
};

// Best regret ratio found by projected gradient ascent over w in the
// pointwise ellipsoid set (per-stage projection), multi-restart,
// deterministic in the seed. A valid lower bound on the true pointwise level.
AscentResult local_level_lower_bound(const SystemResponse& phi,
                                     const CostSpec& cost,
                                     const BenchmarkOperator& o,
                                     const RegretWeight& w, const Vec& x0,
                                     const Mat& p_shape, int restarts = 50,
                                     unsigned seed = 0);

struct ChainReport {
  double level_energy = 0.0;     // omega = T / min eig(P)
  double level_pointwise = 0.0;  // per-stage ellipsoids
  double floor_factor = 0.0;     // 2 / (pi * cond(W))
  double local_estimate = 0.0;   // ascent lower bound on the exact level
  double eps_soft = 0.0;  // max(0, floor_factor*level_pointwise - estimate)
  bool chain_ok = false;  // floor*pwb <= pwb <= energy and estimate <= pwb
  conic::Status energy_status = conic::Status::numerical_failure;
  conic::Status pointwise_status = conic::Status::numerical_failure;
};

// Solves both syntheses, checks the ordering chain at tolerance tol, and
// reports the best-effort local estimate of the exact pointwise level.
ChainReport check_inequality_chain(const LTVSystem& sys, const CostSpec& cost,
                                   const BenchmarkOperator& o,
                                   const RegretWeight& w, const Vec& x0,
                                   const Mat& p_shape,
                                   const SynthOptions& opts = {},
                                   double tol = 1e-6);

}  // namespace regsyn
