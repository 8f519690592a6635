#pragma once

#include <vector>

#include "regsyn/system.hpp"

namespace regsyn {

// Dense stacked-horizon operators. With x = [x_0; ...; x_T],
// u = [u_0; ...; u_T] and delta = [x_0; w_0; ...; w_{T-1}], trajectories
// satisfy x = input_map * u + disturbance_map * delta.
struct StackedOperators {
  Mat input_map;        // n(T+1) x m(T+1), strictly block lower triangular
  Mat disturbance_map;  // n(T+1) x (n+pT), block lower triangular
  Mat block_a;          // blkdiag(A_0..A_T)
  Mat block_b;          // blkdiag(B_0..B_T)
  Mat block_e;          // blkdiag(I_n, E_0..E_{T-1}), n(T+1) x (n+pT)
  Mat downshift;        // block subdiagonal identity, n(T+1) square
  int n = 0, m = 0, p = 0, T = 0;

  int state_stack_dim() const { return n * (T + 1); }
  int input_stack_dim() const { return m * (T + 1); }
  int delta_dim() const { return n + p * T; }
};

StackedOperators build_stacked(const LTVSystem& sys);

// Quadratic form of the clairvoyant benchmark: the minimal cost over
// unconstrained input sequences with full disturbance preview is
// delta' * matrix() * delta.
class BenchmarkOperator {
 public:
  BenchmarkOperator(Mat matrix, int n, int p, int T, double tol_psd = 1e-8);

  const Mat& matrix() const { return matrix_; }
  Mat head() const { return matrix_.topLeftCorner(n_, n_); }        // x0/x0
  Mat cross() const { return matrix_.bottomLeftCorner(pT_, n_); }   // w/x0
  Mat tail() const { return matrix_.bottomRightCorner(pT_, pT_); }  // w/w

  int state_dim() const { return n_; }
  int tail_dim() const { return pT_; }
  int dim() const { return n_ + pT_; }

 private:
  Mat matrix_;
  int n_ = 0, pT_ = 0;
};

BenchmarkOperator noncausal_cost_operator(const LTVSystem& sys,
                                          const CostSpec& cost);

// Minimising input sequence of the clairvoyant benchmark for a complete
// realisation delta = [x0; w]; stacked m(T+1) vector.
Vec noncausal_control(const LTVSystem& sys, const CostSpec& cost,
                      const Vec& delta);

// J = sum_k x_k'Q_k x_k + u_k'R_k u_k, accumulated along a step-by-step
// rollout of the dynamics. u has T+1 entries, w has T.
double evaluate_cost(const LTVSystem& sys, const CostSpec& cost, const Vec& x0,
                     const std::vector<Vec>& u, const std::vector<Vec>& w);

}  // namespace regsyn
