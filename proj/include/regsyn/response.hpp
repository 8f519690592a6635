#pragma once

#include <stdexcept>
#include <vector>

#include "regsyn/operators.hpp"

namespace regsyn {

// Linear maps from delta = [x_0; w_0; ...; w_{T-1}] to the state and input
// trajectories. A causal response stores only the block rows up to the
// diagonal: row k covers delta columns [0, n + p*k), everything to the right
// is structurally zero. Dense views are materialised on demand.
class SystemResponse {
 public:
  SystemResponse(int n, int m, int p, int T, bool causal);

  // Validates the structural zeros of a causal response (any entry above
  // struct_tol in magnitude throws) or keeps the full matrices when
  // causal == false.
  static SystemResponse from_dense(const Mat& phi_x, const Mat& phi_u, int n,
                                   int m, int p, int T, bool causal,
                                   double struct_tol = 0.0);

  bool is_causal() const { return causal_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int disturbance_dim() const { return p_; }
  int horizon() const { return T_; }
  int delta_dim() const { return n_ + p_ * T_; }

  // Width of stored block row k: n + p*k when causal, n + p*T otherwise.
  int row_width(int k) const;

  Mat& state_row(int k) { return state_rows_.at(k); }  // n x row_width(k)
  const Mat& state_row(int k) const { return state_rows_.at(k); }
  Mat& input_row(int k) { return input_rows_.at(k); }  // m x row_width(k)
  const Mat& input_row(int k) const { return input_rows_.at(k); }

  Mat state_map() const;  // dense, n(T+1) x (n+pT)
  Mat input_map() const;  // dense, m(T+1) x (n+pT)
  Mat stacked() const;    // [state_map; input_map]

  Mat initial_columns() const;      // first n columns of stacked()
  Mat disturbance_columns() const;  // trailing pT columns of stacked()

  // Trajectories reached from a complete realisation.
  Vec states(const Vec& delta) const;
  Vec inputs(const Vec& delta) const;

 private:
  std::vector<Mat> state_rows_, input_rows_;
  int n_ = 0, m_ = 0, p_ = 0, T_ = 0;
  bool causal_ = true;
};

// Frobenius norm of [I - Z*blkdiag(A), -Z*blkdiag(B)] * stacked - block_e,
// the defect of the response against the system dynamics.
double achievability_residual(const SystemResponse& phi,
                              const StackedOperators& ops);

// Time-varying feedback u_k = sum_{j<=k} gain(k, j) x_j.
class Controller {
 public:
  Controller(int n, int m, int T);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int horizon() const { return T_; }

  Mat& gain(int k, int j);
  const Mat& gain(int k, int j) const;

  Mat dense() const;  // m(T+1) x n(T+1), block lower triangular

 private:
  std::vector<std::vector<Mat>> gains_;  // gains_[k][j], j <= k
  int n_ = 0, m_ = 0, T_ = 0;
};

struct SingularResponseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Extracts the feedback realising an achievable causal response: block row k
// of input_map = K * state_map is solved against the leading k+1 block rows
// of the state map. Exact (up to roundoff) whenever the response is
// achievable; throws SingularResponseError if those rows lose row rank,
// which cannot happen for an achievable causal response.
Controller recover_controller(const SystemResponse& phi);

// Response realised by a feedback: forward recursion
//   state row k = A_{k-1} * state row k-1 + B_{k-1} * input row k-1 + E-block,
//   input row k = sum_{j<=k} gain(k,j) * state row j.
SystemResponse closed_loop_response(const LTVSystem& sys, const Controller& K);

}  // namespace regsyn
