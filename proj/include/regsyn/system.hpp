#pragma once

#include <vector>

#include "regsyn/types.hpp"

namespace regsyn {

// Finite-horizon linear time-varying system
//
//   x_{k+1} = A_k x_k + B_k u_k + E_k w_k,   k = 0 .. T-1,
//
// with one trailing (A_T, B_T) pair so the stacked block-diagonal operators
// cover stage T as well. Every E_k must have full row rank, which keeps the
// disturbance-to-state map right-invertible (p >= n).
class LTVSystem {
 public:
  LTVSystem(std::vector<Mat> A, std::vector<Mat> B, std::vector<Mat> E);

  static LTVSystem time_invariant(const Mat& A, const Mat& B, const Mat& E,
                                  int horizon);

  int horizon() const { return T_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int disturbance_dim() const { return p_; }

  const Mat& A(int k) const { return A_.at(k); }  // k = 0..T
  const Mat& B(int k) const { return B_.at(k); }  // k = 0..T
  const Mat& E(int k) const { return E_.at(k); }  // k = 0..T-1

 private:
  std::vector<Mat> A_, B_, E_;
  int T_ = 0, n_ = 0, m_ = 0, p_ = 0;
};

// Stage costs x_k'Q_k x_k + u_k'R_k u_k, k = 0..T. Q_k must be PSD and R_k PD.
// The stacked weight blkdiag(Q_0..Q_T, R_0..R_T) and its PSD square root are
// cached at construction.
class CostSpec {
 public:
  CostSpec(std::vector<Mat> Q, std::vector<Mat> R, double tol_psd = 1e-9,
           double tol_pd = 1e-12);

  static CostSpec time_invariant(const Mat& Q, const Mat& R, int horizon);

  int horizon() const { return T_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }

  const Mat& Q(int k) const { return Q_.at(k); }
  const Mat& R(int k) const { return R_.at(k); }

  const Mat& stacked() const { return stacked_; }            // (n+m)(T+1) square
  const Mat& stacked_sqrt() const { return stacked_sqrt_; }  // PSD square root

 private:
  std::vector<Mat> Q_, R_;
  Mat stacked_, stacked_sqrt_;
  int T_ = 0, n_ = 0, m_ = 0;
};

}  // namespace regsyn
