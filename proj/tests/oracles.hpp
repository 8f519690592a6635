#pragma once

// Test-side oracles: plain per-step recursions and classical reference
// solutions, deliberately independent of the library's stacked-operator
// implementation paths.

#include <random>
#include <vector>

#include "regsyn/response.hpp"
#include "regsyn/system.hpp"

namespace oracle {

using regsyn::Mat;
using regsyn::Vec;

// x_{k+1} = A_k x_k + B_k u_k + E_k w_k, straight loop.
inline std::vector<Vec> rollout_states(const regsyn::LTVSystem& sys,
                                       const Vec& x0,
                                       const std::vector<Vec>& u,
                                       const std::vector<Vec>& w) {
  const int T = sys.horizon();
  std::vector<Vec> x(T + 1);
  x[0] = x0;
  for (int k = 0; k < T; ++k)
    x[k + 1] = sys.A(k) * x[k] + sys.B(k) * u[k] + sys.E(k) * w[k];
  return x;
}

inline double rollout_cost(const regsyn::LTVSystem& sys,
                           const regsyn::CostSpec& cost, const Vec& x0,
                           const std::vector<Vec>& u,
                           const std::vector<Vec>& w) {
  const auto x = rollout_states(sys, x0, u, w);
  double j = 0.0;
  for (int k = 0; k <= sys.horizon(); ++k) {
    j += x[k].dot(cost.Q(k) * x[k]);
    j += u[k].dot(cost.R(k) * u[k]);
  }
  return j;
}

// Finite-horizon LQR by backward Riccati recursion; gains[k] gives
// u_k = gains[k] * x_k (gains[T] = 0, stage T weighs the input only).
struct RiccatiSolution {
  std::vector<Mat> gains;
  std::vector<Mat> value;  // cost-to-go quadratics
};

inline RiccatiSolution lqr_riccati(const regsyn::LTVSystem& sys,
                                   const regsyn::CostSpec& cost) {
  const int T = sys.horizon();
  RiccatiSolution sol;
  sol.gains.resize(T + 1);
  sol.value.resize(T + 1);
  sol.value[T] = cost.Q(T);
  sol.gains[T] = Mat::Zero(sys.input_dim(), sys.state_dim());
  for (int k = T - 1; k >= 0; --k) {
    const Mat& p1 = sol.value[k + 1];
    const Mat h = cost.R(k) + sys.B(k).transpose() * p1 * sys.B(k);
    const Mat g = sys.B(k).transpose() * p1 * sys.A(k);
    const Mat gain = -h.llt().solve(g);
    sol.gains[k] = gain;
    sol.value[k] = cost.Q(k) + sys.A(k).transpose() * p1 * sys.A(k) +
                   sys.A(k).transpose() * p1 * sys.B(k) * gain;
    sol.value[k] = 0.5 * (sol.value[k] + sol.value[k].transpose());
  }
  return sol;
}

// Squared Frobenius cost of the LQR feedback: the closed-loop cost summed
// over every unit disturbance channel, each rolled out step by step.
inline double lqr_h2_objective(const regsyn::LTVSystem& sys,
                               const regsyn::CostSpec& cost,
                               const RiccatiSolution& sol) {
  const int T = sys.horizon();
  const int n = sys.state_dim(), p = sys.disturbance_dim();
  double total = 0.0;
  const int nd = n + p * T;
  for (int d = 0; d < nd; ++d) {
    Vec x0 = Vec::Zero(n);
    std::vector<Vec> w(T, Vec::Zero(p));
    if (d < n)
      x0(d) = 1.0;
    else
      w[(d - n) / p]((d - n) % p) = 1.0;
    Vec x = x0;
    double j = 0.0;
    for (int k = 0; k < T; ++k) {
      const Vec u = sol.gains[k] * x;
      j += x.dot(cost.Q(k) * x) + u.dot(cost.R(k) * u);
      x = sys.A(k) * x + sys.B(k) * u + sys.E(k) * w[k];
    }
    const Vec uT = sol.gains[T] * x;
    j += x.dot(cost.Q(T) * x) + uT.dot(cost.R(T) * uT);
    total += j;
  }
  return total;
}

// -------- random instance helpers (deterministic in the seed) --------

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols,
                         double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * dist(rng);
  return m;
}

inline Mat random_spd(std::mt19937_64& rng, int dim, double ridge = 0.5) {
  const Mat g = random_matrix(rng, dim, dim);
  return Mat(g * g.transpose() / dim + ridge * Mat::Identity(dim, dim));
}

// Random system with E of full row rank (p >= n) and mildly scaled dynamics.
inline regsyn::LTVSystem random_system(std::mt19937_64& rng, int n, int m,
                                       int p, int T,
                                       bool time_varying = true) {
  std::vector<Mat> A, B, E;
  const int stages = time_varying ? T + 1 : 1;
  for (int k = 0; k < stages; ++k) {
    Mat a = random_matrix(rng, n, n, 0.6);
    a += 0.4 * Mat::Identity(n, n);
    A.push_back(a);
    B.push_back(random_matrix(rng, n, m, 0.8));
  }
  for (int k = 0; k < (time_varying ? T : 1); ++k) {
    Mat e = random_matrix(rng, n, p, 0.7);
    e += Mat::Identity(n, p);  // keeps the rows independent
    E.push_back(e);
  }
  if (!time_varying) {
    A.assign(T + 1, A[0]);
    B.assign(T + 1, B[0]);
    E.assign(T, E[0]);
  } else {
    while (static_cast<int>(A.size()) < T + 1) A.push_back(A.back());
    while (static_cast<int>(E.size()) < T) E.push_back(E.back());
  }
  return regsyn::LTVSystem(A, B, E);
}

inline regsyn::CostSpec random_cost(std::mt19937_64& rng, int n, int m, int T,
                                    bool pd_states = true,
                                    bool zero_states = false) {
  std::vector<Mat> Q, R;
  for (int k = 0; k <= T; ++k) {
    if (zero_states)
      Q.push_back(Mat::Zero(n, n));
    else
      Q.push_back(pd_states ? random_spd(rng, n, 0.3)
                            : Mat(random_spd(rng, n, 0.0)));
    R.push_back(random_spd(rng, m, 0.4));
  }
  return regsyn::CostSpec(Q, R);
}

inline regsyn::Controller random_controller(std::mt19937_64& rng, int n, int m,
                                            int T, double scale = 0.4) {
  regsyn::Controller k(n, m, T);
  for (int i = 0; i <= T; ++i)
    for (int j = 0; j <= i; ++j) k.gain(i, j) = random_matrix(rng, m, n, scale);
  return k;
}

inline Vec random_vec(std::mt19937_64& rng, int dim, double scale = 1.0) {
  return Vec(random_matrix(rng, dim, 1, scale));
}

}  // namespace oracle
