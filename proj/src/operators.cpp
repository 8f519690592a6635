#include "regsyn/operators.hpp"

#include <stdexcept>
#include <string>

namespace regsyn {

namespace {

// Solves (I - Z*blkdiag(A)) Y = M by forward block substitution:
// Y_0 = M_0, Y_k = M_k + A_{k-1} Y_{k-1}.
Mat forward_solve(const LTVSystem& sys, const Mat& m) {
  const int n = sys.state_dim();
  const int T = sys.horizon();
  Mat y = m;
  for (int k = 1; k <= T; ++k)
    y.middleRows(k * n, n) += sys.A(k - 1) * y.middleRows((k - 1) * n, n);
  return y;
}

}  // namespace

StackedOperators build_stacked(const LTVSystem& sys) {
  const int n = sys.state_dim(), m = sys.input_dim(), p = sys.disturbance_dim();
  const int T = sys.horizon();
  const int nx = n * (T + 1), nu = m * (T + 1), nd = n + p * T;

  StackedOperators ops;
  ops.n = n;
  ops.m = m;
  ops.p = p;
  ops.T = T;

  ops.block_a = Mat::Zero(nx, nx);
  ops.block_b = Mat::Zero(nx, nu);
  for (int k = 0; k <= T; ++k) {
    ops.block_a.block(k * n, k * n, n, n) = sys.A(k);
    ops.block_b.block(k * n, k * m, n, m) = sys.B(k);
  }

  ops.block_e = Mat::Zero(nx, nd);
  ops.block_e.topLeftCorner(n, n) = Mat::Identity(n, n);
  for (int k = 0; k < T; ++k)
    ops.block_e.block((k + 1) * n, n + k * p, n, p) = sys.E(k);

  ops.downshift = Mat::Zero(nx, nx);
  for (int k = 1; k <= T; ++k)
    ops.downshift.block(k * n, (k - 1) * n, n, n) = Mat::Identity(n, n);

  // shifted input columns, then the forward substitution
  Mat zb = Mat::Zero(nx, nu);
  for (int k = 1; k <= T; ++k)
    zb.block(k * n, (k - 1) * m, n, m) = sys.B(k - 1);
  ops.input_map = forward_solve(sys, zb);
  ops.disturbance_map = forward_solve(sys, ops.block_e);
  return ops;
}

BenchmarkOperator::BenchmarkOperator(Mat matrix, int n, int p, int T,
                                     double tol_psd)
    : matrix_(std::move(matrix)), n_(n), pT_(p * T) {
  const int d = n_ + pT_;
  if (matrix_.rows() != d || matrix_.cols() != d)
    throw std::invalid_argument("BenchmarkOperator: expected dimension " +
                                std::to_string(d));
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("BenchmarkOperator: matrix is not symmetric");
  matrix_ = symmetrized(matrix_);
  if (min_eigenvalue(matrix_) < -tol_psd * scale)
    throw std::invalid_argument("BenchmarkOperator: matrix is not PSD");
}

BenchmarkOperator noncausal_cost_operator(const LTVSystem& sys,
                                          const CostSpec& cost) {
  if (cost.horizon() != sys.horizon() || cost.state_dim() != sys.state_dim() ||
      cost.input_dim() != sys.input_dim())
    throw std::invalid_argument(
        "noncausal_cost_operator: cost does not match the system");
  const auto ops = build_stacked(sys);
  const int T = sys.horizon(), n = sys.state_dim(), m = sys.input_dim();
  const int nx = n * (T + 1);

  Mat q = Mat::Zero(nx, nx);
  Mat r_inv = Mat::Zero(m * (T + 1), m * (T + 1));
  for (int k = 0; k <= T; ++k) {
    q.block(k * n, k * n, n, n) = cost.Q(k);
    r_inv.block(k * m, k * m, m, m) =
        cost.R(k).llt().solve(Mat::Identity(m, m));
  }

  const Mat& f = ops.input_map;
  const Mat& g = ops.disturbance_map;
  const Mat inner = Mat::Identity(nx, nx) + f * r_inv * f.transpose() * q;
  const Mat o = g.transpose() * q * inner.lu().solve(g);
  return BenchmarkOperator(symmetrized(o), n, sys.disturbance_dim(), T);
}

Vec noncausal_control(const LTVSystem& sys, const CostSpec& cost,
                      const Vec& delta) {
  const auto ops = build_stacked(sys);
  if (delta.size() != ops.delta_dim())
    throw std::invalid_argument("noncausal_control: delta has size " +
                                std::to_string(delta.size()) + ", expected " +
                                std::to_string(ops.delta_dim()));
  const int T = sys.horizon(), n = sys.state_dim(), m = sys.input_dim();
  Mat q = Mat::Zero(n * (T + 1), n * (T + 1));
  Mat r = Mat::Zero(m * (T + 1), m * (T + 1));
  for (int k = 0; k <= T; ++k) {
    q.block(k * n, k * n, n, n) = cost.Q(k);
    r.block(k * m, k * m, m, m) = cost.R(k);
  }
  const Mat& f = ops.input_map;
  const Mat h = r + f.transpose() * q * f;
  return -h.llt().solve(f.transpose() * q * (ops.disturbance_map * delta));
}

double evaluate_cost(const LTVSystem& sys, const CostSpec& cost, const Vec& x0,
                     const std::vector<Vec>& u, const std::vector<Vec>& w) {
  const int T = sys.horizon();
  if (static_cast<int>(u.size()) != T + 1 ||
      static_cast<int>(w.size()) != T || x0.size() != sys.state_dim())
    throw std::invalid_argument("evaluate_cost: trajectory sizes do not match "
                                "the horizon");
  Vec x = x0;
  double j = 0.0;
  for (int k = 0; k < T; ++k) {
    j += x.dot(cost.Q(k) * x) + u[k].dot(cost.R(k) * u[k]);
    x = sys.A(k) * x + sys.B(k) * u[k] + sys.E(k) * w[k];
  }
  j += x.dot(cost.Q(T) * x) + u[T].dot(cost.R(T) * u[T]);
  return j;
}

}  // namespace regsyn
