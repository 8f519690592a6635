#include "regsyn/response.hpp"

#include <string>

namespace regsyn {

SystemResponse::SystemResponse(int n, int m, int p, int T, bool causal)
    : n_(n), m_(m), p_(p), T_(T), causal_(causal) {
  if (n < 1 || m < 1 || p < 1 || T < 1)
    throw std::invalid_argument("SystemResponse: empty dimensions");
  state_rows_.reserve(T + 1);
  input_rows_.reserve(T + 1);
  for (int k = 0; k <= T; ++k) {
    state_rows_.emplace_back(Mat::Zero(n, row_width(k)));
    input_rows_.emplace_back(Mat::Zero(m, row_width(k)));
  }
}

int SystemResponse::row_width(int k) const {
  return causal_ ? n_ + p_ * std::min(k, T_) : n_ + p_ * T_;
}

SystemResponse SystemResponse::from_dense(const Mat& phi_x, const Mat& phi_u,
                                          int n, int m, int p, int T,
                                          bool causal, double struct_tol) {
  const int nd = n + p * T;
  if (phi_x.rows() != n * (T + 1) || phi_x.cols() != nd ||
      phi_u.rows() != m * (T + 1) || phi_u.cols() != nd)
    throw std::invalid_argument("SystemResponse: map dimensions do not match");

  SystemResponse r(n, m, p, T, causal);
  for (int k = 0; k <= T; ++k) {
    const int w = r.row_width(k);
    r.state_rows_[k] = phi_x.block(k * n, 0, n, w);
    r.input_rows_[k] = phi_u.block(k * m, 0, m, w);
    if (causal && w < nd) {
      const double leak =
          std::max(phi_x.block(k * n, w, n, nd - w).cwiseAbs().maxCoeff(),
                   phi_u.block(k * m, w, m, nd - w).cwiseAbs().maxCoeff());
      if (leak > struct_tol)
        throw std::invalid_argument(
            "SystemResponse: block row " + std::to_string(k) +
            " reaches disturbances it cannot have seen (entry " +
            std::to_string(leak) + ")");
    }
  }
  return r;
}

Mat SystemResponse::state_map() const {
  Mat full = Mat::Zero(n_ * (T_ + 1), delta_dim());
  for (int k = 0; k <= T_; ++k)
    full.block(k * n_, 0, n_, row_width(k)) = state_rows_[k];
  return full;
}

Mat SystemResponse::input_map() const {
  Mat full = Mat::Zero(m_ * (T_ + 1), delta_dim());
  for (int k = 0; k <= T_; ++k)
    full.block(k * m_, 0, m_, row_width(k)) = input_rows_[k];
  return full;
}

Mat SystemResponse::stacked() const {
  Mat full(n_ * (T_ + 1) + m_ * (T_ + 1), delta_dim());
  full.topRows(n_ * (T_ + 1)) = state_map();
  full.bottomRows(m_ * (T_ + 1)) = input_map();
  return full;
}

Mat SystemResponse::initial_columns() const { return stacked().leftCols(n_); }

Mat SystemResponse::disturbance_columns() const {
  return stacked().rightCols(p_ * T_);
}

Vec SystemResponse::states(const Vec& delta) const {
  if (delta.size() != delta_dim())
    throw std::invalid_argument("SystemResponse: delta has wrong size");
  Vec x(n_ * (T_ + 1));
  for (int k = 0; k <= T_; ++k)
    x.segment(k * n_, n_) = state_rows_[k] * delta.head(row_width(k));
  return x;
}

Vec SystemResponse::inputs(const Vec& delta) const {
  if (delta.size() != delta_dim())
    throw std::invalid_argument("SystemResponse: delta has wrong size");
  Vec u(m_ * (T_ + 1));
  for (int k = 0; k <= T_; ++k)
    u.segment(k * m_, m_) = input_rows_[k] * delta.head(row_width(k));
  return u;
}

double achievability_residual(const SystemResponse& phi,
                              const StackedOperators& ops) {
  if (phi.state_dim() != ops.n || phi.input_dim() != ops.m ||
      phi.disturbance_dim() != ops.p || phi.horizon() != ops.T)
    throw std::invalid_argument(
        "achievability_residual: response does not match the system");
  const Mat px = phi.state_map();
  const Mat pu = phi.input_map();
  const Mat defect = px - ops.downshift * (ops.block_a * px + ops.block_b * pu) -
                     ops.block_e;
  return defect.norm();
}

Controller::Controller(int n, int m, int T) : n_(n), m_(m), T_(T) {
  if (n < 1 || m < 1 || T < 1)
    throw std::invalid_argument("Controller: empty dimensions");
  gains_.resize(T + 1);
  for (int k = 0; k <= T; ++k)
    gains_[k].assign(k + 1, Mat::Zero(m, n));
}

Mat& Controller::gain(int k, int j) { return gains_.at(k).at(j); }
const Mat& Controller::gain(int k, int j) const { return gains_.at(k).at(j); }

Mat Controller::dense() const {
  Mat full = Mat::Zero(m_ * (T_ + 1), n_ * (T_ + 1));
  for (int k = 0; k <= T_; ++k)
    for (int j = 0; j <= k; ++j)
      full.block(k * m_, j * n_, m_, n_) = gains_[k][j];
  return full;
}

Controller recover_controller(const SystemResponse& phi) {
  if (!phi.is_causal())
    throw std::invalid_argument(
        "recover_controller: response must be causal");
  const int n = phi.state_dim(), m = phi.input_dim(), T = phi.horizon();
  Controller k(n, m, T);

  // Block row s of the input map equals [gains s,0.. s,s] times the leading
  // s+1 block rows of the state map; those rows span their row space for any
  // achievable response, so the Gram solve is exact.
  for (int s = 0; s <= T; ++s) {
    const int w = phi.row_width(s);
    Mat lead(n * (s + 1), w);
    for (int j = 0; j <= s; ++j) {
      lead.middleRows(j * n, n).setZero();
      lead.block(j * n, 0, n, phi.row_width(j)) = phi.state_row(j);
    }
    const Mat gram = lead * lead.transpose();
    Eigen::LDLT<Mat> ldlt(gram);
    const double scale = std::max(1.0, gram.diagonal().maxCoeff());
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() <= 1e-12 * scale)
      throw SingularResponseError(
          "recover_controller: leading state-map rows lose rank at stage " +
          std::to_string(s));
    const Mat sol =
        ldlt.solve(lead * phi.input_row(s).transpose()).transpose();
    for (int j = 0; j <= s; ++j) k.gain(s, j) = sol.middleCols(j * n, n);
  }
  return k;
}

SystemResponse closed_loop_response(const LTVSystem& sys, const Controller& k) {
  const int n = sys.state_dim(), m = sys.input_dim(), p = sys.disturbance_dim();
  const int T = sys.horizon();
  if (k.state_dim() != n || k.input_dim() != m || k.horizon() != T)
    throw std::invalid_argument(
        "closed_loop_response: controller does not match the system");

  SystemResponse phi(n, m, p, T, /*causal=*/true);
  phi.state_row(0).leftCols(n) = Mat::Identity(n, n);
  phi.input_row(0) = k.gain(0, 0) * phi.state_row(0);
  for (int s = 1; s <= T; ++s) {
    const int w_prev = phi.row_width(s - 1);
    Mat& row = phi.state_row(s);
    row.leftCols(w_prev) = sys.A(s - 1) * phi.state_row(s - 1) +
                           sys.B(s - 1) * phi.input_row(s - 1);
    row.rightCols(p) = sys.E(s - 1);
    Mat& urow = phi.input_row(s);
    for (int j = 0; j <= s; ++j)
      urow.leftCols(phi.row_width(j)) += k.gain(s, j) * phi.state_row(j);
  }
  return phi;
}

}  // namespace regsyn
