#include "regsyn/system.hpp"

#include <Eigen/SVD>
#include <stdexcept>
#include <string>

namespace regsyn {

double min_eigenvalue(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat psd_sqrt(const Mat& a, double tol_psd) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("psd_sqrt: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a));
  Vec ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol_psd * scale)
      throw std::invalid_argument("psd_sqrt: eigenvalue " +
                                  std::to_string(ev(i)) + " below tolerance");
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat pd_inv_sqrt(const Mat& a, double tol_pd, double cond_limit) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("pd_inv_sqrt: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a));
  Vec ev = es.eigenvalues();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  const double scale = std::max(1.0, std::abs(hi));
  if (lo <= tol_pd * scale)
    throw std::invalid_argument(
        "pd_inv_sqrt: matrix is not positive definite (min eigenvalue " +
        std::to_string(lo) + ")");
  if (hi / lo > cond_limit)
    throw std::invalid_argument(
        "pd_inv_sqrt: condition number " + std::to_string(hi / lo) +
        " exceeds limit");
  for (int i = 0; i < ev.size(); ++i) ev(i) = 1.0 / std::sqrt(ev(i));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

LTVSystem::LTVSystem(std::vector<Mat> A, std::vector<Mat> B, std::vector<Mat> E)
    : A_(std::move(A)), B_(std::move(B)), E_(std::move(E)) {
  require(!E_.empty(), "LTVSystem: horizon must be at least 1");
  T_ = static_cast<int>(E_.size());
  require(static_cast<int>(A_.size()) == T_ + 1,
          "LTVSystem: need T+1 A matrices, got " + std::to_string(A_.size()));
  require(static_cast<int>(B_.size()) == T_ + 1,
          "LTVSystem: need T+1 B matrices, got " + std::to_string(B_.size()));
  n_ = static_cast<int>(A_[0].rows());
  m_ = static_cast<int>(B_[0].cols());
  p_ = static_cast<int>(E_[0].cols());
  require(n_ >= 1 && m_ >= 1 && p_ >= 1, "LTVSystem: empty dimensions");

  for (int k = 0; k <= T_; ++k) {
    require(A_[k].rows() == n_ && A_[k].cols() == n_,
            "LTVSystem: A_" + std::to_string(k) + " is not n x n");
    require(B_[k].rows() == n_ && B_[k].cols() == m_,
            "LTVSystem: B_" + std::to_string(k) + " is not n x m");
  }
  for (int k = 0; k < T_; ++k) {
    require(E_[k].rows() == n_ && E_[k].cols() == p_,
            "LTVSystem: E_" + std::to_string(k) + " is not n x p");
    Eigen::JacobiSVD<Mat> svd(E_[k]);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    require(E_[k].rows() <= E_[k].cols() && smin > 1e-10 * std::max(1.0, smax),
            "LTVSystem: E_" + std::to_string(k) + " lacks full row rank");
  }
}

LTVSystem LTVSystem::time_invariant(const Mat& A, const Mat& B, const Mat& E,
                                    int horizon) {
  require(horizon >= 1, "LTVSystem: horizon must be at least 1");
  return LTVSystem(std::vector<Mat>(horizon + 1, A),
                   std::vector<Mat>(horizon + 1, B),
                   std::vector<Mat>(horizon, E));
}

CostSpec::CostSpec(std::vector<Mat> Q, std::vector<Mat> R, double tol_psd,
                   double tol_pd)
    : Q_(std::move(Q)), R_(std::move(R)) {
  require(!Q_.empty() && Q_.size() == R_.size(),
          "CostSpec: need matching nonempty Q and R sequences");
  T_ = static_cast<int>(Q_.size()) - 1;
  n_ = static_cast<int>(Q_[0].rows());
  m_ = static_cast<int>(R_[0].rows());
  for (int k = 0; k <= T_; ++k) {
    require(Q_[k].rows() == n_ && Q_[k].cols() == n_,
            "CostSpec: Q_" + std::to_string(k) + " is not n x n");
    require(R_[k].rows() == m_ && R_[k].cols() == m_,
            "CostSpec: R_" + std::to_string(k) + " is not m x m");
    const double q_scale = std::max(1.0, Q_[k].cwiseAbs().maxCoeff());
    require(min_eigenvalue(Q_[k]) >= -tol_psd * q_scale,
            "CostSpec: Q_" + std::to_string(k) + " is not PSD");
    const double r_scale = std::max(1.0, R_[k].cwiseAbs().maxCoeff());
    require(min_eigenvalue(R_[k]) > tol_pd * r_scale,
            "CostSpec: R_" + std::to_string(k) + " is not PD");
  }

  const int s = (n_ + m_) * (T_ + 1);
  stacked_ = Mat::Zero(s, s);
  stacked_sqrt_ = Mat::Zero(s, s);
  for (int k = 0; k <= T_; ++k) {
    stacked_.block(k * n_, k * n_, n_, n_) = symmetrized(Q_[k]);
    stacked_sqrt_.block(k * n_, k * n_, n_, n_) = psd_sqrt(Q_[k], tol_psd);
  }
  const int off = n_ * (T_ + 1);
  for (int k = 0; k <= T_; ++k) {
    stacked_.block(off + k * m_, off + k * m_, m_, m_) = symmetrized(R_[k]);
    stacked_sqrt_.block(off + k * m_, off + k * m_, m_, m_) =
        psd_sqrt(R_[k], tol_psd);
  }
}

CostSpec CostSpec::time_invariant(const Mat& Q, const Mat& R, int horizon) {
  require(horizon >= 1, "CostSpec: horizon must be at least 1");
  return CostSpec(std::vector<Mat>(horizon + 1, Q),
                  std::vector<Mat>(horizon + 1, R));
}

}  // namespace regsyn
