#pragma once

#include <Eigen/Dense>

namespace regsyn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Symmetric part; used wherever accumulated roundoff would otherwise leak
// into definiteness checks.
inline Mat symmetrized(const Mat& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Mat& a);

// Symmetric PSD square root. Eigenvalues in [-tol_psd * scale, 0) are clamped
// to zero; anything below that threshold throws std::invalid_argument.
Mat psd_sqrt(const Mat& a, double tol_psd = 1e-9);

// Inverse square root of a symmetric PD matrix. Throws std::invalid_argument
// if an eigenvalue falls below tol_pd * scale or the condition number exceeds
// cond_limit.
Mat pd_inv_sqrt(const Mat& a, double tol_pd = 1e-12, double cond_limit = 1e12);

}  // namespace regsyn
