#include "regsyn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace regsyn {

namespace {

// W3^{-1/2} (Phi_w' C Phi_w - O3) W3^{-1/2}
Mat weighted_excess_tail(const SystemResponse& phi, const CostSpec& cost,
                         const BenchmarkOperator& o, const RegretWeight& w,
                         Mat* w3is_out = nullptr) {
  const Mat phi_w = phi.disturbance_columns();
  const Mat excess =
      symmetrized(phi_w.transpose() * cost.stacked() * phi_w - o.tail());
  const Mat w3is = pd_inv_sqrt(w.tail());
  if (w3is_out) *w3is_out = w3is;
  return symmetrized(w3is * excess * w3is);
}

double spectral_norm(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a),
                                        Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()),
                  std::abs(es.eigenvalues().maxCoeff()));
}

}  // namespace

Mat excess_cost_operator(const SystemResponse& phi, const CostSpec& cost,
                         const BenchmarkOperator& o) {
  const Mat st = phi.stacked();
  return symmetrized(st.transpose() * cost.stacked() * st - o.matrix());
}

double regret_ratio(const Mat& excess, const Mat& weight, const Vec& x0,
                    const Vec& w) {
  Vec delta(x0.size() + w.size());
  delta << x0, w;
  const double den = delta.dot(weight * delta);
  if (den <= 0.0)
    throw std::invalid_argument("regret_ratio: weight vanishes along delta");
  return delta.dot(excess * delta) / den;
}

double tight_level_zero_init(const SystemResponse& phi, const CostSpec& cost,
                             const BenchmarkOperator& o,
                             const RegretWeight& w) {
  Eigen::SelfAdjointEigenSolver<Mat> es(weighted_excess_tail(phi, cost, o, w),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Vec worst_case_disturbance_zero_init(const SystemResponse& phi,
                                     const CostSpec& cost,
                                     const BenchmarkOperator& o,
                                     const RegretWeight& w) {
  Mat w3is;
  Eigen::SelfAdjointEigenSolver<Mat> es(
      weighted_excess_tail(phi, cost, o, w, &w3is));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("worst_case_disturbance: eigensolver failed");
  const int top = static_cast<int>(es.eigenvalues().size()) - 1;
  return w3is * es.eigenvectors().col(top);
}

double suboptimality_floor(const RegretWeight& w) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(w.tail()),
                                        Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi > 1e12 * lo)
    throw std::invalid_argument(
        "suboptimality_floor: weight not positive definite enough");
  return 2.0 / (std::numbers::pi * (hi / lo));
}

double max_quadratic_over_ellipsoid(const Mat& a, const Vec& b, double c,
                                    const Mat& p_shape, Vec* argmax) {
  const int d = static_cast<int>(p_shape.rows());
  if (a.rows() != d || a.cols() != d || b.size() != d)
    throw std::invalid_argument(
        "max_quadratic_over_ellipsoid: dimension mismatch");
  const Mat pis = pd_inv_sqrt(p_shape);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(pis * a * pis));
  if (es.info() != Eigen::Success)
    throw std::runtime_error(
        "max_quadratic_over_ellipsoid: eigensolver failed");
  const Vec lam = es.eigenvalues();  // ascending
  const Vec beta = es.eigenvectors().transpose() * (pis * b);
  const double lmax = lam(d - 1);
  const double scale =
      std::max({1.0, std::abs(lmax), beta.cwiseAbs().maxCoeff()});
  const double tiny = 1e-13 * scale;

  // stationary point z(nu) of the multiplier equation (nu I - Lam) z = beta,
  // restricted to well-separated eigenvalues
  auto z_of = [&](double nu) {
    Vec z(d);
    for (int i = 0; i < d; ++i) {
      const double gap = nu - lam(i);
      z(i) = gap > tiny ? beta(i) / gap : 0.0;
    }
    return z;
  };
  auto norm2_of = [&](double nu) { return z_of(nu).squaredNorm(); };

  const double nu_floor = std::max(lmax, 0.0);
  double crit = 0.0;  // objective-gradient mass on the critical eigenspace
  for (int i = 0; i < d; ++i)
    if (nu_floor - lam(i) <= tiny) crit += beta(i) * beta(i);

  double nu = nu_floor;
  double pad = 0.0;
  if (crit <= tiny * tiny && norm2_of(nu_floor) <= 1.0) {
    // interior maximiser (nu_floor = 0) or the hard case (nu_floor = lmax):
    // reach the sphere along the top eigenvector when the multiplier is
    // active
    if (nu > 0.0) pad = std::sqrt(std::max(0.0, 1.0 - norm2_of(nu)));
  } else {
    double lo = nu_floor;
    double hi = nu_floor + beta.norm() + scale;
    while (norm2_of(hi) > 1.0) hi = 2.0 * hi + scale;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm2_of(mid) > 1.0 ? lo : hi) = mid;
    }
    nu = hi;
  }
  Vec z = z_of(nu);
  z(d - 1) += pad;
  const double value = z.dot(lam.asDiagonal() * z) + 2.0 * beta.dot(z) + c;
  if (argmax) *argmax = pis * (es.eigenvectors() * z);
  return value;
}

double polytopic_exact_level(const SystemResponse& phi, const CostSpec& cost,
                             const BenchmarkOperator& o, const RegretWeight& w,
                             const Vec& x0, const std::vector<Vec>& vertices,
                             double tol) {
  const int T = phi.horizon();
  const int p = phi.disturbance_dim();
  const int n = phi.state_dim();
  if (vertices.empty())
    throw std::invalid_argument("polytopic_exact_level: no vertices");
  for (const auto& v : vertices)
    if (v.size() != p)
      throw std::invalid_argument("polytopic_exact_level: vertex dimension");
  const double tuple_count = std::pow(double(vertices.size()), T);
  if (tuple_count > 1e5)
    throw std::invalid_argument(
        "polytopic_exact_level: vertex tuple budget exceeded");

  const Mat excess = excess_cost_operator(phi, cost, o);
  const Mat& wm = w.matrix();

  // one quadratic pair per vertex tuple; the inner maximum is linear in mu
  std::vector<std::pair<double, double>> forms;
  forms.reserve(static_cast<size_t>(tuple_count));
  std::vector<int> idx(T, 0);
  Vec delta(n + p * T);
  delta.head(n) = x0;
  for (;;) {
    for (int k = 0; k < T; ++k) delta.segment(n + k * p, p) = vertices[idx[k]];
    forms.emplace_back(delta.dot(excess * delta), delta.dot(wm * delta));
    int k = 0;
    while (k < T && ++idx[k] == static_cast<int>(vertices.size()))
      idx[k++] = 0;
    if (k == T) break;
  }
  auto worst = [&](double mu) {
    double g = -std::numeric_limits<double>::infinity();
    for (const auto& [e, q] : forms) g = std::max(g, e - mu * q);
    return g;
  };

  if (worst(0.0) <= 0.0) return 0.0;
  const Mat wis = pd_inv_sqrt(wm);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(wis * excess * wis),
                                        Eigen::EigenvaluesOnly);
  double lo = 0.0, hi = std::max(es.eigenvalues().maxCoeff(), tol);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

double exact_level_single_step(const SystemResponse& phi, const CostSpec& cost,
                               const BenchmarkOperator& o,
                               const RegretWeight& w, const Vec& x0,
                               const Mat& p_shape, double tol) {
  if (phi.horizon() != 1)
    throw std::invalid_argument("exact_level_single_step: horizon must be 1");
  const int n = phi.state_dim();
  const int p = phi.disturbance_dim();
  const Mat excess = excess_cost_operator(phi, cost, o);
  const Mat& wm = w.matrix();

  auto worst = [&](double mu) {
    const Mat m = excess - mu * wm;
    return max_quadratic_over_ellipsoid(
        m.bottomRightCorner(p, p), Vec(m.bottomLeftCorner(p, n) * x0),
        x0.dot(m.topLeftCorner(n, n) * x0), p_shape);
  };

  if (worst(0.0) <= 0.0) return 0.0;
  const Mat wis = pd_inv_sqrt(wm);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(wis * excess * wis),
                                        Eigen::EigenvaluesOnly);
  double lo = 0.0, hi = std::max(es.eigenvalues().maxCoeff(), tol);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

AscentResult local_level_lower_bound(const SystemResponse& phi,
                                     const CostSpec& cost,
                                     const BenchmarkOperator& o,
                                     const RegretWeight& w, const Vec& x0,
                                     const Mat& p_shape, int restarts,
                                     unsigned seed) {
  const int T = phi.horizon();
  const int p = phi.disturbance_dim();
  const int n = phi.state_dim();
  const Mat excess = excess_cost_operator(phi, cost, o);
  const Mat& wm = w.matrix();
  const Mat pis = pd_inv_sqrt(p_shape);
  const double step = 1.0 / std::max(2.0 * spectral_norm(excess), 1e-12);

  auto project = [&](Vec& wv) {
    for (int k = 0; k < T; ++k) {
      auto blk = wv.segment(k * p, p);
      const double q = blk.dot(p_shape * blk);
      if (q > 1.0) blk /= std::sqrt(q);
    }
  };
  auto ratio_of = [&](const Vec& wv, Vec* grad) {
    Vec delta(n + p * T);
    delta << x0, wv;
    const double den = delta.dot(wm * delta);
    if (den <= 0.0) {
      if (grad) grad->setZero(p * T);
      return 0.0;
    }
    const double num = delta.dot(excess * delta);
    const double r = num / den;
    if (grad)
      *grad = 2.0 / den *
              (Vec(excess * delta) - r * Vec(wm * delta)).tail(p * T);
    return r;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  AscentResult best;
  best.level = -std::numeric_limits<double>::infinity();
  best.w = Vec::Zero(p * T);
  if (x0.norm() > 0.0) best.level = ratio_of(best.w, nullptr);

  for (int r = 0; r < restarts; ++r) {
    Vec wv(p * T);
    for (int k = 0; k < T; ++k) {
      Vec g(p);
      for (int i = 0; i < p; ++i) g(i) = gauss(rng);
      wv.segment(k * p, p) = pis * (g / g.norm());
    }
    Vec grad(p * T);
    double value = ratio_of(wv, &grad);
    for (int it = 0; it < 300; ++it) {
      Vec next = wv + step * grad;
      project(next);
      const double cand = ratio_of(next, &grad);
      if (cand <= value + 1e-12 * (1.0 + std::abs(value))) break;
      wv = next;
      value = cand;
    }
    if (value > best.level) {
      best.level = value;
      best.w = wv;
    }
  }
  return best;
}

ChainReport check_inequality_chain(const LTVSystem& sys, const CostSpec& cost,
                                   const BenchmarkOperator& o,
                                   const RegretWeight& w, const Vec& x0,
                                   const Mat& p_shape,
                                   const SynthOptions& opts, double tol) {
  ChainReport rep;
  const double omega = sys.horizon() / min_eigenvalue(symmetrized(p_shape));
  const auto energy = synth_energy_ball(sys, cost, o, w, x0, omega, opts);
  const auto pwb = synth_pointwise(sys, cost, o, w, x0, p_shape, opts);
  rep.energy_status = energy.status;
  rep.pointwise_status = pwb.status;
  rep.floor_factor = suboptimality_floor(w);
  if (!energy.ok() || !pwb.ok()) return rep;

  rep.level_energy = energy.level;
  rep.level_pointwise = pwb.level;
  if (pwb.response) {
    const auto ascent =
        local_level_lower_bound(*pwb.response, cost, o, w, x0, p_shape);
    rep.local_estimate = ascent.level;
  }
  rep.eps_soft = std::max(
      0.0, rep.floor_factor * rep.level_pointwise - rep.local_estimate);
  rep.chain_ok =
      rep.floor_factor * rep.level_pointwise <= rep.level_pointwise + tol &&
      rep.level_pointwise <= rep.level_energy + tol &&
      rep.local_estimate <= rep.level_pointwise + tol;
  return rep;
}

}  // namespace regsyn
