#include "regsyn/sim.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace regsyn {

const char* family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::truncated_gaussian:
      return "truncated_gaussian";
    case FamilyKind::uniform_ellipsoid:
      return "uniform_ellipsoid";
    case FamilyKind::constant:
      return "constant";
    case FamilyKind::sinusoidal:
      return "sinusoidal";
    case FamilyKind::sawtooth:
      return "sawtooth";
    case FamilyKind::step:
      return "step";
    case FamilyKind::stair:
      return "stair";
  }
  return "unknown";
}

const std::vector<FamilyKind>& all_families() {
  static const std::vector<FamilyKind> families = {
      FamilyKind::truncated_gaussian,
      FamilyKind::uniform_ellipsoid,
      FamilyKind::constant,
      FamilyKind::sinusoidal,
      FamilyKind::sawtooth,
      FamilyKind::step,
      FamilyKind::stair};
  return families;
}

namespace {

bool is_deterministic(FamilyKind kind) {
  return kind != FamilyKind::truncated_gaussian &&
         kind != FamilyKind::uniform_ellipsoid;
}

// unit-shape direction scaled onto the ellipsoid boundary; default is the
// longest axis
Vec boundary_direction(const DisturbanceFamily& family, const Mat& p_shape) {
  Vec d = family.direction;
  if (d.size() == 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(p_shape));
    d = es.eigenvectors().col(0);
  } else if (d.size() != p_shape.rows()) {
    throw std::invalid_argument("disturbance direction dimension mismatch");
  }
  const double q = d.dot(p_shape * d);
  if (q <= 0.0)
    throw std::invalid_argument("disturbance direction is degenerate");
  return d / std::sqrt(q);
}

std::vector<double> shape_values(const DisturbanceFamily& f, int T) {
  std::vector<double> g(T, 0.0);
  switch (f.kind) {
    case FamilyKind::constant:
      for (int k = 0; k < T; ++k) g[k] = 1.0;
      break;
    case FamilyKind::sinusoidal: {
      if (f.period <= 0.0)
        throw std::invalid_argument("sinusoidal period must be positive");
      for (int k = 0; k < T; ++k)
        g[k] = std::sin(2.0 * std::numbers::pi * k / f.period);
      break;
    }
    case FamilyKind::sawtooth: {
      if (f.period <= 0.0)
        throw std::invalid_argument("sawtooth period must be positive");
      for (int k = 0; k < T; ++k) {
        const double phase = k / f.period;
        g[k] = 2.0 * (phase - std::floor(phase)) - 1.0;
      }
      break;
    }
    case FamilyKind::step: {
      const int at = f.step_time >= 0 ? f.step_time : T / 2;
      for (int k = at; k < T; ++k) g[k] = 1.0;
      break;
    }
    case FamilyKind::stair: {
      if (f.stair_levels < 2)
        throw std::invalid_argument("stair needs at least two levels");
      const int width =
          f.stair_width > 0 ? f.stair_width : std::max(1, T / 5);
      for (int k = 0; k < T; ++k) {
        const int level = (k / width) % f.stair_levels;
        g[k] = -1.0 + 2.0 * level / (f.stair_levels - 1);
      }
      break;
    }
    default:
      throw std::invalid_argument("shape_values: random family");
  }
  double peak = 0.0;
  for (double v : g) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : g) v /= peak;
  return g;
}

std::mt19937_64 family_stream(unsigned seed, FamilyKind kind, int index) {
  std::seed_seq seq{seed, 0x5eedu + static_cast<unsigned>(kind),
                    static_cast<unsigned>(index)};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<Vec> generate(const DisturbanceFamily& family, const Mat& p_shape,
                          int T, unsigned seed, int index) {
  if (T <= 0) throw std::invalid_argument("generate: horizon must be positive");
  const int p = static_cast<int>(p_shape.rows());
  std::vector<Vec> w(T);

  if (is_deterministic(family.kind)) {
    const Vec dir = boundary_direction(family, p_shape);
    const auto g = shape_values(family, T);
    for (int k = 0; k < T; ++k) w[k] = g[k] * dir;
    return w;
  }

  auto rng = family_stream(seed, family.kind, index);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  const Mat pis = pd_inv_sqrt(p_shape);

  if (family.kind == FamilyKind::uniform_ellipsoid) {
    for (int k = 0; k < T; ++k) {
      Vec z(p);
      for (int i = 0; i < p; ++i) z(i) = gauss(rng);
      w[k] = pis * (std::pow(unit(rng), 1.0 / p) * z / z.norm());
    }
    return w;
  }

  // truncated Gaussian: covariance P^{-1}/c with c at the chi-square median,
  // so roughly half of the raw draws land inside the ellipsoid
  const double c = p * std::pow(1.0 - 2.0 / (9.0 * p), 3);
  for (int k = 0; k < T; ++k) {
    Vec z(p);
    do {
      for (int i = 0; i < p; ++i) z(i) = gauss(rng);
    } while (z.squaredNorm() > c);
    w[k] = pis * z / std::sqrt(c);
  }
  return w;
}

RunRecord rollout(const LTVSystem& sys, const CostSpec& cost,
                  const Controller& k, const Vec& x0,
                  const std::vector<Vec>& w) {
  const int T = sys.horizon();
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (x0.size() != n || static_cast<int>(w.size()) != T ||
      k.state_dim() != n || k.input_dim() != m || k.horizon() != T ||
      cost.horizon() != T)
    throw std::invalid_argument("rollout: dimension mismatch");
  for (const auto& wk : w)
    if (wk.size() != sys.disturbance_dim())
      throw std::invalid_argument("rollout: disturbance dimension mismatch");

  RunRecord rec;
  rec.w = w;
  rec.x.resize(T + 1);
  rec.u.resize(T + 1);
  rec.x[0] = x0;
  for (int t = 0; t <= T; ++t) {
    Vec u = Vec::Zero(m);
    for (int j = 0; j <= t; ++j) u += k.gain(t, j) * rec.x[j];
    rec.u[t] = u;
    rec.cost += rec.x[t].dot(cost.Q(t) * rec.x[t]) + u.dot(cost.R(t) * u);
    if (t < T)
      rec.x[t + 1] = sys.A(t) * rec.x[t] + sys.B(t) * u + sys.E(t) * w[t];
  }
  return rec;
}

RunRecord evaluate_run(const LTVSystem& sys, const CostSpec& cost,
                       const BenchmarkOperator& o, const Controller& k,
                       const Vec& x0, const std::vector<Vec>& w) {
  RunRecord rec = rollout(sys, cost, k, x0, w);
  const int n = sys.state_dim();
  const int p = sys.disturbance_dim();
  Vec delta(n + p * sys.horizon());
  delta.head(n) = x0;
  for (int t = 0; t < sys.horizon(); ++t) delta.segment(n + t * p, p) = w[t];
  rec.benchmark_cost = delta.dot(o.matrix() * delta);
  rec.regret = rec.cost - rec.benchmark_cost;
  if (rec.benchmark_cost > 1e-12)
    rec.competitive_ratio = rec.cost / rec.benchmark_cost;
  return rec;
}

double max_constraint_value(const ConstraintSpec& spec, const RunRecord& run) {
  double worst = 0.0;
  for (const auto& xk : run.x)
    if (spec.state_rows.rows() > 0)
      worst = std::max(worst, (spec.state_rows * xk).maxCoeff());
  for (const auto& uk : run.u)
    if (spec.input_rows.rows() > 0)
      worst = std::max(worst, (spec.input_rows * uk).maxCoeff());
  return worst;
}

BenchmarkTable benchmark_table(
    const LTVSystem& sys, const CostSpec& cost, const BenchmarkOperator& o,
    const std::vector<std::pair<std::string, Controller>>& controllers,
    const std::vector<DisturbanceFamily>& families, const Mat& p_shape,
    const Vec& x0, int realisations, unsigned seed) {
  if (controllers.empty())
    throw std::invalid_argument("benchmark_table: no controllers");
  if (realisations <= 0)
    throw std::invalid_argument("benchmark_table: no realisations");

  BenchmarkTable table;
  for (const auto& [id, k] : controllers) table.controllers.push_back(id);
  const int F = static_cast<int>(families.size());
  const int C = static_cast<int>(controllers.size());
  table.mean_cost = Mat::Zero(F, C);

  for (int f = 0; f < F; ++f) {
    table.families.emplace_back(family_name(families[f].kind));
    const int reps =
        is_deterministic(families[f].kind) ? 1 : realisations;
    for (int r = 0; r < reps; ++r) {
      const auto w = generate(families[f], p_shape, sys.horizon(), seed, r);
      for (int c = 0; c < C; ++c)
        table.mean_cost(f, c) +=
            evaluate_run(sys, cost, o, controllers[c].second, x0, w).cost /
            reps;
    }
  }

  table.normalised = table.mean_cost;
  for (int f = 0; f < F; ++f) {
    const double lo = table.mean_cost.row(f).minCoeff();
    if (lo > 0.0) table.normalised.row(f) /= lo;
  }
  return table;
}

std::string BenchmarkTable::to_csv() const {
  std::ostringstream out;
  out << "family";
  for (const auto& id : controllers) out << ',' << id;
  out << '\n';
  char buf[32];
  for (int f = 0; f < static_cast<int>(families.size()); ++f) {
    out << families[f];
    for (int c = 0; c < normalised.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", normalised(f, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace regsyn
