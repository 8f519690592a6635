#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "regsyn/synthesis.hpp"

namespace regsyn {

namespace {

// One decision variable per stored entry of Phi_u. Causal layouts keep block
// row k at width n + p*k, full layouts carry every delta column.
struct PhiLayout {
  int n = 0, m = 0, p = 0, T = 0;
  bool causal = true;
  std::vector<int> row_base;
  int total = 0;

  static PhiLayout make(int n, int m, int p, int T, bool causal) {
    PhiLayout lay;
    lay.n = n;
    lay.m = m;
    lay.p = p;
    lay.T = T;
    lay.causal = causal;
    lay.row_base.resize(T + 2, 0);
    for (int k = 0; k <= T; ++k)
      lay.row_base[k + 1] = lay.row_base[k] + m * lay.width(k);
    lay.total = lay.row_base[T + 1];
    return lay;
  }

  int width(int k) const { return causal ? n + p * k : n + p * T; }
  int var(int k, int i, int col) const {
    return row_base[k] + i * width(k) + col;
  }
};

// The achievability constraint pins Phi_x to F Phi_u + G, so the programs
// below only see Phi_u. cf and cg carry the weighted response
//   C^{1/2} Phi = cf * Phi_u + cg
// with cf = C^{1/2} [F; I] and cg = C^{1/2} [G; 0].
struct Assembly {
  StackedOperators ops;
  PhiLayout lay;
  Mat cf, cg;
  // nonzero rows of each cf column, precomputed once
  std::vector<std::vector<std::pair<int, double>>> cf_cols;

  int n() const { return ops.n; }
  int m() const { return ops.m; }
  int p() const { return ops.p; }
  int T() const { return ops.T; }
  int nx() const { return ops.state_stack_dim(); }
  int nu() const { return ops.input_stack_dim(); }
  int nd() const { return ops.delta_dim(); }
  int nw() const { return ops.p * ops.T; }
  int s() const { return nx() + nu(); }
};

Assembly make_assembly(const LTVSystem& sys, const CostSpec& cost,
                       bool causal) {
  Assembly as;
  as.ops = build_stacked(sys);
  as.lay = PhiLayout::make(as.ops.n, as.ops.m, as.ops.p, as.ops.T, causal);
  const Mat& csq = cost.stacked_sqrt();
  Mat lift(as.s(), as.nu());
  lift.topRows(as.nx()) = as.ops.input_map;
  lift.bottomRows(as.nu()) = Mat::Identity(as.nu(), as.nu());
  as.cf = csq * lift;
  as.cg = Mat::Zero(as.s(), as.nd());
  as.cg.noalias() = csq.leftCols(as.nx()) * as.ops.disturbance_map;
  as.cf_cols.resize(as.nu());
  for (int ur = 0; ur < as.nu(); ++ur)
    for (int a = 0; a < as.s(); ++a)
      if (as.cf(a, ur) != 0.0) as.cf_cols[ur].push_back({a, as.cf(a, ur)});
  return as;
}

// Adds the columns of C^{1/2} Phi(:, c_begin..c_end) * right into an LMI
// block at (row_off + a, col_off + t). right may be empty, meaning the
// identity on the column range.
void add_response_columns(conic::ConicProgram& prog, int block,
                          const Assembly& as, int c_begin, int c_end,
                          const Mat& right, int row_off, int col_off) {
  const bool plain = right.size() == 0;
  const int ncols = plain ? c_end - c_begin : static_cast<int>(right.cols());
  for (int c = c_begin; c < c_end; ++c) {
    for (int a = 0; a < as.s(); ++a) {
      const double v = as.cg(a, c);
      if (v == 0.0) continue;
      if (plain) {
        prog.add_lmi_constant(block, row_off + a, col_off + (c - c_begin), v);
      } else {
        for (int t = 0; t < ncols; ++t) {
          const double rv = right(c - c_begin, t);
          if (rv != 0.0)
            prog.add_lmi_constant(block, row_off + a, col_off + t, v * rv);
        }
      }
    }
  }
  for (int k = 0; k <= as.T(); ++k) {
    const int hi = std::min(c_end, as.n() + (as.lay.causal ? as.p() * k
                                                           : as.p() * as.T()));
    for (int i = 0; i < as.m(); ++i) {
      const int ur = k * as.m() + i;
      for (int c = std::max(c_begin, 0); c < hi; ++c) {
        const int v = as.lay.var(k, i, c);
        for (const auto& [a, w] : as.cf_cols[ur]) {
          if (plain) {
            prog.add_lmi_term(block, v, row_off + a, col_off + (c - c_begin),
                              w);
          } else {
            for (int t = 0; t < ncols; ++t) {
              const double rv = right(c - c_begin, t);
              if (rv != 0.0)
                prog.add_lmi_term(block, v, row_off + a, col_off + t, w * rv);
            }
          }
        }
      }
    }
  }
}

// Affine form of one trajectory constraint row [H]_i at a given stage:
// value = coeff_u * Phi_u * delta + coeff_delta * delta.
struct TightRow {
  int stage = 0;
  Vec coeff_u;      // over stacked input indices
  Vec coeff_delta;  // over delta columns
};

std::vector<TightRow> tight_rows(const Assembly& as,
                                 const ConstraintSpec& spec) {
  std::vector<TightRow> rows;
  const int qx = static_cast<int>(spec.state_rows.rows());
  const int qu = static_cast<int>(spec.input_rows.rows());
  for (int k = 0; k <= as.T(); ++k) {
    for (int i = 0; i < qx; ++i) {
      TightRow r;
      r.stage = k;
      const Mat fk = as.ops.input_map.middleRows(k * as.n(), as.n());
      const Mat gk = as.ops.disturbance_map.middleRows(k * as.n(), as.n());
      r.coeff_u = (spec.state_rows.row(i) * fk).transpose();
      r.coeff_delta = (spec.state_rows.row(i) * gk).transpose();
      rows.push_back(std::move(r));
    }
    for (int i = 0; i < qu; ++i) {
      TightRow r;
      r.stage = k;
      r.coeff_u = Vec::Zero(as.nu());
      r.coeff_u.segment(k * as.m(), as.m()) =
          spec.input_rows.row(i).transpose();
      r.coeff_delta = Vec::Zero(as.nd());
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

int tight_block_count(const Assembly& as, int stage) {
  return as.lay.causal ? std::min(stage, as.T()) : as.T();
}

// Worst-case constraint rows over per-step ellipsoids: for each row and each
// reachable disturbance block, an epigraph variable bounds the dual norm,
// and one scalar row caps the x0 part plus the epigraph sum at one.
// Returns false when a constant row is already violated.
bool add_tightened_rows(conic::ConicProgram& prog, const Assembly& as,
                        const std::vector<TightRow>& rows,
                        const Mat& p_inv_sqrt, const Vec& x0, int first_svar) {
  int sv = first_svar;
  for (const auto& row : rows) {
    const int nblocks = tight_block_count(as, row.stage);
    conic::LinExpr scalar;
    scalar.constant = 1.0 - row.coeff_delta.head(as.n()).dot(x0);
    // x0 columns of Phi_u
    for (int k = 0; k <= as.T(); ++k)
      for (int i = 0; i < as.m(); ++i) {
        const double cu = row.coeff_u(k * as.m() + i);
        if (cu == 0.0) continue;
        for (int c = 0; c < as.n(); ++c)
          if (x0(c) != 0.0)
            scalar.add(as.lay.var(k, i, c), -cu * x0(c));
      }
    for (int j = 0; j < nblocks; ++j) {
      std::vector<conic::LinExpr> norm_part(as.p());
      for (int alpha = 0; alpha < as.p(); ++alpha) {
        conic::LinExpr& ne = norm_part[alpha];
        for (int t = 0; t < as.p(); ++t) {
          const double pw = p_inv_sqrt(alpha, t);
          if (pw == 0.0) continue;
          const int c = as.n() + j * as.p() + t;
          ne.constant += pw * row.coeff_delta(c);
          for (int k = 0; k <= as.T(); ++k) {
            if (as.lay.causal && c >= as.n() + as.p() * k) continue;
            for (int i = 0; i < as.m(); ++i) {
              const double cu = row.coeff_u(k * as.m() + i);
              if (cu != 0.0) ne.add(as.lay.var(k, i, c), pw * cu);
            }
          }
        }
      }
      prog.add_soc(std::move(norm_part), conic::LinExpr(sv, 1.0));
      scalar.add(sv, -1.0);
      ++sv;
    }
    if (scalar.terms.empty()) {
      if (scalar.constant < 0.0) return false;
      continue;
    }
    prog.add_nonneg(std::move(scalar));
  }
  return true;
}

int count_svars(const Assembly& as, const std::vector<TightRow>& rows) {
  int count = 0;
  for (const auto& row : rows) count += tight_block_count(as, row.stage);
  return count;
}

Mat extract_phi_u(const Assembly& as, const Vec& x) {
  Mat phi_u = Mat::Zero(as.nu(), as.nd());
  for (int k = 0; k <= as.T(); ++k)
    for (int i = 0; i < as.m(); ++i)
      for (int c = 0; c < as.lay.width(k); ++c)
        phi_u(k * as.m() + i, c) = x(as.lay.var(k, i, c));
  return phi_u;
}

void attach_response(SynthesisResult& res, const Assembly& as, const Vec& x,
                     bool want_controller) {
  const Mat phi_u = extract_phi_u(as, x);
  Mat phi_x = as.ops.disturbance_map;
  phi_x.noalias() += as.ops.input_map * phi_u;
  res.response = SystemResponse::from_dense(phi_x, phi_u, as.n(), as.m(),
                                            as.p(), as.T(), as.lay.causal);
  res.achievability = achievability_residual(*res.response, as.ops);
  if (want_controller) {
    try {
      res.controller = recover_controller(*res.response);
    } catch (const SingularResponseError& err) {
      res.controller.reset();
      res.note += res.note.empty() ? "" : "; ";
      res.note += std::string("controller recovery failed: ") + err.what();
    }
  }
}

struct ConstraintSetup {
  std::vector<TightRow> rows;
  Mat p_inv_sqrt;
  Vec x0;
  int num_svars = 0;
  bool active = false;
};

// Resolves the optional constraint block of SynthOptions against the
// disturbance model's own shape and initial state, if any.
ConstraintSetup setup_constraints(const Assembly& as, const SynthOptions& opts,
                                  const Mat* model_shape,
                                  const Vec* model_x0) {
  ConstraintSetup cs;
  if (!opts.constraints) return cs;
  const Mat* shape =
      opts.constraint_shape ? &*opts.constraint_shape : model_shape;
  if (shape == nullptr)
    throw std::invalid_argument(
        "trajectory constraints need a per-step disturbance ellipsoid");
  if (shape->rows() != as.p() || shape->cols() != as.p())
    throw std::invalid_argument("constraint ellipsoid has wrong dimensions");
  cs.p_inv_sqrt = pd_inv_sqrt(*shape);
  if (opts.constraint_x0)
    cs.x0 = *opts.constraint_x0;
  else if (model_x0 != nullptr)
    cs.x0 = *model_x0;
  else
    cs.x0 = Vec::Zero(as.n());
  if (cs.x0.size() != as.n())
    throw std::invalid_argument("constraint initial state has wrong size");
  const auto& spec = *opts.constraints;
  if ((spec.state_rows.rows() > 0 && spec.state_rows.cols() != as.n()) ||
      (spec.input_rows.rows() > 0 && spec.input_rows.cols() != as.m()))
    throw std::invalid_argument("constraint rows have wrong dimensions");
  cs.rows = tight_rows(as, spec);
  cs.num_svars = count_svars(as, cs.rows);
  cs.active = true;
  return cs;
}

SynthesisResult infeasible_result(const std::string& why) {
  SynthesisResult res;
  res.status = conic::Status::infeasible;
  res.report.status = conic::Status::infeasible;
  res.report.message = why;
  res.note = why;
  return res;
}

void finalize(SynthesisResult& res, const Assembly& as,
              const conic::SolveReport& report, int level_var,
              bool want_controller) {
  res.report = report;
  res.status = report.status;
  if (!res.ok()) return;
  res.level = level_var >= 0 ? report.x(level_var) : report.objective;
  attach_response(res, as, report.x, want_controller);
}

// Shared reduced program over the disturbance response only:
//   min mu  s.t.  [mu I + t1, (C^{1/2} Phi_w right)'; ., I] psd
// with t1 = right' O3 right. Covers the zero-initial-state regret program
// (right = W3^{-1/2}) and the Hinf baseline (O3 = 0, right = I).
SynthesisResult solve_disturbance_program(const LTVSystem& sys,
                                          const CostSpec& cost, const Mat& t1,
                                          const Mat& right,
                                          const SynthOptions& opts) {
  Assembly as = make_assembly(sys, cost, true);
  ConstraintSetup cs = setup_constraints(as, opts, nullptr, nullptr);

  const int mu_var = as.lay.total;
  const int num_vars = as.lay.total + 1 + cs.num_svars;
  conic::ConicProgram prog(num_vars);
  prog.set_objective_term(mu_var, 1.0);

  const int d = as.nw() + as.s();
  const int b = prog.add_lmi_block(d);
  for (int i = 0; i < as.nw(); ++i) {
    prog.add_lmi_term(b, mu_var, i, i, 1.0);
    for (int j = 0; j <= i; ++j)
      if (t1(i, j) != 0.0) prog.add_lmi_constant(b, i, j, t1(i, j));
  }
  for (int a = 0; a < as.s(); ++a)
    prog.add_lmi_constant(b, as.nw() + a, as.nw() + a, 1.0);

  const bool right_is_identity = right.isIdentity(1e-14);
  add_response_columns(prog, b, as, as.n(), as.nd(),
                       right_is_identity ? Mat() : right, as.nw(), 0);

  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + 1))
    return infeasible_result("constant constraint row violated");

  SynthesisResult res;
  finalize(res, as, conic::solve(prog, opts.solver), mu_var, true);
  return res;
}

}  // namespace

RegretWeight::RegretWeight(Mat m, int n, int pT, Kind kind, double reg)
    : matrix_(std::move(m)), n_(n), pT_(pT), kind_(kind), regularisation_(reg) {}

RegretWeight RegretWeight::identity(int n, int p, int T) {
  return RegretWeight(Mat::Identity(n + p * T, n + p * T), n, p * T,
                      Kind::identity, 0.0);
}

RegretWeight RegretWeight::benchmark(const BenchmarkOperator& o,
                                     double tol_pd) {
  Mat w = symmetrized(o.matrix());
  const double scale = 1.0 + w.cwiseAbs().maxCoeff();
  const double lmin = min_eigenvalue(w);
  double eps = 0.0;
  if (lmin <= tol_pd * scale) {
    eps = 1e-8 * w.trace() / w.rows();
    if (lmin + eps <= 10.0 * tol_pd * scale)
      eps = 10.0 * tol_pd * scale - lmin;
    w.diagonal().array() += eps;
  }
  return RegretWeight(std::move(w), o.state_dim(), o.tail_dim(),
                      Kind::benchmark, eps);
}

RegretWeight RegretWeight::custom(Mat w, int n, int p, int T, double tol_pd) {
  const int dim = n + p * T;
  if (w.rows() != dim || w.cols() != dim)
    throw std::invalid_argument("weight dimension mismatch");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + w.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("weight must be symmetric");
  w = symmetrized(w);
  if (min_eigenvalue(w) <= tol_pd * (1.0 + w.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("weight must be positive definite");
  return RegretWeight(std::move(w), n, p * T, Kind::custom, 0.0);
}

SynthesisResult synth_zero_init(const LTVSystem& sys, const CostSpec& cost,
                                const BenchmarkOperator& o,
                                const RegretWeight& w,
                                const SynthOptions& opts) {
  const Mat w3is = pd_inv_sqrt(w.tail());
  const Mat t1 = symmetrized(w3is * o.tail() * w3is);
  SynthesisResult res = solve_disturbance_program(sys, cost, t1, w3is, opts);
  res.weight_regularised = w.regularisation() > 0.0;
  return res;
}

SynthesisResult synth_hinf(const LTVSystem& sys, const CostSpec& cost,
                           const SynthOptions& opts) {
  const int nw = sys.disturbance_dim() * sys.horizon();
  return solve_disturbance_program(sys, cost, Mat::Zero(nw, nw),
                                   Mat::Identity(nw, nw), opts);
}

SynthesisResult synth_energy_ball(const LTVSystem& sys, const CostSpec& cost,
                                  const BenchmarkOperator& o,
                                  const RegretWeight& w, const Vec& x0,
                                  double omega, const SynthOptions& opts) {
  if (x0.size() != sys.state_dim())
    throw std::invalid_argument("initial state has wrong size");
  if (omega < 0.0) throw std::invalid_argument("energy bound must be >= 0");
  if (x0.lpNorm<Eigen::Infinity>() <= 1e-12) {
    // the ball multiplier loses its handle on the (1,1) entry; the reduced
    // program is exact here
    SynthOptions zopts = opts;
    if (opts.constraints && !opts.constraint_x0) zopts.constraint_x0 = x0;
    SynthesisResult res = synth_zero_init(sys, cost, o, w, zopts);
    res.multipliers = {0.0};
    res.note += res.note.empty() ? "" : "; ";
    res.note += "zero initial state: solved the reduced program";
    return res;
  }

  Assembly as = make_assembly(sys, cost, true);
  ConstraintSetup cs = setup_constraints(as, opts, nullptr, &x0);

  const int mu_var = as.lay.total;
  const int lam_var = as.lay.total + 1;
  conic::ConicProgram prog(as.lay.total + 2 + cs.num_svars);
  prog.set_objective_term(mu_var, 1.0);
  prog.add_nonneg(conic::LinExpr(lam_var, 1.0));

  const Mat o2x0 = o.cross() * x0;
  const Mat w2x0 = w.cross() * x0;
  const Mat o3 = o.tail();
  const Mat w3 = w.tail();

  const int d = 1 + as.nw() + as.s();
  const int b = prog.add_lmi_block(d);
  prog.add_lmi_constant(b, 0, 0, x0.dot(o.head() * x0));
  prog.add_lmi_term(b, mu_var, 0, 0, x0.dot(w.head() * x0));
  prog.add_lmi_term(b, lam_var, 0, 0, -omega);
  for (int i = 0; i < as.nw(); ++i) {
    if (o2x0(i, 0) != 0.0) prog.add_lmi_constant(b, 1 + i, 0, o2x0(i, 0));
    if (w2x0(i, 0) != 0.0) prog.add_lmi_term(b, mu_var, 1 + i, 0, w2x0(i, 0));
    prog.add_lmi_term(b, lam_var, 1 + i, 1 + i, 1.0);
    for (int j = 0; j <= i; ++j) {
      if (o3(i, j) != 0.0) prog.add_lmi_constant(b, 1 + i, 1 + j, o3(i, j));
      if (w3(i, j) != 0.0) prog.add_lmi_term(b, mu_var, 1 + i, 1 + j, w3(i, j));
    }
  }
  for (int a = 0; a < as.s(); ++a)
    prog.add_lmi_constant(b, 1 + as.nw() + a, 1 + as.nw() + a, 1.0);

  add_response_columns(prog, b, as, 0, as.n(), x0, 1 + as.nw(), 0);
  add_response_columns(prog, b, as, as.n(), as.nd(), Mat(), 1 + as.nw(), 1);

  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + 2))
    return infeasible_result("constant constraint row violated");

  SynthesisResult res;
  res.weight_regularised = w.regularisation() > 0.0;
  finalize(res, as, conic::solve(prog, opts.solver), mu_var, true);
  if (res.ok()) res.multipliers = {std::max(0.0, res.report.x(lam_var))};
  return res;
}

SynthesisResult synth_pointwise(const LTVSystem& sys, const CostSpec& cost,
                                const BenchmarkOperator& o,
                                const RegretWeight& w, const Vec& x0,
                                const Mat& p_shape, const SynthOptions& opts) {
  if (x0.size() != sys.state_dim())
    throw std::invalid_argument("initial state has wrong size");
  if (p_shape.rows() != sys.disturbance_dim() ||
      p_shape.cols() != sys.disturbance_dim())
    throw std::invalid_argument("ellipsoid shape has wrong dimensions");
  if (min_eigenvalue(symmetrized(p_shape)) <= 0.0)
    throw std::invalid_argument("ellipsoid shape must be positive definite");
  const int T = sys.horizon();
  if (x0.lpNorm<Eigen::Infinity>() <= 1e-12) {
    // all stage multipliers are forced to zero, leaving the reduced program
    SynthOptions zopts = opts;
    if (opts.constraints && !opts.constraint_shape) zopts.constraint_shape = p_shape;
    if (opts.constraints && !opts.constraint_x0) zopts.constraint_x0 = x0;
    SynthesisResult res = synth_zero_init(sys, cost, o, w, zopts);
    res.multipliers.assign(T, 0.0);
    res.note += res.note.empty() ? "" : "; ";
    res.note += "zero initial state: solved the reduced program";
    return res;
  }

  Assembly as = make_assembly(sys, cost, true);
  SynthOptions copts = opts;
  if (opts.constraints && !opts.constraint_shape)
    copts.constraint_shape = p_shape;
  ConstraintSetup cs = setup_constraints(as, copts, &p_shape, &x0);

  const int mu_var = as.lay.total;
  const int lam0 = as.lay.total + 1;
  conic::ConicProgram prog(as.lay.total + 1 + T + cs.num_svars);
  prog.set_objective_term(mu_var, 1.0);
  for (int i = 0; i < T; ++i)
    prog.add_nonneg(conic::LinExpr(lam0 + i, 1.0));

  const Mat o2x0 = o.cross() * x0;
  const Mat w2x0 = w.cross() * x0;
  const Mat o3 = o.tail();
  const Mat w3 = w.tail();

  const int d = 1 + as.nw() + as.s();
  const int b = prog.add_lmi_block(d);
  prog.add_lmi_constant(b, 0, 0, x0.dot(o.head() * x0));
  prog.add_lmi_term(b, mu_var, 0, 0, x0.dot(w.head() * x0));
  const Mat ps = symmetrized(p_shape);
  for (int i = 0; i < T; ++i) {
    prog.add_lmi_term(b, lam0 + i, 0, 0, -1.0);
    for (int r = 0; r < as.p(); ++r)
      for (int c = 0; c <= r; ++c)
        if (ps(r, c) != 0.0)
          prog.add_lmi_term(b, lam0 + i, 1 + i * as.p() + r, 1 + i * as.p() + c,
                            ps(r, c));
  }
  for (int i = 0; i < as.nw(); ++i) {
    if (o2x0(i, 0) != 0.0) prog.add_lmi_constant(b, 1 + i, 0, o2x0(i, 0));
    if (w2x0(i, 0) != 0.0) prog.add_lmi_term(b, mu_var, 1 + i, 0, w2x0(i, 0));
    for (int j = 0; j <= i; ++j) {
      if (o3(i, j) != 0.0) prog.add_lmi_constant(b, 1 + i, 1 + j, o3(i, j));
      if (w3(i, j) != 0.0) prog.add_lmi_term(b, mu_var, 1 + i, 1 + j, w3(i, j));
    }
  }
  for (int a = 0; a < as.s(); ++a)
    prog.add_lmi_constant(b, 1 + as.nw() + a, 1 + as.nw() + a, 1.0);

  add_response_columns(prog, b, as, 0, as.n(), x0, 1 + as.nw(), 0);
  add_response_columns(prog, b, as, as.n(), as.nd(), Mat(), 1 + as.nw(), 1);

  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + 1 + T))
    return infeasible_result("constant constraint row violated");

  SynthesisResult res;
  res.weight_regularised = w.regularisation() > 0.0;
  finalize(res, as, conic::solve(prog, opts.solver), mu_var, true);
  if (res.ok()) {
    res.multipliers.resize(T);
    for (int i = 0; i < T; ++i)
      res.multipliers[i] = std::max(0.0, res.report.x(lam0 + i));
  }
  return res;
}

SynthesisResult synth_adversarial_init(const LTVSystem& sys,
                                       const CostSpec& cost,
                                       const BenchmarkOperator& o,
                                       const RegretWeight& w,
                                       const SynthOptions& opts) {
  Assembly as = make_assembly(sys, cost, true);
  ConstraintSetup cs = setup_constraints(as, opts, nullptr, nullptr);

  const Mat wis = pd_inv_sqrt(w.matrix());
  const Mat t1 = symmetrized(wis * o.matrix() * wis);

  const int mu_var = as.lay.total;
  conic::ConicProgram prog(as.lay.total + 1 + cs.num_svars);
  prog.set_objective_term(mu_var, 1.0);

  const int d = as.nd() + as.s();
  const int b = prog.add_lmi_block(d);
  for (int i = 0; i < as.nd(); ++i) {
    prog.add_lmi_term(b, mu_var, i, i, 1.0);
    for (int j = 0; j <= i; ++j)
      if (t1(i, j) != 0.0) prog.add_lmi_constant(b, i, j, t1(i, j));
  }
  for (int a = 0; a < as.s(); ++a)
    prog.add_lmi_constant(b, as.nd() + a, as.nd() + a, 1.0);

  add_response_columns(prog, b, as, 0, as.nd(),
                       wis.isIdentity(1e-14) ? Mat() : wis, as.nd(), 0);

  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + 1))
    return infeasible_result("constant constraint row violated");

  SynthesisResult res;
  res.weight_regularised = w.regularisation() > 0.0;
  finalize(res, as, conic::solve(prog, opts.solver), mu_var, true);
  return res;
}

namespace {

// min sum_j t_j with [t_j, col_j'; col_j, I] psd per delta column: Frobenius
// cost of the weighted response, shared by synth_h2 and the non-causal
// benchmark.
void add_frobenius_epigraph(conic::ConicProgram& prog, const Assembly& as,
                            int t0) {
  for (int j = 0; j < as.nd(); ++j) {
    prog.set_objective_term(t0 + j, 1.0);
    const int b = prog.add_lmi_block(1 + as.s());
    prog.add_lmi_term(b, t0 + j, 0, 0, 1.0);
    for (int a = 0; a < as.s(); ++a) {
      prog.add_lmi_constant(b, 1 + a, 1 + a, 1.0);
      if (as.cg(a, j) != 0.0)
        prog.add_lmi_constant(b, 1 + a, 0, as.cg(a, j));
    }
    for (int k = 0; k <= as.T(); ++k) {
      if (j >= as.lay.width(k)) continue;
      for (int i = 0; i < as.m(); ++i) {
        const int ur = k * as.m() + i;
        for (const auto& [a, wv] : as.cf_cols[ur])
          prog.add_lmi_term(b, as.lay.var(k, i, j), 1 + a, 0, wv);
      }
    }
  }
}

}  // namespace

SynthesisResult synth_h2(const LTVSystem& sys, const CostSpec& cost,
                         const SynthOptions& opts) {
  Assembly as = make_assembly(sys, cost, true);
  ConstraintSetup cs = setup_constraints(as, opts, nullptr, nullptr);

  const int t0 = as.lay.total;
  conic::ConicProgram prog(as.lay.total + as.nd() + cs.num_svars);
  add_frobenius_epigraph(prog, as, t0);

  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + as.nd()))
    return infeasible_result("constant constraint row violated");

  SynthesisResult res;
  finalize(res, as, conic::solve(prog, opts.solver), -1, true);
  return res;
}

NoncausalBenchmarkResult constrained_noncausal_benchmark(
    const LTVSystem& sys, const CostSpec& cost, const ConstraintSpec& spec,
    const Mat& p_shape, const Vec& x0, const conic::SolveSettings& settings) {
  Assembly as = make_assembly(sys, cost, false);

  SynthOptions opts;
  opts.constraints = spec;
  opts.constraint_shape = p_shape;
  opts.constraint_x0 = x0;
  opts.solver = settings;
  ConstraintSetup cs = setup_constraints(as, opts, nullptr, nullptr);

  const int t0 = as.lay.total;
  conic::ConicProgram prog(as.lay.total + as.nd() + cs.num_svars);
  add_frobenius_epigraph(prog, as, t0);

  NoncausalBenchmarkResult res;
  if (cs.active &&
      !add_tightened_rows(prog, as, cs.rows, cs.p_inv_sqrt, cs.x0,
                          as.lay.total + as.nd())) {
    res.status = conic::Status::infeasible;
    res.report.status = conic::Status::infeasible;
    res.report.message = "constant constraint row violated";
    return res;
  }

  res.report = conic::solve(prog, settings);
  res.status = res.report.status;
  if (res.status != conic::Status::optimal &&
      res.status != conic::Status::near_optimal)
    return res;

  res.objective = res.report.objective;
  const Mat phi_u = extract_phi_u(as, res.report.x);
  Mat phi_x = as.ops.disturbance_map;
  phi_x.noalias() += as.ops.input_map * phi_u;
  res.response = SystemResponse::from_dense(phi_x, phi_u, as.n(), as.m(),
                                            as.p(), as.T(), false);
  const Mat stacked = res.response->stacked();
  const Mat quad = symmetrized(stacked.transpose() * cost.stacked() * stacked);
  res.benchmark = BenchmarkOperator(quad, as.n(), as.p(), as.T(), 1e-6);
  return res;
}

}  // namespace regsyn
