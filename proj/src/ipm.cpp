#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "regsyn/conic.hpp"

// Primal-dual path-following solver for the block-LMI form
//
//   min c'z   s.t.   K0_b + sum_i z_i Ki_b  PSD for every block b,
//
// using the HKM direction with a Mehrotra predictor-corrector. Equality
// constraints are removed up front by a QR nullspace step over the variables
// they touch; SOC rows are lowered to arrow LMI blocks (exact for these
// cone sizes). The Schur complement is assembled densely per block from the
// sparse coefficient entries, which is the right regime for the programs this
// library builds (block dims up to a few hundred, a few thousand variables).

namespace regsyn::conic {

namespace {

struct Entry {
  int r, c;  // r >= c, mirrored implicitly
  double v;
};

struct WorkBlock {
  int dim = 0;
  Mat k0;
  std::vector<int> vars;                   // touching z variables, sorted
  std::vector<std::vector<Entry>> coeffs;  // parallel to vars
};

// x = x_part + N z restricted to bound variables; unbound variables map
// one-to-one onto trailing z components.
struct VarMap {
  int num_x = 0, num_z = 0;
  Vec x_part;
  std::vector<int> direct;       // x var -> z index, -1 when bound
  std::vector<int> bound_list;   // local index -> x var
  std::vector<int> bound_local;  // x var -> local index, -1 when unbound
  Mat null_basis;                // |bound| x n_null

  Vec expand(const Vec& z) const {
    Vec x = x_part;
    for (int v = 0; v < num_x; ++v)
      if (direct[v] >= 0) x(v) += z(direct[v]);
    if (null_basis.cols() > 0) {
      const Vec zb = z.head(null_basis.cols());
      for (size_t l = 0; l < bound_list.size(); ++l)
        x(bound_list[l]) += null_basis.row(static_cast<int>(l)).dot(zb);
    }
    return x;
  }
};

struct WorkProblem {
  int num_z = 0;
  Vec c;
  double offset = 0.0;
  std::vector<WorkBlock> blocks;
};

void add_block_term(WorkBlock& wb, int var, const Entry& e) {
  auto it = std::lower_bound(wb.vars.begin(), wb.vars.end(), var);
  const auto pos = static_cast<size_t>(it - wb.vars.begin());
  if (it == wb.vars.end() || *it != var) {
    wb.vars.insert(it, var);
    wb.coeffs.emplace(wb.coeffs.begin() + static_cast<long>(pos));
  }
  wb.coeffs[pos].push_back(e);
}

// Collapses duplicate entries and drops exact zeros.
void compress_block(WorkBlock& wb) {
  for (auto& list : wb.coeffs) {
    std::sort(list.begin(), list.end(), [](const Entry& a, const Entry& b) {
      return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    std::vector<Entry> out;
    for (const auto& e : list) {
      if (!out.empty() && out.back().r == e.r && out.back().c == e.c)
        out.back().v += e.v;
      else
        out.push_back(e);
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const Entry& e) { return e.v == 0.0; }),
              out.end());
    list = std::move(out);
  }
  // drop variables left without entries
  for (size_t i = wb.vars.size(); i-- > 0;) {
    if (wb.coeffs[i].empty()) {
      wb.vars.erase(wb.vars.begin() + static_cast<long>(i));
      wb.coeffs.erase(wb.coeffs.begin() + static_cast<long>(i));
    }
  }
}

double dot_entries(const std::vector<Entry>& entries, const Mat& dense) {
  // tr(F * dense) with F given by mirrored lower entries
  double s = 0.0;
  for (const auto& e : entries) {
    s += e.v * dense(e.c, e.r);
    if (e.r != e.c) s += e.v * dense(e.r, e.c);
  }
  return s;
}

// largest step alpha <= cap with P + alpha dP staying PSD
double max_step(const Eigen::LLT<Mat>& chol, const Mat& dp, double cap) {
  const Mat l = chol.matrixL();
  Mat w = l.triangularView<Eigen::Lower>().solve(dp);
  w = l.triangularView<Eigen::Lower>().solve(w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()),
                                        Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return cap;
  return std::min(cap, -1.0 / lmin);
}

struct IpmOutcome {
  Status status = Status::numerical_failure;
  Vec z;
  double stat_res = 0.0;   // stationarity defect
  double dual_res = 0.0;   // slack defect
  double gap = 0.0;
  int iterations = 0;
  double objective = 0.0;  // c'z + offset
};

IpmOutcome run_ipm(const WorkProblem& wp, const SolveSettings& st) {
  const int k = wp.num_z;
  const int nb = static_cast<int>(wp.blocks.size());
  IpmOutcome out;
  out.z = Vec::Zero(k);

  int ntotal = 0;
  for (const auto& b : wp.blocks) ntotal += b.dim;
  if (ntotal == 0) {  // no cones: any z works, pick 0
    out.status = Status::optimal;
    out.objective = wp.offset;
    return out;
  }

  std::vector<Mat> X(nb), S(nb), Sinv(nb), Rres(nb);
  std::vector<Eigen::LLT<Mat>> cholS(nb), cholX(nb);
  for (int b = 0; b < nb; ++b) {
    const auto& blk = wp.blocks[b];
    double scale = 1.0 + blk.k0.norm();
    for (const auto& list : blk.coeffs)
      for (const auto& e : list) scale = std::max(scale, 1.0 + std::abs(e.v));
    X[b] = scale * Mat::Identity(blk.dim, blk.dim);
    S[b] = scale * Mat::Identity(blk.dim, blk.dim);
  }

  Vec z = Vec::Zero(k);
  Mat schur(k, k);
  Vec avec(k), gvec(k), hvec(k), qvec(k), rho(k);
  std::vector<Mat> dXa(nb), dSa(nb), dX(nb), dS(nb), Hb(nb), Gb(nb);

  const double cnorm = 1.0 + wp.c.lpNorm<Eigen::Infinity>();
  double best_metric = std::numeric_limits<double>::infinity();
  Vec best_z = z;
  double best_stat = 0, best_dres = 0, best_gap = 0, best_obj = wp.offset;
  int stall = 0;

  auto solve_schur = [&](const Vec& rhs, Vec& dz) -> bool {
    Eigen::LLT<Mat> llt(schur);
    if (llt.info() == Eigen::Success) {
      dz = llt.solve(rhs);
      if (dz.allFinite()) return true;
    }
    double ridge = 1e-12 * (1.0 + schur.diagonal().maxCoeff()) / k;
    for (int attempt = 0; attempt < 8; ++attempt, ridge *= 100.0) {
      Mat reg = schur;
      reg.diagonal().array() += ridge;
      Eigen::LLT<Mat> llt2(reg);
      if (llt2.info() != Eigen::Success) continue;
      dz = llt2.solve(rhs);
      if (dz.allFinite()) return true;
    }
    return false;
  };

  for (int it = 1; it <= st.max_iterations; ++it) {
    // residuals and factorizations
    double dres = 0.0;
    bool factor_ok = true;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      Mat f = blk.k0;
      for (size_t li = 0; li < blk.vars.size(); ++li)
        for (const auto& e : blk.coeffs[li]) {
          f(e.r, e.c) += e.v * z(blk.vars[li]);
          if (e.r != e.c) f(e.c, e.r) += e.v * z(blk.vars[li]);
        }
      Rres[b] = f - S[b];
      dres = std::max(dres, Rres[b].norm() / (1.0 + blk.k0.norm()));
      cholS[b].compute(S[b]);
      cholX[b].compute(X[b]);
      if (cholS[b].info() != Eigen::Success ||
          cholX[b].info() != Eigen::Success) {
        factor_ok = false;
        break;
      }
      Sinv[b] = cholS[b].solve(Mat::Identity(blk.dim, blk.dim));
    }
    if (!factor_ok) break;

    double gap = 0.0;
    for (int b = 0; b < nb; ++b) gap += (X[b].cwiseProduct(S[b])).sum();
    const double mu = gap / ntotal;

    // stationarity defect rho_i = c_i - sum_b <Ki_b, X_b>
    gvec.setZero();
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      for (size_t li = 0; li < blk.vars.size(); ++li)
        gvec(blk.vars[li]) += dot_entries(blk.coeffs[li], X[b]);
    }
    rho = wp.c - gvec;

    const double obj_p = wp.c.dot(z) + wp.offset;
    double obj_d = wp.offset;
    for (int b = 0; b < nb; ++b)
      obj_d -= (wp.blocks[b].k0.cwiseProduct(X[b])).sum();

    const double stat_res = rho.lpNorm<Eigen::Infinity>() / cnorm;
    const double rel_gap =
        std::abs(gap) / (1.0 + std::abs(obj_p) + std::abs(obj_d));
    const double metric = std::max({stat_res, dres, rel_gap});
    if (metric < best_metric) {
      best_metric = metric;
      best_z = z;
      best_stat = stat_res;
      best_dres = dres;
      best_gap = rel_gap;
      best_obj = obj_p;
      out.iterations = it;
    }
    if (st.verbose)
      std::printf("  ipm %3d  obj % .6e  gap %.2e  stat %.2e  dres %.2e\n", it,
                  obj_p, rel_gap, stat_res, dres);

    if (stat_res <= st.feas_tol && dres <= st.feas_tol &&
        rel_gap <= st.gap_tol) {
      out.status = Status::optimal;
      break;
    }
    if (obj_p < -1e13 * (1.0 + std::abs(wp.offset)) && dres <= 1e-6) {
      out.status = Status::unbounded;
      break;
    }

    // Schur complement M_ij = sum_b tr(Ki X Kj S^-1) plus the scalar
    // assists a_i = tr(Ki S^-1), h_i = tr(Ki X R S^-1)
    schur.setZero();
    avec.setZero();
    hvec.setZero();
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      const int d = blk.dim;
      const bool has_res = Rres[b].norm() > 1e-14 * (1.0 + blk.k0.norm());
      if (has_res) Hb[b] = X[b] * Rres[b] * Sinv[b];
      for (size_t li = 0; li < blk.vars.size(); ++li) {
        const int vi = blk.vars[li];
        avec(vi) += dot_entries(blk.coeffs[li], Sinv[b]);
        if (has_res) hvec(vi) += dot_entries(blk.coeffs[li], Hb[b]);
        // Bi = S^-1 Ki X, built from the sparse rows of Ki
        Mat fx = Mat::Zero(d, d);
        for (const auto& e : blk.coeffs[li]) {
          fx.row(e.r) += e.v * X[b].row(e.c);
          if (e.r != e.c) fx.row(e.c) += e.v * X[b].row(e.r);
        }
        const Mat bi = Sinv[b] * fx;
        for (size_t lj = 0; lj <= li; ++lj) {
          const int vj = blk.vars[lj];
          const double mij = dot_entries(blk.coeffs[lj], bi);
          if (vi >= vj)
            schur(vi, vj) += mij;
          else
            schur(vj, vi) += mij;
        }
      }
    }
    schur = schur.selfadjointView<Eigen::Lower>();

    // predictor (affine direction, target 0)
    Vec dz;
    if (!solve_schur(Vec(-wp.c - hvec), dz)) break;
    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      Mat ds = Rres[b];
      for (size_t li = 0; li < blk.vars.size(); ++li)
        for (const auto& e : blk.coeffs[li]) {
          ds(e.r, e.c) += e.v * dz(blk.vars[li]);
          if (e.r != e.c) ds(e.c, e.r) += e.v * dz(blk.vars[li]);
        }
      dSa[b] = ds;
      Mat dx = -X[b] - X[b] * ds * Sinv[b];
      dXa[b] = 0.5 * (dx + dx.transpose());
      ap = std::min(ap, max_step(cholX[b], dXa[b], 1.0));
      ad = std::min(ad, max_step(cholS[b], dSa[b], 1.0));
    }
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff +=
          ((X[b] + ap * dXa[b]).cwiseProduct(S[b] + ad * dSa[b])).sum();
    mu_aff = std::max(0.0, mu_aff / ntotal);
    double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);
    sigma = std::clamp(sigma, 1e-8, 1.0);
    const double nu = sigma * mu;

    // corrector
    qvec.setZero();
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      Gb[b] = dXa[b] * dSa[b] * Sinv[b];
      for (size_t li = 0; li < blk.vars.size(); ++li)
        qvec(blk.vars[li]) += dot_entries(blk.coeffs[li], Gb[b]);
    }
    if (!solve_schur(Vec(nu * avec - wp.c - hvec - qvec), dz)) break;

    double ap2 = 1.0, ad2 = 1.0;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = wp.blocks[b];
      Mat ds = Rres[b];
      for (size_t li = 0; li < blk.vars.size(); ++li)
        for (const auto& e : blk.coeffs[li]) {
          ds(e.r, e.c) += e.v * dz(blk.vars[li]);
          if (e.r != e.c) ds(e.c, e.r) += e.v * dz(blk.vars[li]);
        }
      dS[b] = ds;
      Mat dx = nu * Sinv[b] - X[b] - Gb[b] - X[b] * ds * Sinv[b];
      dX[b] = 0.5 * (dx + dx.transpose());
      ap2 = std::min(ap2, 0.98 * max_step(cholX[b], dX[b], 1.0 / 0.98));
      ad2 = std::min(ad2, 0.98 * max_step(cholS[b], dS[b], 1.0 / 0.98));
    }
    ap2 = std::min(ap2, 1.0);
    ad2 = std::min(ad2, 1.0);

    z += ad2 * dz;
    for (int b = 0; b < nb; ++b) {
      X[b] = 0.5 * ((X[b] + ap2 * dX[b]) +
                    (X[b] + ap2 * dX[b]).transpose().eval());
      S[b] = 0.5 * ((S[b] + ad2 * dS[b]) +
                    (S[b] + ad2 * dS[b]).transpose().eval());
    }

    if (ap2 < 1e-3 && ad2 < 1e-3)
      ++stall;
    else
      stall = 0;
    if (stall >= 4) break;
  }

  out.z = best_z;
  out.stat_res = best_stat;
  out.dual_res = best_dres;
  out.gap = best_gap;
  out.objective = best_obj;
  if (out.status == Status::optimal || out.status == Status::unbounded)
    return out;
  const double near = std::max({1e-6, 50 * st.feas_tol, 50 * st.gap_tol});
  if (best_metric <= near)
    out.status = Status::near_optimal;
  else
    out.status = Status::numerical_failure;
  return out;
}

// min s with K0_b + sum z Ki_b + s I PSD; classifies feasibility of the
// block system when the main solve gives up.
double phase1_infeasibility(const WorkProblem& wp, const SolveSettings& st,
                            bool& reliable) {
  WorkProblem ph;
  ph.num_z = wp.num_z + 1;
  ph.c = Vec::Zero(ph.num_z);
  ph.c(wp.num_z) = 1.0;
  ph.blocks = wp.blocks;
  const int svar = wp.num_z;
  for (auto& blk : ph.blocks) {
    blk.vars.push_back(svar);
    std::vector<Entry> eye;
    for (int i = 0; i < blk.dim; ++i) eye.push_back({i, i, 1.0});
    blk.coeffs.push_back(std::move(eye));
  }
  // keep the objective bounded: s >= -1 as an extra 1x1 block
  WorkBlock floor_blk;
  floor_blk.dim = 1;
  floor_blk.k0 = Mat::Ones(1, 1);
  floor_blk.vars = {svar};
  floor_blk.coeffs = {{Entry{0, 0, 1.0}}};
  ph.blocks.push_back(floor_blk);

  SolveSettings st1 = st;
  st1.feas_tol = std::max(st.feas_tol, 1e-9);
  st1.gap_tol = std::max(st.gap_tol, 1e-9);
  const auto res = run_ipm(ph, st1);
  reliable =
      res.status == Status::optimal || res.status == Status::near_optimal;
  return reliable ? res.z(svar) : 0.0;
}

}  // namespace

SolveReport solve(const ConicProgram& prog, const SolveSettings& settings) {
  SolveReport report;
  report.x = Vec::Zero(prog.num_vars());

  // ---- lower the program to pure blocks ----
  std::vector<WorkBlock> raw;
  raw.reserve(prog.blocks().size() + prog.socs().size());
  for (const auto& b : prog.blocks()) {
    WorkBlock wb;
    wb.dim = b.dim;
    wb.k0 = Mat::Zero(b.dim, b.dim);
    for (const auto& e : b.constant) {
      wb.k0(e.row, e.col) += e.value;
      if (e.row != e.col) wb.k0(e.col, e.row) += e.value;
    }
    for (const auto& [var, e] : b.terms)
      add_block_term(wb, var, {e.row, e.col, e.value});
    raw.push_back(std::move(wb));
  }
  for (const auto& soc : prog.socs()) {
    // || v || <= t  as the arrow matrix [t I, v; v', t]
    const int r = static_cast<int>(soc.norm_part.size());
    WorkBlock wb;
    wb.dim = r + 1;
    wb.k0 = Mat::Zero(r + 1, r + 1);
    for (int i = 0; i < r; ++i) {
      wb.k0(r, i) = soc.norm_part[i].constant;
      wb.k0(i, r) = soc.norm_part[i].constant;
      wb.k0(i, i) = soc.bound.constant;
    }
    wb.k0(r, r) = soc.bound.constant;
    for (int i = 0; i < r; ++i)
      for (const auto& [var, coeff] : soc.norm_part[i].terms)
        add_block_term(wb, var, {r, i, coeff});
    for (const auto& [var, coeff] : soc.bound.terms) {
      for (int i = 0; i < r; ++i) add_block_term(wb, var, {i, i, coeff});
      add_block_term(wb, var, {r, r, coeff});
    }
    raw.push_back(std::move(wb));
  }
  for (auto& wb : raw) compress_block(wb);

  // ---- eliminate equalities over the variables they touch ----
  VarMap vm;
  vm.num_x = prog.num_vars();
  vm.x_part = Vec::Zero(vm.num_x);
  vm.direct.assign(vm.num_x, -1);
  vm.bound_local.assign(vm.num_x, -1);

  const auto& eqs = prog.equalities();
  if (!eqs.empty()) {
    for (const auto& eq : eqs)
      for (const auto& [var, coeff] : eq.lhs.terms)
        if (coeff != 0.0 && vm.bound_local[var] < 0) {
          vm.bound_local[var] = static_cast<int>(vm.bound_list.size());
          vm.bound_list.push_back(var);
        }
    const int nbound = static_cast<int>(vm.bound_list.size());
    Mat e = Mat::Zero(static_cast<int>(eqs.size()), nbound);
    Vec d(static_cast<int>(eqs.size()));
    for (size_t r = 0; r < eqs.size(); ++r) {
      d(static_cast<int>(r)) = eqs[r].rhs - eqs[r].lhs.constant;
      for (const auto& [var, coeff] : eqs[r].lhs.terms)
        e(static_cast<int>(r), vm.bound_local[var]) += coeff;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(e);
    const Vec sol = qr.solve(d);
    if ((e * sol - d).lpNorm<Eigen::Infinity>() >
        1e-8 * (1.0 + d.lpNorm<Eigen::Infinity>())) {
      report.status = Status::infeasible;
      report.message = "inconsistent equality constraints";
      return report;
    }
    for (int l = 0; l < nbound; ++l) vm.x_part(vm.bound_list[l]) = sol(l);

    Eigen::ColPivHouseholderQR<Mat> qrt(e.transpose());
    const int rank = static_cast<int>(qrt.rank());
    const Mat q = qrt.householderQ();
    vm.null_basis = q.rightCols(nbound - rank);
  }
  int zi = static_cast<int>(vm.null_basis.cols());
  for (int v = 0; v < vm.num_x; ++v)
    if (vm.bound_local[v] < 0) vm.direct[v] = zi++;
  vm.num_z = zi;

  // ---- coefficients in z space ----
  WorkProblem wp;
  wp.num_z = vm.num_z;
  wp.c = Vec::Zero(vm.num_z);
  wp.offset = prog.objective().dot(vm.x_part);
  for (int v = 0; v < vm.num_x; ++v) {
    const double cv = prog.objective()(v);
    if (cv == 0.0) continue;
    if (vm.direct[v] >= 0)
      wp.c(vm.direct[v]) += cv;
    else
      wp.c.head(vm.null_basis.cols()) +=
          cv * vm.null_basis.row(vm.bound_local[v]).transpose();
  }
  for (auto& rb : raw) {
    WorkBlock wb;
    wb.dim = rb.dim;
    wb.k0 = rb.k0;
    for (size_t li = 0; li < rb.vars.size(); ++li) {
      const int v = rb.vars[li];
      if (vm.direct[v] >= 0) {
        for (const auto& e : rb.coeffs[li]) add_block_term(wb, vm.direct[v], e);
      } else {
        const int local = vm.bound_local[v];
        const double xp = vm.x_part(v);
        for (const auto& e : rb.coeffs[li]) {
          wb.k0(e.r, e.c) += xp * e.v;
          if (e.r != e.c) wb.k0(e.c, e.r) += xp * e.v;
          for (int t = 0; t < vm.null_basis.cols(); ++t) {
            const double w = vm.null_basis(local, t);
            if (w != 0.0) add_block_term(wb, t, {e.r, e.c, w * e.v});
          }
        }
      }
    }
    compress_block(wb);
    wp.blocks.push_back(std::move(wb));
  }

  // ---- pin variables without cone presence ----
  std::vector<char> present(vm.num_z, 0);
  for (const auto& b : wp.blocks)
    for (int v : b.vars) present[v] = 1;
  std::vector<int> active_of(vm.num_z, -1);
  int nact = 0;
  const double cscale = 1.0 + wp.c.lpNorm<Eigen::Infinity>();
  for (int v = 0; v < vm.num_z; ++v) {
    if (present[v]) {
      active_of[v] = nact++;
    } else if (std::abs(wp.c(v)) > 1e-12 * cscale) {
      report.status = Status::unbounded;
      report.message = "objective direction unconstrained by every cone";
      return report;
    }
  }

  WorkProblem act;
  act.num_z = nact;
  act.offset = wp.offset;
  act.c = Vec::Zero(nact);

  // per-variable scaling toward unit coefficient size
  Vec scale = Vec::Ones(std::max(nact, 1));
  for (const auto& b : wp.blocks)
    for (size_t li = 0; li < b.vars.size(); ++li) {
      const int v = active_of[b.vars[li]];
      for (const auto& e : b.coeffs[li])
        scale(v) = std::max(scale(v), std::abs(e.v));
    }
  for (const auto& b : wp.blocks) {
    WorkBlock wb;
    wb.dim = b.dim;
    wb.k0 = b.k0;
    wb.vars.reserve(b.vars.size());
    for (size_t li = 0; li < b.vars.size(); ++li) {
      const int v = active_of[b.vars[li]];
      wb.vars.push_back(v);
      auto list = b.coeffs[li];
      for (auto& e : list) e.v /= scale(v);
      wb.coeffs.push_back(std::move(list));
    }
    // re-sort by the remapped variable ids
    WorkBlock sorted;
    sorted.dim = wb.dim;
    sorted.k0 = wb.k0;
    std::vector<size_t> order(wb.vars.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t c) {
      return wb.vars[a] < wb.vars[c];
    });
    for (size_t i : order) {
      sorted.vars.push_back(wb.vars[i]);
      sorted.coeffs.push_back(std::move(wb.coeffs[i]));
    }
    act.blocks.push_back(std::move(sorted));
  }
  for (int v = 0; v < vm.num_z; ++v)
    if (active_of[v] >= 0) act.c(active_of[v]) = wp.c(v) / scale(active_of[v]);

  // ---- run, classify, map back ----
  auto outcome = run_ipm(act, settings);
  if (outcome.status == Status::numerical_failure && !act.blocks.empty()) {
    bool reliable = false;
    const double s = phase1_infeasibility(act, settings, reliable);
    if (reliable && s > std::max(1e-7, 10 * settings.feas_tol))
      outcome.status = Status::infeasible;
  }

  Vec zfull = Vec::Zero(vm.num_z);
  for (int v = 0; v < vm.num_z; ++v)
    if (active_of[v] >= 0) zfull(v) = outcome.z(active_of[v]) / scale(active_of[v]);
  report.x = vm.expand(zfull);
  report.status = outcome.status;
  report.objective = prog.objective().dot(report.x);
  report.dual_residual = outcome.dual_res;
  report.gap = outcome.gap;
  report.iterations = outcome.iterations;

  double eq_res = 0.0;
  for (const auto& eq : prog.equalities()) {
    double v = eq.lhs.constant - eq.rhs;
    for (const auto& [var, coeff] : eq.lhs.terms) v += coeff * report.x(var);
    eq_res = std::max(eq_res, std::abs(v));
  }
  report.primal_residual = std::max(eq_res, outcome.stat_res);
  if (report.message.empty()) report.message = to_string(report.status);
  return report;
}

}  // namespace regsyn::conic
