#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "oracles.hpp"
#include "regsyn/conic.hpp"

using namespace regsyn;
using conic::ConicProgram;
using conic::LinExpr;
using conic::Status;

TEST_CASE("scalar bound is attained") {
  // min x s.t. x - 2 >= 0
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  LinExpr e(0, 1.0);
  e.constant = -2.0;
  prog.add_nonneg(e);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.x(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep.objective == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("norm of a constant vector via second order cone") {
  // min t s.t. ||a|| <= t with a fixed
  const Vec a = (Vec(3) << 3.0, -4.0, 12.0).finished();  // norm 13
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  std::vector<LinExpr> norm_part;
  for (int i = 0; i < 3; ++i) {
    LinExpr row;
    row.constant = a(i);
    norm_part.push_back(row);
  }
  prog.add_soc(norm_part, LinExpr(0, 1.0));
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.objective == doctest::Approx(13.0).epsilon(1e-6));
}

TEST_CASE("projection onto a line through a second order cone") {
  // min t s.t. ||(x - 3, x + 1)|| <= t, minimised at x = 1 with t = 2 sqrt 2
  ConicProgram prog(2);  // x, t
  prog.set_objective_term(1, 1.0);
  LinExpr r0(0, 1.0);
  r0.constant = -3.0;
  LinExpr r1(0, 1.0);
  r1.constant = 1.0;
  prog.add_soc({r0, r1}, LinExpr(1, 1.0));
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rep.objective == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("least norm point on a hyperplane") {
  // min t s.t. ||x|| <= t, sum x = 1 in R^3; optimum x = (1/3,1/3,1/3)
  ConicProgram prog(4);  // x0 x1 x2 t
  prog.set_objective_term(3, 1.0);
  std::vector<LinExpr> rows;
  for (int i = 0; i < 3; ++i) rows.emplace_back(i, 1.0);
  prog.add_soc(rows, LinExpr(3, 1.0));
  prog.add_equality(LinExpr(0, 1.0).add(1, 1.0).add(2, 1.0), 1.0);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  for (int i = 0; i < 3; ++i)
    CHECK(rep.x(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
  CHECK(rep.objective == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-6));
  CHECK(rep.primal_residual <= 1e-7);
}

TEST_CASE("largest eigenvalue as a semidefinite program") {
  // min t s.t. t I - A psd
  std::mt19937_64 rng(77);
  const Mat a = oracle::random_spd(rng, 4, 2.0);
  const double lmax =
      Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().maxCoeff();

  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  const int b = prog.add_lmi_block(4);
  for (int i = 0; i < 4; ++i) {
    prog.add_lmi_term(b, 0, i, i, 1.0);
    for (int j = 0; j <= i; ++j) prog.add_lmi_constant(b, i, j, -a(i, j));
  }
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.objective == doctest::Approx(lmax).epsilon(1e-7));
}

TEST_CASE("equality elimination reaches variables inside a cone") {
  // min t s.t. t >= x1, t >= x2, x1 + x2 = 4 gives t = 2
  ConicProgram prog(3);  // x1 x2 t
  prog.set_objective_term(2, 1.0);
  LinExpr g1(2, 1.0);
  g1.add(0, -1.0);
  prog.add_nonneg(g1);
  LinExpr g2(2, 1.0);
  g2.add(1, -1.0);
  prog.add_nonneg(g2);
  // keep x1, x2 bounded below so the program has a bounded optimum
  prog.add_nonneg(LinExpr(0, 1.0));
  prog.add_nonneg(LinExpr(1, 1.0));
  prog.add_equality(LinExpr(0, 1.0).add(1, 1.0), 4.0);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep.x(0) + rep.x(1) == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("inconsistent equalities are rejected") {
  ConicProgram prog(2);
  prog.add_nonneg(LinExpr(0, 1.0));
  prog.add_equality(LinExpr(0, 1.0).add(1, 1.0), 1.0);
  prog.add_equality(LinExpr(0, 1.0).add(1, 1.0), 2.0);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::infeasible);
}

TEST_CASE("conflicting scalar bounds are classified infeasible") {
  // x >= 1 and x <= -1
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  LinExpr lo(0, 1.0);
  lo.constant = -1.0;
  prog.add_nonneg(lo);  // x - 1 >= 0
  LinExpr hi(0, -1.0);
  hi.constant = -1.0;
  prog.add_nonneg(hi);  // -x - 1 >= 0
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::infeasible);
}

TEST_CASE("free objective direction is classified unbounded") {
  ConicProgram prog(2);
  prog.set_objective_term(0, 1.0);
  prog.add_nonneg(LinExpr(1, 1.0));  // cone never sees x0
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::unbounded);
}

TEST_CASE("descent ray inside a cone is classified unbounded") {
  // min x s.t. 5 - x >= 0
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  LinExpr e(0, -1.0);
  e.constant = 5.0;
  prog.add_nonneg(e);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::unbounded);
}

TEST_CASE("validation flags a perturbed solution") {
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  LinExpr e(0, 1.0);
  e.constant = -2.0;
  prog.add_nonneg(e);
  prog.add_equality(LinExpr(0, 1.0), 2.0);

  Vec good(1);
  good << 2.0;
  CHECK(conic::max_violation(conic::validate_solution(prog, good)) <= 1e-12);

  Vec bad(1);
  bad << 1.5;
  const auto checks = conic::validate_solution(prog, bad);
  CHECK(conic::max_violation(checks) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("tolerance levels agree on the optimum") {
  std::mt19937_64 rng(3);
  const Mat a = oracle::random_spd(rng, 5, 1.5);
  ConicProgram prog(1);
  prog.set_objective_term(0, 1.0);
  const int b = prog.add_lmi_block(5);
  for (int i = 0; i < 5; ++i) {
    prog.add_lmi_term(b, 0, i, i, 1.0);
    for (int j = 0; j <= i; ++j) prog.add_lmi_constant(b, i, j, -a(i, j));
  }
  conic::SolveSettings loose;
  loose.feas_tol = 1e-6;
  loose.gap_tol = 1e-6;
  conic::SolveSettings tight;
  tight.feas_tol = 1e-8;
  tight.gap_tol = 1e-8;
  const auto r1 = conic::solve(prog, loose);
  const auto r2 = conic::solve(prog, tight);
  REQUIRE(r1.status == Status::optimal);
  REQUIRE(r2.status == Status::optimal);
  CHECK(std::abs(r1.objective - r2.objective) <=
        1e-5 * (1.0 + std::abs(r2.objective)));
}

TEST_CASE("coupled lmi blocks with a trace equality") {
  // min tr(diag(x)) s.t. diag(x) >= A (elementwise blocks), sum x = fixed
  // simple two block coupling: min x0 + x1 with [x0 1; 1 x1] psd
  // optimum on x0 x1 = 1 boundary at x0 = x1 = 1
  ConicProgram prog(2);
  prog.set_objective_term(0, 1.0);
  prog.set_objective_term(1, 1.0);
  const int b = prog.add_lmi_block(2);
  prog.add_lmi_term(b, 0, 0, 0, 1.0);
  prog.add_lmi_term(b, 1, 1, 1, 1.0);
  prog.add_lmi_constant(b, 1, 0, 1.0);
  const auto rep = conic::solve(prog);
  CHECK(rep.status == Status::optimal);
  CHECK(rep.objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep.x(0) * rep.x(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("program dump is valid json with full structure") {
  ConicProgram prog(2);
  prog.set_objective_term(1, 1.0);
  const int b = prog.add_lmi_block(2);
  prog.add_lmi_term(b, 0, 1, 0, 1.0);
  prog.add_lmi_constant(b, 0, 0, 1.0);
  prog.add_equality(LinExpr(0, 1.0).add(1, 2.0), 3.0);
  prog.add_soc({LinExpr(0, 1.0)}, LinExpr(1, 1.0));

  std::ostringstream out;
  conic::dump_program(prog, out);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j.at("num_vars").get<int>() == 2);
  CHECK(j.at("lmi_blocks").size() == 1);
  CHECK(j.at("equalities").size() == 1);
  CHECK(j.at("socs").size() == 1);
  CHECK(j.at("objective").size() == 2);
}
