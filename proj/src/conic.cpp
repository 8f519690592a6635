#include "regsyn/conic.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace regsyn::conic {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::near_optimal: return "near_optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

ConicProgram::ConicProgram(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 1)
    throw std::invalid_argument("ConicProgram: need at least one variable");
  objective_ = Vec::Zero(num_vars);
}

void ConicProgram::check_var(int var) const {
  if (var < 0 || var >= num_vars_)
    throw std::invalid_argument("ConicProgram: variable index " +
                                std::to_string(var) + " out of range");
}

void ConicProgram::set_objective_term(int var, double coeff) {
  check_var(var);
  objective_(var) = coeff;
}

int ConicProgram::add_lmi_block(int dim) {
  if (dim < 1) throw std::invalid_argument("ConicProgram: LMI dim < 1");
  blocks_.push_back(Block{dim, {}, {}});
  return static_cast<int>(blocks_.size()) - 1;
}

namespace {

LmiEntry make_entry(int dim, int row, int col, double value) {
  if (row < 0 || col < 0 || row >= dim || col >= dim)
    throw std::invalid_argument("ConicProgram: LMI entry out of range");
  if (row < col) std::swap(row, col);
  return LmiEntry{row, col, value};
}

}  // namespace

void ConicProgram::add_lmi_constant(int block, int row, int col, double value) {
  auto& b = blocks_.at(block);
  b.constant.push_back(make_entry(b.dim, row, col, value));
}

void ConicProgram::add_lmi_term(int block, int var, int row, int col,
                                double value) {
  check_var(var);
  auto& b = blocks_.at(block);
  b.terms.emplace_back(var, make_entry(b.dim, row, col, value));
}

void ConicProgram::add_equality(LinExpr lhs, double rhs) {
  for (const auto& [var, coeff] : lhs.terms) {
    check_var(var);
    (void)coeff;
  }
  equalities_.push_back(Equality{std::move(lhs), rhs});
}

int ConicProgram::add_nonneg(LinExpr expr) {
  const int blk = add_lmi_block(1);
  add_lmi_constant(blk, 0, 0, expr.constant);
  for (const auto& [var, coeff] : expr.terms) add_lmi_term(blk, var, 0, 0, coeff);
  return blk;
}

void ConicProgram::add_soc(std::vector<LinExpr> norm_part, LinExpr bound) {
  if (norm_part.empty())
    throw std::invalid_argument("ConicProgram: empty SOC norm part");
  for (const auto& e : norm_part)
    for (const auto& [var, coeff] : e.terms) {
      check_var(var);
      (void)coeff;
    }
  for (const auto& [var, coeff] : bound.terms) {
    check_var(var);
    (void)coeff;
  }
  socs_.push_back(Soc{std::move(norm_part), std::move(bound)});
}

namespace {

double eval(const LinExpr& e, const Vec& x) {
  double v = e.constant;
  for (const auto& [var, coeff] : e.terms) v += coeff * x(var);
  return v;
}

}  // namespace

std::vector<ConstraintCheck> validate_solution(const ConicProgram& prog,
                                               const Vec& x) {
  if (x.size() != prog.num_vars())
    throw std::invalid_argument("validate_solution: x has wrong size");
  std::vector<ConstraintCheck> out;

  int idx = 0;
  for (const auto& eq : prog.equalities()) {
    out.push_back({ConstraintCheck::Kind::equality, idx++,
                   std::abs(eval(eq.lhs, x) - eq.rhs)});
  }

  idx = 0;
  for (const auto& b : prog.blocks()) {
    Mat s = Mat::Zero(b.dim, b.dim);
    for (const auto& e : b.constant) {
      s(e.row, e.col) += e.value;
      if (e.row != e.col) s(e.col, e.row) += e.value;
    }
    for (const auto& [var, e] : b.terms) {
      s(e.row, e.col) += e.value * x(var);
      if (e.row != e.col) s(e.col, e.row) += e.value * x(var);
    }
    out.push_back({ConstraintCheck::Kind::lmi, idx++,
                   std::max(0.0, -min_eigenvalue(s))});
  }

  idx = 0;
  for (const auto& soc : prog.socs()) {
    double norm2 = 0.0;
    for (const auto& e : soc.norm_part) {
      const double v = eval(e, x);
      norm2 += v * v;
    }
    const double bound = eval(soc.bound, x);
    out.push_back({ConstraintCheck::Kind::soc, idx++,
                   std::max(0.0, std::sqrt(norm2) - bound)});
  }
  return out;
}

double max_violation(const std::vector<ConstraintCheck>& checks) {
  double worst = 0.0;
  for (const auto& c : checks) worst = std::max(worst, c.violation);
  return worst;
}

void dump_program(const ConicProgram& prog, std::ostream& out) {
  nlohmann::json j;
  j["num_vars"] = prog.num_vars();
  j["objective"] = std::vector<double>(
      prog.objective().data(), prog.objective().data() + prog.num_vars());

  auto expr_json = [](const LinExpr& e) {
    nlohmann::json je;
    je["constant"] = e.constant;
    for (const auto& [var, coeff] : e.terms)
      je["terms"].push_back({{"var", var}, {"coeff", coeff}});
    return je;
  };

  for (const auto& eq : prog.equalities()) {
    nlohmann::json je = expr_json(eq.lhs);
    je["rhs"] = eq.rhs;
    j["equalities"].push_back(je);
  }
  for (const auto& b : prog.blocks()) {
    nlohmann::json jb;
    jb["dim"] = b.dim;
    for (const auto& e : b.constant)
      jb["constant"].push_back({{"row", e.row}, {"col", e.col}, {"value", e.value}});
    for (const auto& [var, e] : b.terms)
      jb["terms"].push_back(
          {{"var", var}, {"row", e.row}, {"col", e.col}, {"value", e.value}});
    j["lmi_blocks"].push_back(jb);
  }
  for (const auto& soc : prog.socs()) {
    nlohmann::json js;
    for (const auto& e : soc.norm_part) js["norm_part"].push_back(expr_json(e));
    js["bound"] = expr_json(soc.bound);
    j["socs"].push_back(js);
  }
  out << j.dump(2) << "\n";
}

}  // namespace regsyn::conic
