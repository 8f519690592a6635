#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "regsyn/types.hpp"

namespace regsyn::conic {

enum class Status { optimal, near_optimal, infeasible, unbounded, numerical_failure };

const char* to_string(Status s);

struct SolveSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 150;
  bool verbose = false;
};

struct SolveReport {
  Status status = Status::numerical_failure;
  Vec x;
  double objective = 0.0;
  double primal_residual = 0.0;  // equality defect at x
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  std::string message;
};

// Affine expression sum_i coeff_i * x_i + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(int var, double coeff) { terms.emplace_back(var, coeff); }
  LinExpr& add(int var, double coeff) {
    terms.emplace_back(var, coeff);
    return *this;
  }
};

// Entry of a symmetric matrix, stored once with row >= col and mirrored
// implicitly.
struct LmiEntry {
  int row = 0, col = 0;
  double value = 0.0;
};

// min c'x subject to
//   equalities   a_r'x = b_r,
//   LMI blocks   const_b + sum_i x_i * coeff_{b,i}  PSD,
//   SOC rows     || [affine expressions] ||_2 <= affine expression.
class ConicProgram {
 public:
  explicit ConicProgram(int num_vars);

  int num_vars() const { return num_vars_; }

  void set_objective_term(int var, double coeff);
  const Vec& objective() const { return objective_; }

  int add_lmi_block(int dim);
  int num_lmi_blocks() const { return static_cast<int>(blocks_.size()); }
  int lmi_dim(int block) const { return blocks_.at(block).dim; }
  void add_lmi_constant(int block, int row, int col, double value);
  void add_lmi_term(int block, int var, int row, int col, double value);

  void add_equality(LinExpr lhs, double rhs);
  int num_equalities() const { return static_cast<int>(equalities_.size()); }

  // expr >= 0 as a 1x1 LMI block; returns the block index.
  int add_nonneg(LinExpr expr);

  void add_soc(std::vector<LinExpr> norm_part, LinExpr bound);
  int num_socs() const { return static_cast<int>(socs_.size()); }

  struct Block {
    int dim = 0;
    std::vector<LmiEntry> constant;
    std::vector<std::pair<int, LmiEntry>> terms;  // (var, entry)
  };
  struct Equality {
    LinExpr lhs;
    double rhs = 0.0;
  };
  struct Soc {
    std::vector<LinExpr> norm_part;
    LinExpr bound;
  };

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Equality>& equalities() const { return equalities_; }
  const std::vector<Soc>& socs() const { return socs_; }

 private:
  void check_var(int var) const;

  int num_vars_ = 0;
  Vec objective_;
  std::vector<Block> blocks_;
  std::vector<Equality> equalities_;
  std::vector<Soc> socs_;
};

SolveReport solve(const ConicProgram& prog, const SolveSettings& settings = {});

struct ConstraintCheck {
  enum class Kind { equality, lmi, soc };
  Kind kind;
  int index = 0;
  double violation = 0.0;  // positive means infeasible by that amount
};

// Re-evaluates every constraint at x, independently of the solve path.
std::vector<ConstraintCheck> validate_solution(const ConicProgram& prog,
                                               const Vec& x);

double max_violation(const std::vector<ConstraintCheck>& checks);

// Self-describing dump (JSON, sparse triplets) for offline inspection.
void dump_program(const ConicProgram& prog, std::ostream& out);

}  // namespace regsyn::conic
