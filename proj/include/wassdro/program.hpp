#pragma once

#include "wassdro/cones.hpp"
#include "wassdro/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace wassdro::conic {

/// Standard-form conic program
///
///     minimize    objective . z
///     subject to  constraint * z + s = rhs,   s in cones
///
/// over z in R^num_vars. All builders in this library target this one form;
/// the solver and the file writers consume it unchanged.
struct ConicProgram {
  Index num_vars = 0;
  Vector objective;          // num_vars
  double objective_offset = 0.0;
  SparseMatrix constraint;   // total_rows x num_vars
  Vector rhs;                // total_rows
  ConeSpec cones;
  std::vector<std::string> var_names;  // may be empty; diagnostics only
  std::vector<std::string> row_names;  // one entry per cone block

  Index num_rows() const { return rhs.size(); }

  void validate() const;
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  NumericalTrouble,
  IterLimit,
};

const char* status_name(SolveStatus s);

/// Outcome of a conic solve. For Optimal, `primal` holds z with
/// |primal_objective - dual_objective| <= gap and feasibility residuals
/// below the requested tolerance. For PrimalInfeasible/DualInfeasible the
/// corresponding Farkas certificate is stored in `dual` / `primal`.
struct SolveResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  Vector primal;  // z
  Vector dual;    // one multiplier per constraint row
  Vector slack;   // s = rhs - constraint * z
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  Index iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Incremental builder for ConicProgram. Rows are appended in cone-block
/// groups; each row reads  s_row = rhs_const + sum coef * z_var  with the
/// membership s in the block's cone.
class ProgramBuilder {
 public:
  Index add_variable(std::string name, double obj_coef = 0.0);
  Index add_variables(Index n, const std::string& prefix, double obj_coef = 0.0);
  void add_objective(Index var, double coef);
  void add_objective_constant(double c) { obj_const_ += c; }

  /// Appends a cone block of `dim` rows (svec rows for Psd) and returns the
  /// index of its first row.
  Index begin_block(ConeKind kind, Index dim, std::string name);

  /// s_row += coef * z_var
  void coef(Index row, Index var, double c);
  /// s_row += c
  void constant(Index row, double c);

  Index num_vars() const { return static_cast<Index>(var_names_.size()); }
  Index num_rows() const { return next_row_; }
  double objective_constant() const { return obj_const_; }

  ConicProgram finish();

 private:
  std::vector<std::string> var_names_;
  std::vector<double> obj_;
  std::vector<Triplet> triplets_;
  std::vector<double> rhs_;
  ConeSpec cones_;
  std::vector<std::string> row_names_;
  Index next_row_ = 0;
  double obj_const_ = 0.0;
};

}  // namespace wassdro::conic
