#include "wassdro/program.hpp"

namespace wassdro::conic {

void ConicProgram::validate() const {
  cones.validate();
  const Index m = cones.total_rows();
  if (rhs.size() != m || constraint.rows() != m)
    throw precondition_error("program rows do not match cone dimensions");
  if (constraint.cols() != num_vars || objective.size() != num_vars)
    throw precondition_error("program columns do not match variable count");
  if (!rhs.allFinite() || !objective.allFinite())
    throw precondition_error("program contains non-finite data");
  for (Index k = 0; k < constraint.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(constraint, k); it; ++it)
      if (!std::isfinite(it.value()))
        throw precondition_error("program contains non-finite coefficients");
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::NumericalTrouble: return "NumericalTrouble";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

Index ProgramBuilder::add_variable(std::string name, double obj_coef) {
  var_names_.push_back(std::move(name));
  obj_.push_back(obj_coef);
  return static_cast<Index>(var_names_.size()) - 1;
}

Index ProgramBuilder::add_variables(Index n, const std::string& prefix, double obj_coef) {
  const Index first = num_vars();
  for (Index i = 0; i < n; ++i)
    add_variable(prefix + "[" + std::to_string(i) + "]", obj_coef);
  return first;
}

void ProgramBuilder::add_objective(Index var, double coef) { obj_.at(var) += coef; }

Index ProgramBuilder::begin_block(ConeKind kind, Index dim, std::string name) {
  ConeBlock blk{kind, dim};
  const Index first = next_row_;
  cones_.blocks.push_back(blk);
  row_names_.push_back(std::move(name));
  next_row_ += blk.rows();
  rhs_.resize(next_row_, 0.0);
  return first;
}

void ProgramBuilder::coef(Index row, Index var, double c) {
  // s = rhs - A z, so a +c*z term in s contributes -c to A.
  if (c != 0.0) triplets_.emplace_back(row, var, -c);
}

void ProgramBuilder::constant(Index row, double c) { rhs_.at(row) += c; }

ConicProgram ProgramBuilder::finish() {
  ConicProgram p;
  p.num_vars = num_vars();
  p.objective = Eigen::Map<const Vector>(obj_.data(), static_cast<Index>(obj_.size()));
  p.objective_offset = obj_const_;
  p.rhs = Eigen::Map<const Vector>(rhs_.data(), static_cast<Index>(rhs_.size()));
  p.constraint = SparseMatrix(next_row_, p.num_vars);
  p.constraint.setFromTriplets(triplets_.begin(), triplets_.end());
  p.constraint.makeCompressed();
  p.cones = cones_;
  p.var_names = var_names_;
  p.row_names = row_names_;
  p.validate();
  return p;
}

}  // namespace wassdro::conic
