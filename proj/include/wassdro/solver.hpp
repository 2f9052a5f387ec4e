#pragma once

#include "wassdro/program.hpp"

namespace wassdro::conic {

struct SolverSettings {
  double feas_tol = 1e-8;   // primal/dual feasibility residual bound
  double gap_tol = 1e-8;    // absolute-or-relative duality gap bound
  Index max_iterations = 200;
  double static_reg = 1e-9;   // KKT quasidefinite regularization
  Index refinement_steps = 3;
  bool verbose = false;
};

/// Solves the program with a homogeneous self-dual interior-point method
/// (Nesterov-Todd scaling, Mehrotra predictor-corrector) over the cone
/// product Zero x NonNeg x SecondOrder x Psd.
///
/// Status semantics: Optimal is reported only when the scaled primal and
/// dual residuals are below feas_tol and the duality gap is below gap_tol
/// (absolute or relative). Infeasibility statuses carry Farkas
/// certificates in the result. Anything the method cannot certify is
/// surfaced as NumericalTrouble or IterLimit together with the best
/// iterate's diagnostics, never as a silent answer.
SolveResult solve(const ConicProgram& prog, const SolverSettings& settings = {});

}  // namespace wassdro::conic
