#pragma once

#include "wassdro/model.hpp"
#include "wassdro/program.hpp"
#include "wassdro/solver.hpp"

#include <limits>
#include <string>
#include <vector>

namespace wassdro::copos {

/// Small symmetric matrix whose entries are affine in program variables:
/// M(z) = constant + sum_v z_v * coefficient[v].
struct SymmetricAffine {
  Index side = 0;
  Matrix constant;
  std::vector<std::pair<Index, Matrix>> terms;

  explicit SymmetricAffine(Index s)
      : side(s), constant(Matrix::Zero(s, s)) {}
  void add_term(Index var, Matrix coef);
};

struct C0BlockInfo {
  std::vector<Index> reduced_indices;  // rows handled by facial reduction
  Index psd_side = 0;                  // side of the remaining PSD block
  Index slack_start = -1;              // first entrywise-nonneg slack variable
};

/// Emits the membership M(z) in C0 = { P + N : P psd, N >= 0 } as one
/// PSD block plus entrywise-nonnegative slack variables. Exact for
/// side <= 4; an inner approximation above that, so minimization values
/// are upper bounds.
///
/// Indices whose diagonal entry is identically zero are first removed by
/// facial reduction (the PSD part must vanish on them, so their row
/// entries reduce to plain sign constraints). This turns structurally
/// infeasible instances that are only weakly infeasible in the raw P+N
/// form into strongly infeasible ones the solver can certify.
C0BlockInfo add_c0_block(conic::ProgramBuilder& pb, const SymmetricAffine& m,
                         const std::string& name);

/// Emits the plain semidefinite membership M(z) psd as one PSD block.
void add_psd_affine_block(conic::ProgramBuilder& pb, const SymmetricAffine& m,
                          const std::string& name);

struct DisutilityPiece {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Piecewise affine nondecreasing convex disutility
/// U(y) = max_t (alpha_t y + beta_t), alpha >= 0 and not identically zero.
struct DisutilitySpec {
  std::vector<DisutilityPiece> pieces;

  void validate() const;
  static DisutilitySpec identity() { return {{{1.0, 0.0}}}; }
  /// Optimized-certainty-equivalent encoding of CVaR at level rho.
  static DisutilitySpec cvar(double rho) { return {{{0.0, 0.0}, {1.0 / rho, 0.0}}}; }
};

struct SampleRecord {
  double s = 0.0;
  Vector psi;
  Vector phi;
};

struct CopositiveSolution {
  conic::SolveStatus status = conic::SolveStatus::NumericalTrouble;
  Vector x;
  double lambda = 0.0;
  double theta = 0.0;  // risk-averse programs only
  std::vector<SampleRecord> records;
  double delta = 0.0;
  double objective = 0.0;
};

/// A built program together with its variable layout, so solutions can be
/// pulled back out of a SolveResult.
struct CoposBuild {
  conic::ConicProgram program;
  Index x_start = -1;
  Index n1 = 0;
  Index lambda_var = -1;
  Index theta_var = -1;
  std::vector<Index> s_vars;
  std::vector<Index> psi_starts;
  std::vector<Index> phi_starts;
  Index nj = 0;
  double delta = 0.0;
  Vector x_fixed;  // set when x was frozen at build time
  /// "upper bound" at delta = 0; "heuristic lower estimate" for delta > 0
  /// (the exact-cone lower-bound guarantee does not survive the C0
  /// substitution).
  std::string bound_kind;

  CopositiveSolution extract(const conic::SolveResult& r) const;
  conic::SolveResult solve(const conic::SolverSettings* settings = nullptr) const;
};

/// Worst-case-expectation bound at a fixed first-stage decision: one
/// C0 block of side K + (M+J) + 1 per sample, delta added to the middle
/// block. Requires the 2-Wasserstein metric and radius > 0.
CoposBuild build_wce_upper(const TwoStageProblem& p, const Vector& x, double delta);

/// Joint program over x: x enters the blocks affinely, the first-stage
/// cost is added, and the first-stage polytope rows are enforced.
CoposBuild build_full_problem(const TwoStageProblem& p, double delta);

/// Worst-case optimized-certainty-equivalent variant: one block per
/// (sample, piece) with the piece slope scaling T and h, linked through
/// an explicit kappa equality per pair.
CoposBuild build_risk_averse(const TwoStageProblem& p, const DisutilitySpec& u,
                             double delta);

struct RefinementStep {
  double delta = 0.0;
  conic::SolveStatus status = conic::SolveStatus::NumericalTrouble;
  double value = std::numeric_limits<double>::quiet_NaN();
  Vector x;
};

struct RefinementResult {
  std::vector<RefinementStep> steps;
  bool has_candidate = false;
  Vector x_candidate;
  double value = std::numeric_limits<double>::quiet_NaN();
  double delta_used = std::numeric_limits<double>::quiet_NaN();
  bool delta_zero_solved = false;
};

/// Solves the joint program along a decreasing delta schedule, stopping
/// when successive values agree to stop_rel_tol; a trailing delta = 0 entry
/// is always attempted.
RefinementResult delta_refinement(const TwoStageProblem& p,
                                  std::vector<double> schedule,
                                  double stop_rel_tol = 1e-4);

/// 1e-1 ... 1e-6 geometrically, then 0.
std::vector<double> default_delta_schedule();

/// Robust counterpart configuration: replaces the samples by a single
/// anchor point (the support bounding-box midpoint projected into the
/// support) and sets the radius to twice the half-diagonal norm, a
/// certified over-estimate of the largest distance to the anchor.
TwoStageProblem robust_mode(const TwoStageProblem& p);

/// Shared solve policy for the PSD-heavy programs: full accuracy first,
/// one retry at 1e-6 tolerances if the backend cannot reach it.
conic::SolveResult solve_conic(const conic::ConicProgram& prog);

}  // namespace wassdro::copos
