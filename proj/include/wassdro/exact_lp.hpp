#pragma once

#include "wassdro/model.hpp"
#include "wassdro/program.hpp"

#include <string>
#include <vector>

namespace wassdro::exact_lp {

struct WassersteinLpSolution {
  conic::SolveStatus status = conic::SolveStatus::NumericalTrouble;
  Vector x;
  double lambda = 0.0;
  std::vector<Vector> y;    // one recourse vector per sample
  std::vector<Vector> phi;  // per coordinate k
  std::vector<Vector> psi;  // per coordinate k
  double objective = 0.0;
};

struct LpBuild {
  conic::ConicProgram program;
  Index x_start = -1;
  Index n1 = 0, n2 = 0;
  Index lambda_var = -1;
  std::vector<Index> y_starts, phi_starts, psi_starts;
  Vector x_fixed;
  std::string warning;  // set when support rows were ignored

  WassersteinLpSolution extract(const conic::SolveResult& r) const;
};

/// Exact LP reformulation of the 1-Wasserstein problem with fixed recourse
/// costs (Q = 0) and the weighted-max reference norm, x optimized jointly.
/// Support rows are ignored with a warning (the reformulation is exact for
/// unconstrained support; with support rows the value is an upper bound).
LpBuild build_lp(const TwoStageProblem& p);

/// Same program with the first stage frozen at x.
LpBuild build_lp_fixed(const TwoStageProblem& p, const Vector& x);

/// max_k max( z_k / w_plus, -z_k / w_minus ): the norm dual to the
/// weighted-max reference norm.
double dual_norm(const Vector& z, double w_plus, double w_minus);

/// Closed-form distributionally robust least-absolute-deviations value:
/// eps * ||coef||_* + mean_i | coef.xi_i + intercept - chi_i |.
double lad_value(const Vector& coef, double intercept,
                 const std::vector<Vector>& xi, const std::vector<double>& chi,
                 double eps, double w_plus, double w_minus);

/// Multi-task variant: (eps/min(w+,w-)) max_k ||coef_:k||_1
///                     + mean_i || coef xi_i + intercept - chi_i ||_1.
double multitask_value(const Matrix& coef, const Vector& intercept,
                       const std::vector<Vector>& xi,
                       const std::vector<Vector>& chi, double eps,
                       double w_plus, double w_minus);

/// Inner worst-case expectation at fixed x from the closed-form optimal
/// dual weight: lambda* = sup ||T(x)'p||_* over the dual-feasible set,
/// evaluated coordinate-wise by 2K LPs, plus the empirical average of the
/// recourse values.
double evaluate_fixed_x(const TwoStageProblem& p, const Vector& x);

struct RegressionData {
  std::vector<Vector> xi;        // explanatory rows
  std::vector<Vector> response;  // one or more response columns per row
};

/// Parses a regression dataset given as CSV text: one row per sample,
/// the first `k` columns are the explanatory coordinates, the remaining
/// columns the response(s). Column counts are validated against k.
RegressionData load_regression_csv(const std::string& text, Index k);

}  // namespace wassdro::exact_lp
