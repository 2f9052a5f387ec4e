#pragma once

#include "wassdro/model.hpp"
#include "wassdro/program.hpp"

#include <string>
#include <vector>

namespace wassdro::oracle {

/// Wait-and-see cost that is a sum of pointwise maxima of affine pieces
/// over a box support:
///     Z(xi) = sum_n max_p ( a_np . xi + c_np ),   xi in [lower, upper].
/// The canonical single-piece-plus-zero form max(A_n. xi - b_n, 0) comes
/// from from_relu; the two-piece newsvendor form from newsvendor_terms.
struct SumMaxRecourse {
  struct Piece {
    Vector slope;
    double offset = 0.0;
  };
  struct Term {
    std::vector<Piece> pieces;
  };
  std::vector<Term> terms;
  Vector lower, upper;

  Index dim() const { return lower.size(); }
  Index enumeration_size() const;
  double value(const Vector& xi) const;
  void validate() const;

  static SumMaxRecourse from_relu(const Matrix& a, const Vector& b,
                                  const Vector& lower, const Vector& upper);
  static SumMaxRecourse newsvendor_terms(const Vector& b, const Vector& s,
                                         const Vector& x, const Vector& lower,
                                         const Vector& upper);
};

/// Optimal value of the recourse LP; +infinity when primal infeasible,
/// -infinity when unbounded. Finite values are cross-checked against the
/// dual LP to 1e-7 relative agreement.
double recourse_value(const TwoStageProblem& p, const Vector& x, const Vector& xi);

struct SocpRecord {
  double s = 0.0;
  Vector theta, eta;  // multipliers for xi >= lower and xi <= upper
};

struct SocpSolution {
  double lambda = 0.0;
  std::vector<SocpRecord> records;  // one per (sample, piece combination)
  double value = 0.0;
  std::string provenance;  // method, enumeration size, tolerances
};

/// Exact worst-case expectation of a sum-of-max cost over a 2-Wasserstein
/// ball: one hyperbolic (SOC) row per sample and piece combination.
/// Refuses when the piece enumeration exceeds 16384 combinations.
SocpSolution exact_wce_summax(const SumMaxRecourse& r,
                              const std::vector<Vector>& samples, double eps);

struct GridResult {
  double value = 0.0;             // lower bound; exact as the grid refines
  double refined_estimate = 0.0;  // two-grid extrapolation
  bool hit_infinite = false;
  std::string provenance;  // method, grid size, tolerances
};

/// Grid evaluation of the dual worst-case-expectation formula: tabulates
/// Z(x, .) on a grid of the (bounded) support and minimizes the convex
/// 1-d outer function over lambda by golden section.
GridResult grid_wce(const TwoStageProblem& p, const Vector& x,
                    Index grid_per_dim, double lambda_tol = 1e-9);

/// Exact empirical CVaR of a finite cost sample (Rockafellar-Uryasev
/// minimum evaluated in closed form by sorting).
double cvar_from_costs(std::vector<double> costs, double rho);

struct SaaCvarResult {
  double value = 0.0;
  Vector x;  // filled when optimized
};

/// Empirical CVaR LP: inf_theta theta + 1/(rho I) sum max(Z(x, xi_i) - theta, 0),
/// jointly over x in the first-stage set when optimize_x is set.
SaaCvarResult saa_cvar(const TwoStageProblem& p, const Vector* x_fixed,
                       double rho, bool optimize_x);

enum class DecisionRuleDegree { Affine, Quadratic };

/// Upper bound on the worst-case expectation from restricting the
/// wait-and-see decision to affine or quadratic functions of xi. Box
/// constraints are robustified exactly (affine case) or through
/// nonnegative multipliers on the constraint products plus a PSD
/// remainder (quadratic case).
double decision_rule_bound(const SumMaxRecourse& r,
                           const std::vector<Vector>& samples, double eps,
                           DecisionRuleDegree degree);

}  // namespace wassdro::oracle
