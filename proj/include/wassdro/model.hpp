#pragma once

#include "wassdro/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wassdro {

/// Support set  Xi = { xi in R_+^K : S xi <= t }.
struct SupportPolytope {
  Matrix S;  // J x K
  Vector t;  // J

  Index dim() const { return S.cols(); }
  Index num_rows() const { return S.rows(); }
  bool contains(const Vector& xi, double tol = 1e-9) const;
};

/// x -> base + sum_n x_n slopes[n]
struct AffineMatrixMap {
  Matrix base;
  std::vector<Matrix> slopes;

  Matrix operator()(const Vector& x) const;
  Index rows() const { return base.rows(); }
  Index cols() const { return base.cols(); }
};

/// x -> base + slope x
struct AffineVectorMap {
  Vector base;
  Matrix slope;  // rows x N1

  Vector operator()(const Vector& x) const;
  Index rows() const { return base.size(); }
};

/// Data of the recourse problem
///   Z(x, xi) = inf { (Q xi + q).y : y in R^N2, T(x) xi + h(x) <= W y }.
struct RecourseData {
  Matrix Q;          // N2 x K
  Vector q;          // N2
  Matrix W;          // M x N2
  AffineMatrixMap T;  // -> M x K
  AffineVectorMap h;  // -> M

  Index num_rows() const { return W.rows(); }           // M
  Index num_recourse_vars() const { return W.cols(); }  // N2
  Index uncertainty_dim() const { return Q.cols(); }    // K
};

enum class NormTag { Euclidean, WeightedMax };

/// Wasserstein metric configuration: order r with its reference norm.
struct MetricConfig {
  int order = 2;
  NormTag norm = NormTag::Euclidean;
  double radius = 0.0;
  double w_plus = 1.0;
  double w_minus = 1.0;
};

/// First-stage feasible set { x : A x <= b, lb <= x <= ub }; empty bound
/// vectors mean unbounded.
struct Polyhedron {
  Matrix A;
  Vector b;
  Vector lb, ub;
};

struct TwoStageProblem {
  Vector c;  // N1 first-stage cost (N1 = 0 allowed: pure evaluation mode)
  Polyhedron x_set;
  RecourseData recourse;
  SupportPolytope support;
  std::vector<Vector> samples;
  MetricConfig metric;

  Index num_first_stage() const { return c.size(); }
  Index num_samples() const { return static_cast<Index>(samples.size()); }
};

/// Recourse data merged with the support rows:
///   Q~ = [Q; S], q~ = [q; -t], T~(x) = [T(x); 0], h~(x) = [h(x); 0],
///   W~ = [[W, 0], [0, -I]].
struct ExtendedData {
  Matrix Q_ext;        // (N2+J) x K
  Vector q_ext;        // N2+J
  AffineMatrixMap T_ext;  // -> (M+J) x K
  AffineVectorMap h_ext;  // -> M+J
  Matrix W_ext;        // (M+J) x (N2+J)
};

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
  std::string to_string() const;
};

struct CompleteRecourseCheck {
  bool complete = false;
  std::optional<Vector> certificate;  // y+ with W y+ > 0, unit inf-norm
};

/// Decides whether some y+ has W y+ > 0 via the bounded LP
/// max { z : W y >= z e, z <= 1 }; the optimal value is 1 under complete
/// recourse and 0 otherwise.
CompleteRecourseCheck check_complete_recourse(const Matrix& w);

struct ExpensiveRecourseReport {
  bool xi_independent = false;   // Q = 0: one check covers every xi
  bool independent_value = false;
  std::vector<bool> per_point;
  std::string warning;  // nonempty when the check is only point-wise
};

/// Dual-recourse feasibility { p >= 0 : W'p = Q xi + q } at each query
/// point (phase-1 LP per point).
ExpensiveRecourseReport check_sufficiently_expensive(
    const TwoStageProblem& p, const std::vector<Vector>& points);

/// Assembles the extended recourse parameters (2-Wasserstein path only).
ExtendedData extend(const TwoStageProblem& p);

/// Collects invariant violations: dimension mismatches, samples outside the
/// support, empty support, empty first-stage set. Findings are data, not
/// exceptions; the report is empty iff the instance is well-formed.
ValidationReport validate(const TwoStageProblem& p);

/// True iff the polytope {x : A x <= b, lb <= x <= ub} is nonempty
/// (phase-1 LP). nonneg adds x >= 0.
bool polyhedron_nonempty(const Matrix& a, const Vector& b, const Vector& lb,
                         const Vector& ub, bool nonneg);

/// When the support is a coordinate box [0, u] with at most 2^12 vertices,
/// returns all vertices (for exhaustive recourse-regularity checks);
/// empty otherwise. Box structure means every row of S bounds a single
/// coordinate from above.
std::vector<Vector> support_box_vertices(const SupportPolytope& support);

}  // namespace wassdro
