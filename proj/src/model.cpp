#include "wassdro/model.hpp"

#include "wassdro/solver.hpp"

#include <limits>
#include <sstream>

namespace wassdro {

using conic::ConeKind;
using conic::ProgramBuilder;
using conic::SolveStatus;

bool SupportPolytope::contains(const Vector& xi, double tol) const {
  if (xi.size() != dim()) return false;
  if ((xi.array() < -tol).any()) return false;
  if (num_rows() == 0) return true;
  return ((S * xi - t).array() <= tol).all();
}

Matrix AffineMatrixMap::operator()(const Vector& x) const {
  Matrix out = base;
  if (static_cast<size_t>(x.size()) != slopes.size())
    throw precondition_error("affine matrix map: wrong x dimension");
  for (Index n = 0; n < x.size(); ++n) out += x[n] * slopes[n];
  return out;
}

Vector AffineVectorMap::operator()(const Vector& x) const {
  if (slope.size() == 0 && x.size() == 0) return base;
  if (slope.cols() != x.size())
    throw precondition_error("affine vector map: wrong x dimension");
  return base + slope * x;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& f : findings) os << f.code << ": " << f.message << "\n";
  return os.str();
}

CompleteRecourseCheck check_complete_recourse(const Matrix& w) {
  if (w.rows() < 1) throw precondition_error("W must have at least one row");
  const Index m = w.rows(), n2 = w.cols();

  auto run = [&](bool bounded_y) {
    ProgramBuilder pb;
    const Index y0 = pb.add_variables(n2, "y");
    const Index z = pb.add_variable("z", -1.0);  // maximize z
    Index r = pb.begin_block(ConeKind::NonNeg, m, "Wy>=z");
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n2; ++j) pb.coef(r + i, y0 + j, w(i, j));
      pb.coef(r + i, z, -1.0);
    }
    Index rz = pb.begin_block(ConeKind::NonNeg, 1, "z<=1");
    pb.coef(rz, z, -1.0);
    pb.constant(rz, 1.0);
    if (bounded_y) {
      Index rb = pb.begin_block(ConeKind::NonNeg, 2 * n2, "|y|<=1");
      for (Index j = 0; j < n2; ++j) {
        pb.coef(rb + 2 * j, y0 + j, 1.0);
        pb.constant(rb + 2 * j, 1.0);
        pb.coef(rb + 2 * j + 1, y0 + j, -1.0);
        pb.constant(rb + 2 * j + 1, 1.0);
      }
    }
    auto res = conic::solve(pb.finish());
    if (res.status != SolveStatus::Optimal)
      throw solver_error(std::string("complete-recourse LP: backend status ") +
                         conic::status_name(res.status) +
                         (res.message.empty() ? "" : " (" + res.message + ")"));
    return std::make_pair(-res.primal_objective, Vector(res.primal.head(n2)));
  };

  auto [value, y] = run(false);
  CompleteRecourseCheck out;
  out.complete = value > 0.5;
  if (!out.complete) return out;

  double scale = y.cwiseAbs().maxCoeff();
  if (scale <= 0 || (w * y / scale).minCoeff() < 1e-8) {
    // rescale-resistant fallback: maximize the margin over the unit box
    std::tie(value, y) = run(true);
    scale = y.cwiseAbs().maxCoeff();
  }
  out.certificate = Vector(y / scale);
  return out;
}

namespace {

// phase-1 LP: is { p >= 0 : W'p = rhs } nonempty?
bool dual_recourse_feasible(const Matrix& w, const Vector& rhs) {
  const Index m = w.rows(), n2 = w.cols();
  ProgramBuilder pb;
  const Index p0 = pb.add_variables(m, "p");
  const Index up = pb.add_variables(n2, "u+", 1.0);
  const Index um = pb.add_variables(n2, "u-", 1.0);
  Index eq = pb.begin_block(ConeKind::Zero, n2, "W'p=rhs");
  for (Index j = 0; j < n2; ++j) {
    for (Index i = 0; i < m; ++i) pb.coef(eq + j, p0 + i, w(i, j));
    pb.coef(eq + j, up + j, 1.0);
    pb.coef(eq + j, um + j, -1.0);
    pb.constant(eq + j, -rhs[j]);
  }
  Index r = pb.begin_block(ConeKind::NonNeg, m + 2 * n2, "nonneg");
  for (Index i = 0; i < m + 2 * n2; ++i) pb.coef(r + i, i, 1.0);
  auto res = conic::solve(pb.finish());
  if (res.status != SolveStatus::Optimal)
    throw solver_error(std::string("phase-1 LP: backend status ") +
                       conic::status_name(res.status));
  return res.primal_objective <= 1e-7 * std::max(1.0, rhs.norm());
}

}  // namespace

ExpensiveRecourseReport check_sufficiently_expensive(
    const TwoStageProblem& p, const std::vector<Vector>& points) {
  ExpensiveRecourseReport rep;
  const Matrix& w = p.recourse.W;
  const bool q_zero = p.recourse.Q.size() == 0 ||
                      p.recourse.Q.cwiseAbs().maxCoeff() == 0.0;
  rep.xi_independent = q_zero;
  if (q_zero) {
    rep.independent_value = dual_recourse_feasible(w, p.recourse.q);
    rep.per_point.assign(points.size(), rep.independent_value);
    return rep;
  }
  if (points.empty())
    throw precondition_error(
        "sufficiently-expensive check with Q != 0 needs query points");
  rep.warning =
      "Q != 0: dual-recourse feasibility verified only at the supplied "
      "points, not over all of the support";
  for (const auto& xi : points) {
    if (!p.support.contains(xi))
      throw precondition_error("query point lies outside the support");
    rep.per_point.push_back(
        dual_recourse_feasible(w, p.recourse.Q * xi + p.recourse.q));
  }
  return rep;
}

ExtendedData extend(const TwoStageProblem& p) {
  if (p.metric.order != 2)
    throw precondition_error("extended parameters are defined for the r=2 path");
  const Index k = p.recourse.uncertainty_dim();
  const Index m = p.recourse.num_rows();
  const Index n2 = p.recourse.num_recourse_vars();
  const Index j = p.support.num_rows();
  const Index n1 = p.num_first_stage();

  ExtendedData e;
  e.Q_ext.resize(n2 + j, k);
  e.Q_ext.topRows(n2) = p.recourse.Q;
  e.Q_ext.bottomRows(j) = p.support.S;
  e.q_ext.resize(n2 + j);
  e.q_ext.head(n2) = p.recourse.q;
  e.q_ext.tail(j) = -p.support.t;

  e.T_ext.base = Matrix::Zero(m + j, k);
  e.T_ext.base.topRows(m) = p.recourse.T.base;
  e.T_ext.slopes.resize(n1);
  for (Index n = 0; n < n1; ++n) {
    e.T_ext.slopes[n] = Matrix::Zero(m + j, k);
    e.T_ext.slopes[n].topRows(m) = p.recourse.T.slopes[n];
  }
  e.h_ext.base = Vector::Zero(m + j);
  e.h_ext.base.head(m) = p.recourse.h.base;
  e.h_ext.slope = Matrix::Zero(m + j, n1);
  if (n1 > 0) e.h_ext.slope.topRows(m) = p.recourse.h.slope;

  e.W_ext = Matrix::Zero(m + j, n2 + j);
  e.W_ext.topLeftCorner(m, n2) = p.recourse.W;
  e.W_ext.bottomRightCorner(j, j) = -Matrix::Identity(j, j);
  return e;
}

bool polyhedron_nonempty(const Matrix& a, const Vector& b, const Vector& lb,
                         const Vector& ub, bool nonneg) {
  const Index n = a.cols() > 0 ? a.cols() : std::max(lb.size(), ub.size());
  if (n == 0) return true;
  ProgramBuilder pb;
  const Index x0 = pb.add_variables(n, "x");
  const Index nr = a.rows();
  const Index v0 = pb.add_variables(nr, "v", 1.0);  // violation slack
  if (nr > 0) {
    Index r = pb.begin_block(ConeKind::NonNeg, nr, "Ax<=b+v");
    for (Index i = 0; i < nr; ++i) {
      for (Index jj = 0; jj < n; ++jj) pb.coef(r + i, x0 + jj, -a(i, jj));
      pb.coef(r + i, v0 + i, 1.0);
      pb.constant(r + i, b[i]);
    }
    Index rv = pb.begin_block(ConeKind::NonNeg, nr, "v>=0");
    for (Index i = 0; i < nr; ++i) pb.coef(rv + i, v0 + i, 1.0);
  }
  std::vector<std::pair<Index, double>> lower, upper;
  for (Index jj = 0; jj < lb.size(); ++jj)
    if (std::isfinite(lb[jj])) lower.emplace_back(jj, lb[jj]);
  if (nonneg)
    for (Index jj = 0; jj < n; ++jj) lower.emplace_back(jj, 0.0);
  for (Index jj = 0; jj < ub.size(); ++jj)
    if (std::isfinite(ub[jj])) upper.emplace_back(jj, ub[jj]);
  if (!lower.empty() || !upper.empty()) {
    Index r = pb.begin_block(
        ConeKind::NonNeg, static_cast<Index>(lower.size() + upper.size()),
        "bounds");
    Index i = 0;
    for (auto [jj, v] : lower) {
      pb.coef(r + i, x0 + jj, 1.0);
      pb.constant(r + i, -v);
      ++i;
    }
    for (auto [jj, v] : upper) {
      pb.coef(r + i, x0 + jj, -1.0);
      pb.constant(r + i, v);
      ++i;
    }
  }
  if (pb.num_rows() == 0) return true;
  auto res = conic::solve(pb.finish());
  if (res.status != SolveStatus::Optimal)
    throw solver_error("feasibility phase-1 LP failed");
  return res.primal_objective <= 1e-7;
}

std::vector<Vector> support_box_vertices(const SupportPolytope& support) {
  const Index k = support.dim();
  if (k < 1 || k > 12) return {};
  Vector upper = Vector::Constant(k, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < support.num_rows(); ++i) {
    Index nz = -1;
    for (Index j = 0; j < k; ++j)
      if (support.S(i, j) != 0.0) {
        if (nz >= 0) return {};  // row couples two coordinates
        nz = j;
      }
    if (nz < 0) {
      if (support.t[i] < 0) return {};  // 0 <= t violated: empty support
      continue;
    }
    if (support.S(i, nz) < 0) {
      // lower bound row; only -xi <= 0 (redundant with xi >= 0) qualifies
      if (support.t[i] / support.S(i, nz) > 0) return {};
      continue;
    }
    upper[nz] = std::min(upper[nz], support.t[i] / support.S(i, nz));
  }
  if (!upper.allFinite()) return {};
  std::vector<Vector> vertices;
  vertices.reserve(static_cast<size_t>(1) << k);
  for (Index mask = 0; mask < (Index(1) << k); ++mask) {
    Vector v = Vector::Zero(k);
    for (Index j = 0; j < k; ++j)
      if (mask & (Index(1) << j)) v[j] = upper[j];
    vertices.push_back(std::move(v));
  }
  return vertices;
}

ValidationReport validate(const TwoStageProblem& p) {
  ValidationReport rep;
  auto add = [&](const std::string& code, const std::string& msg) {
    rep.findings.push_back({code, msg});
  };

  const Index n1 = p.num_first_stage();
  const Index k = p.recourse.uncertainty_dim();
  const Index m = p.recourse.num_rows();
  const Index n2 = p.recourse.num_recourse_vars();

  if (k < 1) add("dimension", "uncertainty dimension K must be >= 1");
  if (p.recourse.q.size() != n2) add("dimension", "q length differs from N2");
  if (p.recourse.Q.rows() != n2) add("dimension", "Q rows differ from N2");
  if (p.recourse.T.rows() != m || p.recourse.T.cols() != k)
    add("dimension", "T(x) shape differs from M x K");
  if (static_cast<Index>(p.recourse.T.slopes.size()) != n1)
    add("dimension", "T(x) slope count differs from N1");
  for (const auto& s : p.recourse.T.slopes)
    if (s.rows() != m || s.cols() != k)
      add("dimension", "T(x) slope shape differs from M x K");
  if (p.recourse.h.rows() != m) add("dimension", "h(x) length differs from M");
  if (n1 > 0 && (p.recourse.h.slope.rows() != m || p.recourse.h.slope.cols() != n1))
    add("dimension", "h(x) slope shape differs from M x N1");
  if (p.support.dim() != k) add("dimension", "support dimension differs from K");
  if (p.support.t.size() != p.support.num_rows())
    add("dimension", "support right-hand side differs from row count");
  if (p.x_set.A.size() > 0 && p.x_set.A.cols() != n1)
    add("dimension", "first-stage constraint columns differ from N1");
  if (p.x_set.A.rows() != p.x_set.b.size())
    add("dimension", "first-stage right-hand side differs from row count");
  if (p.samples.empty()) add("samples", "at least one sample is required");
  if (p.metric.order == 2 && p.metric.norm != NormTag::Euclidean)
    add("metric", "order 2 requires the euclidean reference norm");
  if (p.metric.order == 1 && p.metric.norm != NormTag::WeightedMax)
    add("metric", "order 1 requires the weighted-max reference norm");
  if (p.metric.order != 1 && p.metric.order != 2)
    add("metric", "order must be 1 or 2");
  if (!(p.metric.radius >= 0) || !std::isfinite(p.metric.radius))
    add("metric", "radius must be finite and nonnegative");
  if (p.metric.norm == NormTag::WeightedMax &&
      (p.metric.w_plus <= 0 || p.metric.w_minus <= 0))
    add("metric", "weighted-max norm needs w_plus, w_minus > 0");
  if (!rep.ok()) return rep;  // deeper checks need consistent dimensions

  for (size_t i = 0; i < p.samples.size(); ++i) {
    if (p.samples[i].size() != k) {
      add("dimension", "sample " + std::to_string(i) + " has wrong dimension");
    } else if (!p.support.contains(p.samples[i])) {
      add("sample_outside_support",
          "sample " + std::to_string(i) + " violates the support constraints");
    }
  }
  if (!polyhedron_nonempty(p.support.S, p.support.t, Vector(), Vector(), true))
    add("empty_support", "the support polytope has no feasible point");
  if (n1 > 0 &&
      !polyhedron_nonempty(p.x_set.A, p.x_set.b, p.x_set.lb, p.x_set.ub, false))
    add("empty_feasible_set", "the first-stage feasible set is empty");
  return rep;
}

}  // namespace wassdro
