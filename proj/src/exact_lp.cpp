#include "wassdro/exact_lp.hpp"

#include "wassdro/oracles.hpp"
#include "wassdro/solver.hpp"

#include <cmath>
#include <sstream>

namespace wassdro::exact_lp {

using conic::ConeKind;
using conic::ProgramBuilder;
using conic::SolveStatus;

namespace {

void check_preconditions(const TwoStageProblem& p) {
  if (p.recourse.Q.size() > 0 && p.recourse.Q.cwiseAbs().maxCoeff() != 0.0)
    throw precondition_error(
        "exact LP reformulation requires a fixed recourse objective (Q = 0); "
        "with uncertain costs the problem is NP-hard");
  if (p.metric.order != 1)
    throw precondition_error("exact LP reformulation works on the 1-Wasserstein metric");
  if (p.metric.norm != NormTag::WeightedMax)
    throw precondition_error(
        "reference norms outside the weighted-max family are rejected: no "
        "tractable exact algorithm exists for them");
  if (!(p.metric.w_plus > 0) || !(p.metric.w_minus > 0))
    throw precondition_error("weighted-max norm needs w_plus, w_minus > 0");
  if (p.samples.empty()) throw precondition_error("at least one sample needed");
}

LpBuild assemble(const TwoStageProblem& p, const Vector* x_fixed) {
  check_preconditions(p);
  LpBuild out;
  if (p.support.num_rows() > 0)
    out.warning =
        "support rows are ignored by the exact LP reformulation (it assumes "
        "an unconstrained support); the value is an upper bound for the "
        "supported problem";

  const Index n1 = p.num_first_stage();
  const Index n2 = p.recourse.num_recourse_vars();
  const Index m = p.recourse.num_rows();
  const Index k = p.recourse.uncertainty_dim();
  const Index ns = p.num_samples();
  const double inv = 1.0 / static_cast<double>(ns);
  out.n1 = n1;
  out.n2 = n2;

  ProgramBuilder pb;
  if (!x_fixed) {
    out.x_start = pb.add_variables(n1, "x");
    for (Index j = 0; j < n1; ++j) pb.add_objective(out.x_start + j, p.c[j]);
  } else {
    out.x_fixed = *x_fixed;
    if (x_fixed->size() != n1) throw precondition_error("fixed x has wrong size");
  }
  out.lambda_var = pb.add_variable("lambda", p.metric.radius);
  for (Index i = 0; i < ns; ++i) {
    out.y_starts.push_back(pb.add_variables(n2, "y[" + std::to_string(i) + "]"));
    for (Index j = 0; j < n2; ++j)
      pb.add_objective(out.y_starts[i] + j, inv * p.recourse.q[j]);
  }
  for (Index d = 0; d < k; ++d) {
    out.phi_starts.push_back(pb.add_variables(n2, "phi[" + std::to_string(d) + "]"));
    out.psi_starts.push_back(pb.add_variables(n2, "psi[" + std::to_string(d) + "]"));
  }

  Index rl = pb.begin_block(ConeKind::NonNeg, 1, "lambda>=0");
  pb.coef(rl, out.lambda_var, 1.0);
  if (!x_fixed && n1 > 0) {
    const Index nr = p.x_set.A.rows();
    if (nr > 0) {
      Index r = pb.begin_block(ConeKind::NonNeg, nr, "x_polytope");
      for (Index i = 0; i < nr; ++i) {
        pb.constant(r + i, p.x_set.b[i]);
        for (Index j = 0; j < n1; ++j) pb.coef(r + i, out.x_start + j, -p.x_set.A(i, j));
      }
    }
    Index nb = 0;
    for (Index j = 0; j < p.x_set.lb.size(); ++j)
      if (std::isfinite(p.x_set.lb[j])) ++nb;
    for (Index j = 0; j < p.x_set.ub.size(); ++j)
      if (std::isfinite(p.x_set.ub[j])) ++nb;
    if (nb > 0) {
      Index r = pb.begin_block(ConeKind::NonNeg, nb, "x_bounds");
      Index i = 0;
      for (Index j = 0; j < p.x_set.lb.size(); ++j)
        if (std::isfinite(p.x_set.lb[j])) {
          pb.coef(r + i, out.x_start + j, 1.0);
          pb.constant(r + i, -p.x_set.lb[j]);
          ++i;
        }
      for (Index j = 0; j < p.x_set.ub.size(); ++j)
        if (std::isfinite(p.x_set.ub[j])) {
          pb.coef(r + i, out.x_start + j, -1.0);
          pb.constant(r + i, p.x_set.ub[j]);
          ++i;
        }
    }
  }

  // W y_i - T(x) xi_i - h(x) >= 0
  for (Index i = 0; i < ns; ++i) {
    Index r = pb.begin_block(ConeKind::NonNeg, m, "recourse[" + std::to_string(i) + "]");
    Vector base = x_fixed ? Vector(p.recourse.T(*x_fixed) * p.samples[i] +
                                   p.recourse.h(*x_fixed))
                          : Vector(p.recourse.T.base * p.samples[i] +
                                   p.recourse.h.base);
    for (Index row = 0; row < m; ++row) {
      pb.constant(r + row, -base[row]);
      for (Index j = 0; j < n2; ++j)
        pb.coef(r + row, out.y_starts[i] + j, p.recourse.W(row, j));
      if (!x_fixed)
        for (Index n = 0; n < n1; ++n) {
          const double slope = (p.recourse.T.slopes[n] * p.samples[i])(row) +
                               p.recourse.h.slope(row, n);
          if (slope != 0.0) pb.coef(r + row, out.x_start + n, -slope);
        }
    }
  }

  // per coordinate: q.phi_d <= lambda, q.psi_d <= lambda,
  //                 T(x) e_d / w+ <= W phi_d, -T(x) e_d / w- <= W psi_d
  for (Index d = 0; d < k; ++d) {
    Index rq = pb.begin_block(ConeKind::NonNeg, 2, "dual_cap[" + std::to_string(d) + "]");
    pb.coef(rq, out.lambda_var, 1.0);
    pb.coef(rq + 1, out.lambda_var, 1.0);
    for (Index j = 0; j < n2; ++j) {
      pb.coef(rq, out.phi_starts[d] + j, -p.recourse.q[j]);
      pb.coef(rq + 1, out.psi_starts[d] + j, -p.recourse.q[j]);
    }
    Index rr = pb.begin_block(ConeKind::NonNeg, 2 * m, "dual_rows[" + std::to_string(d) + "]");
    const Vector t_base_col = p.recourse.T.base.col(d);
    for (Index row = 0; row < m; ++row) {
      // W phi_d - T(x) e_d / w+ >= 0
      for (Index j = 0; j < n2; ++j)
        pb.coef(rr + row, out.phi_starts[d] + j, p.recourse.W(row, j));
      // W psi_d + T(x) e_d / w- >= 0
      for (Index j = 0; j < n2; ++j)
        pb.coef(rr + m + row, out.psi_starts[d] + j, p.recourse.W(row, j));
      if (x_fixed) {
        const double tv = (p.recourse.T(*x_fixed))(row, d);
        pb.constant(rr + row, -tv / p.metric.w_plus);
        pb.constant(rr + m + row, tv / p.metric.w_minus);
      } else {
        pb.constant(rr + row, -t_base_col[row] / p.metric.w_plus);
        pb.constant(rr + m + row, t_base_col[row] / p.metric.w_minus);
        for (Index n = 0; n < n1; ++n) {
          const double slope = p.recourse.T.slopes[n](row, d);
          if (slope != 0.0) {
            pb.coef(rr + row, out.x_start + n, -slope / p.metric.w_plus);
            pb.coef(rr + m + row, out.x_start + n, slope / p.metric.w_minus);
          }
        }
      }
    }
  }
  out.program = pb.finish();
  return out;
}

}  // namespace

LpBuild build_lp(const TwoStageProblem& p) { return assemble(p, nullptr); }

LpBuild build_lp_fixed(const TwoStageProblem& p, const Vector& x) {
  return assemble(p, &x);
}

WassersteinLpSolution LpBuild::extract(const conic::SolveResult& r) const {
  WassersteinLpSolution sol;
  sol.status = r.status;
  sol.objective = r.primal_objective;
  if (r.status != SolveStatus::Optimal) return sol;
  sol.x = x_start >= 0 ? Vector(r.primal.segment(x_start, n1)) : x_fixed;
  sol.lambda = r.primal[lambda_var];
  for (Index s : y_starts) sol.y.push_back(r.primal.segment(s, n2));
  for (Index s : phi_starts) sol.phi.push_back(r.primal.segment(s, n2));
  for (Index s : psi_starts) sol.psi.push_back(r.primal.segment(s, n2));
  return sol;
}

double dual_norm(const Vector& z, double w_plus, double w_minus) {
  if (!(w_plus > 0) || !(w_minus > 0))
    throw precondition_error("dual norm needs positive weights");
  double v = 0.0;
  for (Index i = 0; i < z.size(); ++i)
    v = std::max({v, z[i] / w_plus, -z[i] / w_minus});
  return v;
}

double lad_value(const Vector& coef, double intercept,
                 const std::vector<Vector>& xi, const std::vector<double>& chi,
                 double eps, double w_plus, double w_minus) {
  if (xi.empty() || xi.size() != chi.size())
    throw precondition_error("LAD data must be nonempty and aligned");
  double acc = 0.0;
  for (size_t i = 0; i < xi.size(); ++i)
    acc += std::abs(coef.dot(xi[i]) + intercept - chi[i]);
  return eps * dual_norm(coef, w_plus, w_minus) +
         acc / static_cast<double>(xi.size());
}

double multitask_value(const Matrix& coef, const Vector& intercept,
                       const std::vector<Vector>& xi,
                       const std::vector<Vector>& chi, double eps,
                       double w_plus, double w_minus) {
  if (xi.empty() || xi.size() != chi.size())
    throw precondition_error("multi-task data must be nonempty and aligned");
  double reg = 0.0;
  for (Index d = 0; d < coef.cols(); ++d)
    reg = std::max(reg, coef.col(d).cwiseAbs().sum());
  double acc = 0.0;
  for (size_t i = 0; i < xi.size(); ++i)
    acc += (coef * xi[i] + intercept - chi[i]).cwiseAbs().sum();
  return eps / std::min(w_plus, w_minus) * reg +
         acc / static_cast<double>(xi.size());
}

double evaluate_fixed_x(const TwoStageProblem& p, const Vector& x) {
  check_preconditions(p);
  const Index m = p.recourse.num_rows();
  const Index n2 = p.recourse.num_recourse_vars();
  const Index k = p.recourse.uncertainty_dim();
  const Matrix t_at = p.recourse.T(x);

  // lambda* = max over coordinates and signs of
  //   sup { sign (T(x)'p)_d / w : p >= 0, W'p = q }
  double lambda_star = 0.0;
  for (Index d = 0; d < k; ++d) {
    for (int sign : {+1, -1}) {
      ProgramBuilder pb;
      const Index p0 = pb.add_variables(m, "p");
      const double w = sign > 0 ? p.metric.w_plus : p.metric.w_minus;
      for (Index i = 0; i < m; ++i)
        pb.add_objective(p0 + i, -sign * t_at(i, d) / w);  // maximize
      Index eq = pb.begin_block(ConeKind::Zero, n2, "W'p=q");
      for (Index j = 0; j < n2; ++j) {
        for (Index i = 0; i < m; ++i) pb.coef(eq + j, p0 + i, p.recourse.W(i, j));
        pb.constant(eq + j, -p.recourse.q[j]);
      }
      Index r = pb.begin_block(ConeKind::NonNeg, m, "p>=0");
      for (Index i = 0; i < m; ++i) pb.coef(r + i, p0 + i, 1.0);
      auto res = conic::solve(pb.finish());
      if (res.status == SolveStatus::DualInfeasible)
        throw solver_error(
            "inner dual LP is unbounded: recourse is not sufficiently "
            "expensive at this x");
      if (res.status == SolveStatus::PrimalInfeasible)
        throw solver_error(
            "dual-recourse feasible set is empty: recourse is not "
            "sufficiently expensive");
      if (res.status != SolveStatus::Optimal)
        throw solver_error("inner dual LP failed");
      lambda_star = std::max(lambda_star, -res.primal_objective);
    }
  }

  double avg = 0.0;
  for (const auto& xi : p.samples) {
    const double z = oracle::recourse_value(p, x, xi);
    if (!std::isfinite(z))
      throw solver_error("recourse value not finite at a sample");
    avg += z;
  }
  avg /= static_cast<double>(p.num_samples());
  return p.metric.radius * lambda_star + avg;
}

RegressionData load_regression_csv(const std::string& text, Index k) {
  if (k < 1) throw precondition_error("regression data needs k >= 1");
  RegressionData out;
  std::istringstream lines(text);
  std::string line;
  Index expected_cols = -1;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ','))
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw precondition_error("regression CSV: non-numeric field '" + field + "'");
      }
    if (row.empty()) continue;
    const Index cols = static_cast<Index>(row.size());
    if (expected_cols < 0) expected_cols = cols;
    if (cols != expected_cols)
      throw precondition_error("regression CSV: ragged rows");
    if (cols <= k)
      throw precondition_error(
          "regression CSV: need more than k columns (explanatory + response)");
    for (double v : row)
      if (!std::isfinite(v))
        throw precondition_error("regression CSV: non-finite value");
    out.xi.push_back(Eigen::Map<const Vector>(row.data(), k));
    out.response.push_back(Eigen::Map<const Vector>(row.data() + k, cols - k));
  }
  if (out.xi.empty()) throw precondition_error("regression CSV: no data rows");
  return out;
}

}  // namespace wassdro::exact_lp
