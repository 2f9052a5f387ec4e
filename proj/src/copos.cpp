#include "wassdro/copos.hpp"

#include "wassdro/symmetric.hpp"

#include <algorithm>
#include <cmath>

namespace wassdro::copos {

using conic::ConeKind;
using conic::ConicProgram;
using conic::ProgramBuilder;
using conic::SolveResult;
using conic::SolveStatus;
using conic::SolverSettings;

void SymmetricAffine::add_term(Index var, Matrix coef) {
  coef = 0.5 * (coef + coef.transpose()).eval();
  for (auto& [v, m] : terms)
    if (v == var) {
      m += coef;
      return;
    }
  terms.emplace_back(var, std::move(coef));
}

C0BlockInfo add_c0_block(ProgramBuilder& pb, const SymmetricAffine& m,
                         const std::string& name) {
  if (m.side < 1) throw precondition_error("C0 block needs side >= 1");
  C0BlockInfo info;

  // facial reduction: identically-zero diagonal entries force the PSD part
  // to vanish on that index
  std::vector<bool> reduced(m.side, false);
  for (Index j = 0; j < m.side; ++j) {
    bool zero = m.constant(j, j) == 0.0;
    for (const auto& [var, coef] : m.terms) zero = zero && coef(j, j) == 0.0;
    if (zero) {
      reduced[j] = true;
      info.reduced_indices.push_back(j);
    }
  }

  auto entry_is_zero = [&](Index i, Index j) {
    if (m.constant(i, j) != 0.0) return false;
    for (const auto& [var, coef] : m.terms)
      if (coef(i, j) != 0.0) return false;
    return true;
  };

  // sign constraints for the handled rows
  std::vector<std::pair<Index, Index>> sign_entries;
  for (Index j : info.reduced_indices)
    for (Index k = 0; k < m.side; ++k) {
      if (k == j || (reduced[k] && k < j)) continue;
      if (entry_is_zero(j, k)) continue;
      sign_entries.emplace_back(j, k);
    }
  if (!sign_entries.empty()) {
    Index r = pb.begin_block(ConeKind::NonNeg,
                             static_cast<Index>(sign_entries.size()),
                             name + ".face");
    for (size_t e = 0; e < sign_entries.size(); ++e) {
      const auto [i, j] = sign_entries[e];
      pb.constant(r + static_cast<Index>(e), m.constant(i, j));
      for (const auto& [var, coef] : m.terms)
        if (coef(i, j) != 0.0) pb.coef(r + static_cast<Index>(e), var, coef(i, j));
    }
  }

  std::vector<Index> keep;
  for (Index j = 0; j < m.side; ++j)
    if (!reduced[j]) keep.push_back(j);
  info.psd_side = static_cast<Index>(keep.size());
  if (keep.empty()) return info;

  const Index side = info.psd_side;
  const Index tri = svec_size(side);
  info.slack_start = pb.add_variables(tri, name + ".n");

  // svec row layout over the kept minor
  const Index rp = pb.begin_block(ConeKind::Psd, side, name + ".p");
  Index row = 0;
  std::vector<std::pair<Index, Index>> positions(tri);
  for (Index j = 0; j < side; ++j)
    for (Index i = j; i < side; ++i) positions[row++] = {keep[i], keep[j]};

  for (Index e = 0; e < tri; ++e) {
    const auto [i, j] = positions[e];
    const double scale = (i == j) ? 1.0 : kSqrt2;
    pb.constant(rp + e, scale * m.constant(i, j));
    for (const auto& [var, coef] : m.terms)
      if (coef(i, j) != 0.0) pb.coef(rp + e, var, scale * coef(i, j));
    pb.coef(rp + e, info.slack_start + e, -1.0);
  }
  const Index rn = pb.begin_block(ConeKind::NonNeg, tri, name + ".nn");
  for (Index e = 0; e < tri; ++e) pb.coef(rn + e, info.slack_start + e, 1.0);
  return info;
}

void add_psd_affine_block(ProgramBuilder& pb, const SymmetricAffine& m,
                          const std::string& name) {
  const Index side = m.side;
  const Index rp = pb.begin_block(ConeKind::Psd, side, name);
  Index row = 0;
  for (Index j = 0; j < side; ++j)
    for (Index i = j; i < side; ++i, ++row) {
      const double scale = (i == j) ? 1.0 : kSqrt2;
      if (m.constant(i, j) != 0.0) pb.constant(rp + row, scale * m.constant(i, j));
      for (const auto& [var, coef] : m.terms)
        if (coef(i, j) != 0.0) pb.coef(rp + row, var, scale * coef(i, j));
    }
}

void DisutilitySpec::validate() const {
  if (pieces.empty()) throw precondition_error("disutility needs >= 1 piece");
  bool nonzero = false;
  for (const auto& pc : pieces) {
    if (pc.alpha < 0) throw precondition_error("disutility slopes must be >= 0");
    nonzero = nonzero || pc.alpha > 0;
  }
  if (!nonzero)
    throw precondition_error("disutility slope vector must not be zero");
}

namespace {

struct Workspace {
  ExtendedData ext;
  Index k = 0, mj = 0, nj = 0, n1 = 0, num_samples = 0;
  Index block_side = 0;
  std::vector<double> sample_sqnorm;
};

Workspace make_workspace(const TwoStageProblem& p) {
  if (p.metric.order != 2 || p.metric.norm != NormTag::Euclidean)
    throw precondition_error(
        "copositive path requires the 2-Wasserstein metric with the "
        "euclidean reference norm");
  if (!(p.metric.radius > 0))
    throw precondition_error(
        "radius must be strictly positive: the dual reformulation of the "
        "worst-case expectation assumes eps > 0 for strong duality");
  if (p.samples.empty()) throw precondition_error("at least one sample needed");
  Workspace w;
  w.ext = extend(p);
  w.k = p.recourse.uncertainty_dim();
  w.mj = w.ext.W_ext.rows();
  w.nj = w.ext.W_ext.cols();
  w.n1 = p.num_first_stage();
  w.num_samples = p.num_samples();
  w.block_side = w.k + w.mj + 1;
  for (const auto& xi : p.samples) {
    if (xi.size() != w.k) throw precondition_error("sample dimension mismatch");
    w.sample_sqnorm.push_back(xi.squaredNorm());
  }
  return w;
}

void add_first_stage_rows(ProgramBuilder& pb, const TwoStageProblem& p,
                          Index x_start) {
  const Index n1 = p.num_first_stage();
  const Index nr = p.x_set.A.rows();
  if (nr > 0) {
    Index r = pb.begin_block(ConeKind::NonNeg, nr, "x_polytope");
    for (Index i = 0; i < nr; ++i) {
      pb.constant(r + i, p.x_set.b[i]);
      for (Index j = 0; j < n1; ++j) pb.coef(r + i, x_start + j, -p.x_set.A(i, j));
    }
  }
  std::vector<std::pair<Index, double>> lo, hi;
  for (Index j = 0; j < p.x_set.lb.size(); ++j)
    if (std::isfinite(p.x_set.lb[j])) lo.emplace_back(j, p.x_set.lb[j]);
  for (Index j = 0; j < p.x_set.ub.size(); ++j)
    if (std::isfinite(p.x_set.ub[j])) hi.emplace_back(j, p.x_set.ub[j]);
  if (!lo.empty() || !hi.empty()) {
    Index r = pb.begin_block(ConeKind::NonNeg,
                             static_cast<Index>(lo.size() + hi.size()),
                             "x_bounds");
    Index i = 0;
    for (auto [j, v] : lo) {
      pb.coef(r + i, x_start + j, 1.0);
      pb.constant(r + i, -v);
      ++i;
    }
    for (auto [j, v] : hi) {
      pb.coef(r + i, x_start + j, -1.0);
      pb.constant(r + i, v);
      ++i;
    }
  }
}

// One copositive block of Eq-(3.2) shape for sample i with piece slope
// alpha: x enters through T and h unless x_fixed is supplied.
SymmetricAffine make_block(const Workspace& w, const TwoStageProblem& p,
                           Index sample, double alpha, double delta,
                           Index x_start, const Vector* x_fixed,
                           Index lambda_var, Index psi_start, Index phi_start,
                           const std::vector<std::pair<Index, double>>& corner_terms,
                           double corner_const) {
  const Index k = w.k, mj = w.mj, nj = w.nj;
  const Index side = w.block_side;
  const Vector& xi = p.samples[sample];
  SymmetricAffine m(side);

  // constant pieces
  Matrix t0 = alpha * w.ext.T_ext.base;
  Vector h0 = alpha * w.ext.h_ext.base;
  if (x_fixed) {
    t0 = alpha * w.ext.T_ext(*x_fixed);
    h0 = alpha * w.ext.h_ext(*x_fixed);
  }
  m.constant.block(0, k, k, mj) = -0.5 * t0.transpose();
  m.constant.block(k, 0, mj, k) = -0.5 * t0;
  m.constant.block(k, k, mj, mj) = delta * Matrix::Identity(mj, mj);
  m.constant.block(k, k + mj, mj, 1) = -0.5 * h0;
  m.constant.block(k + mj, k, 1, mj) = -0.5 * h0.transpose();
  m.constant(side - 1, side - 1) = corner_const;

  // lambda: identity on the xi block and the anchor column
  {
    Matrix coef = Matrix::Zero(side, side);
    coef.topLeftCorner(k, k) = Matrix::Identity(k, k);
    coef.block(0, k + mj, k, 1) = -xi;
    coef.block(k + mj, 0, 1, k) = -xi.transpose();
    m.add_term(lambda_var, std::move(coef));
  }
  // x through T(x) and h(x)
  if (!x_fixed) {
    for (Index n = 0; n < w.n1; ++n) {
      Matrix coef = Matrix::Zero(side, side);
      const Matrix tn = alpha * w.ext.T_ext.slopes[n];
      coef.block(0, k, k, mj) = -0.5 * tn.transpose();
      coef.block(k, 0, mj, k) = -0.5 * tn;
      const Vector hn = alpha * w.ext.h_ext.slope.col(n);
      coef.block(k, k + mj, mj, 1) = -0.5 * hn;
      coef.block(k + mj, k, 1, mj) = -0.5 * hn.transpose();
      if (!coef.isZero(0.0)) m.add_term(x_start + n, std::move(coef));
    }
  }
  // psi_j: -(1/2) Q~' e_j in the anchor column, (1/2) W~ e_j in the middle
  for (Index j = 0; j < nj; ++j) {
    Matrix coef = Matrix::Zero(side, side);
    const Vector qrow = w.ext.Q_ext.row(j).transpose();
    coef.block(0, k + mj, k, 1) = -0.5 * qrow;
    coef.block(k + mj, 0, 1, k) = -0.5 * qrow.transpose();
    const Vector wcol = w.ext.W_ext.col(j);
    coef.block(k, k + mj, mj, 1) += 0.5 * wcol;
    coef.block(k + mj, k, 1, mj) += 0.5 * wcol.transpose();
    m.add_term(psi_start + j, std::move(coef));
  }
  // phi_j: Q~_j' Q~_j on the xi block, -Q~_j' W~_:j' coupling, W~ e_j e_j' W~'
  for (Index j = 0; j < nj; ++j) {
    Matrix coef = Matrix::Zero(side, side);
    const Vector qrow = w.ext.Q_ext.row(j).transpose();
    const Vector wcol = w.ext.W_ext.col(j);
    coef.topLeftCorner(k, k) = qrow * qrow.transpose();
    coef.block(0, k, k, mj) = -qrow * wcol.transpose();
    coef.block(k, 0, mj, k) = -wcol * qrow.transpose();
    coef.block(k, k, mj, mj) = wcol * wcol.transpose();
    m.add_term(phi_start + j, std::move(coef));
  }
  for (const auto& [var, cval] : corner_terms) {
    Matrix coef = Matrix::Zero(side, side);
    coef(side - 1, side - 1) = cval;
    m.add_term(var, std::move(coef));
  }
  return m;
}

CoposBuild assemble_risk_neutral(const TwoStageProblem& p, const Vector* x_fixed,
                                 double delta, bool include_first_stage) {
  if (delta < 0) throw precondition_error("delta must be >= 0");
  Workspace w = make_workspace(p);
  ProgramBuilder pb;
  CoposBuild out;
  out.delta = delta;
  out.nj = w.nj;
  out.bound_kind = delta == 0.0 ? "upper bound" : "heuristic lower estimate";
  const double inv_i = 1.0 / static_cast<double>(w.num_samples);
  const double eps = p.metric.radius;

  if (!x_fixed) {
    out.x_start = pb.add_variables(w.n1, "x");
    out.n1 = w.n1;
    if (include_first_stage)
      for (Index j = 0; j < w.n1; ++j) pb.add_objective(out.x_start + j, p.c[j]);
  } else {
    out.x_fixed = *x_fixed;
    if (x_fixed->size() != w.n1)
      throw precondition_error("fixed x has wrong dimension");
    if (include_first_stage && w.n1 > 0)
      pb.add_objective_constant(p.c.dot(*x_fixed));
  }

  double lambda_obj = eps * eps;
  for (Index i = 0; i < w.num_samples; ++i)
    lambda_obj -= inv_i * w.sample_sqnorm[i];
  out.lambda_var = pb.add_variable("lambda", lambda_obj);

  const Vector qsq = w.ext.q_ext.array().square().matrix();
  for (Index i = 0; i < w.num_samples; ++i) {
    out.s_vars.push_back(pb.add_variable("s[" + std::to_string(i) + "]", inv_i));
    Index psi = pb.add_variables(w.nj, "psi[" + std::to_string(i) + "]");
    Index phi = pb.add_variables(w.nj, "phi[" + std::to_string(i) + "]");
    out.psi_starts.push_back(psi);
    out.phi_starts.push_back(phi);
    for (Index j = 0; j < w.nj; ++j) {
      pb.add_objective(psi + j, inv_i * w.ext.q_ext[j]);
      pb.add_objective(phi + j, inv_i * qsq[j]);
    }
  }

  Index rl = pb.begin_block(ConeKind::NonNeg, 1, "lambda>=0");
  pb.coef(rl, out.lambda_var, 1.0);
  if (!x_fixed && include_first_stage) add_first_stage_rows(pb, p, out.x_start);

  for (Index i = 0; i < w.num_samples; ++i) {
    auto blk = make_block(w, p, i, 1.0, delta, out.x_start, x_fixed,
                          out.lambda_var, out.psi_starts[i], out.phi_starts[i],
                          {{out.s_vars[i], 1.0}}, 0.0);
    add_c0_block(pb, blk, "block[" + std::to_string(i) + "]");
  }
  out.program = pb.finish();
  return out;
}

}  // namespace

CoposBuild build_wce_upper(const TwoStageProblem& p, const Vector& x, double delta) {
  return assemble_risk_neutral(p, &x, delta, false);
}

CoposBuild build_full_problem(const TwoStageProblem& p, double delta) {
  if (p.num_first_stage() == 0) {
    Vector empty;
    auto b = assemble_risk_neutral(p, &empty, delta, true);
    return b;
  }
  return assemble_risk_neutral(p, nullptr, delta, true);
}

CoposBuild build_risk_averse(const TwoStageProblem& p, const DisutilitySpec& u,
                             double delta) {
  u.validate();
  if (delta < 0) throw precondition_error("delta must be >= 0");
  Workspace w = make_workspace(p);
  ProgramBuilder pb;
  CoposBuild out;
  out.delta = delta;
  out.nj = w.nj;
  out.bound_kind = delta == 0.0 ? "upper bound" : "heuristic lower estimate";
  const double inv_i = 1.0 / static_cast<double>(w.num_samples);
  const double eps = p.metric.radius;
  const Index t_count = static_cast<Index>(u.pieces.size());

  const bool symbolic_x = w.n1 > 0;
  Vector empty;
  const Vector* x_fixed = symbolic_x ? nullptr : &empty;
  if (symbolic_x) {
    out.x_start = pb.add_variables(w.n1, "x");
    out.n1 = w.n1;
    for (Index j = 0; j < w.n1; ++j) pb.add_objective(out.x_start + j, p.c[j]);
  }
  out.theta_var = pb.add_variable("theta", 1.0);
  out.lambda_var = pb.add_variable("lambda", eps * eps);

  const Vector qsq = w.ext.q_ext.array().square().matrix();
  std::vector<std::vector<Index>> kappa(w.num_samples);
  for (Index i = 0; i < w.num_samples; ++i) {
    out.s_vars.push_back(pb.add_variable("s[" + std::to_string(i) + "]", inv_i));
    kappa[i].resize(t_count);
    for (Index t = 0; t < t_count; ++t) {
      kappa[i][t] = pb.add_variable(
          "kappa[" + std::to_string(i) + "," + std::to_string(t) + "]");
      out.psi_starts.push_back(pb.add_variables(
          w.nj, "psi[" + std::to_string(i) + "," + std::to_string(t) + "]"));
      out.phi_starts.push_back(pb.add_variables(
          w.nj, "phi[" + std::to_string(i) + "," + std::to_string(t) + "]"));
    }
  }

  Index rl = pb.begin_block(ConeKind::NonNeg, 1, "lambda>=0");
  pb.coef(rl, out.lambda_var, 1.0);
  if (symbolic_x) add_first_stage_rows(pb, p, out.x_start);

  // kappa linkage: kappa_it = alpha_t theta - beta_t - q~'psi_it
  //                + lambda |xi_i|^2 - sum_j phi_itj q~_j^2
  for (Index i = 0; i < w.num_samples; ++i)
    for (Index t = 0; t < t_count; ++t) {
      const Index rec = i * t_count + t;
      Index r = pb.begin_block(ConeKind::Zero, 1,
                               "kappa_link[" + std::to_string(i) + "," +
                                   std::to_string(t) + "]");
      pb.coef(r, kappa[i][t], 1.0);
      pb.coef(r, out.theta_var, -u.pieces[t].alpha);
      pb.constant(r, u.pieces[t].beta);
      for (Index j = 0; j < w.nj; ++j) {
        pb.coef(r, out.psi_starts[rec] + j, w.ext.q_ext[j]);
        pb.coef(r, out.phi_starts[rec] + j, qsq[j]);
      }
      pb.coef(r, out.lambda_var, -w.sample_sqnorm[i]);
    }

  for (Index i = 0; i < w.num_samples; ++i)
    for (Index t = 0; t < t_count; ++t) {
      const Index rec = i * t_count + t;
      auto blk = make_block(
          w, p, i, u.pieces[t].alpha, delta, out.x_start, x_fixed,
          out.lambda_var, out.psi_starts[rec], out.phi_starts[rec],
          {{out.s_vars[i], 1.0}, {kappa[i][t], 1.0}}, 0.0);
      add_c0_block(pb, blk,
                   "block[" + std::to_string(i) + "," + std::to_string(t) + "]");
    }
  out.program = pb.finish();
  return out;
}

CopositiveSolution CoposBuild::extract(const SolveResult& r) const {
  CopositiveSolution sol;
  sol.status = r.status;
  sol.delta = delta;
  sol.objective = r.primal_objective;
  if (r.status != SolveStatus::Optimal) return sol;
  sol.x = x_start >= 0 ? Vector(r.primal.segment(x_start, n1)) : x_fixed;
  sol.lambda = r.primal[lambda_var];
  if (theta_var >= 0) sol.theta = r.primal[theta_var];
  const size_t t_count = s_vars.empty() ? 0 : psi_starts.size() / s_vars.size();
  for (size_t rec = 0; rec < psi_starts.size(); ++rec) {
    SampleRecord sr;
    sr.s = r.primal[s_vars[t_count == 0 ? rec : rec / t_count]];
    sr.psi = r.primal.segment(psi_starts[rec], nj);
    sr.phi = r.primal.segment(phi_starts[rec], nj);
    sol.records.push_back(std::move(sr));
  }
  return sol;
}

SolveResult solve_conic(const ConicProgram& prog) {
  SolverSettings strict;
  auto res = conic::solve(prog, strict);
  if (res.status == SolveStatus::IterLimit ||
      res.status == SolveStatus::NumericalTrouble) {
    SolverSettings loose;
    loose.feas_tol = 1e-6;
    loose.gap_tol = 1e-6;
    auto retry = conic::solve(prog, loose);
    if (retry.status != SolveStatus::NumericalTrouble) return retry;
  }
  return res;
}

SolveResult CoposBuild::solve(const SolverSettings* settings) const {
  return settings ? conic::solve(program, *settings) : solve_conic(program);
}

std::vector<double> default_delta_schedule() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0};
}

RefinementResult delta_refinement(const TwoStageProblem& p,
                                  std::vector<double> schedule,
                                  double stop_rel_tol) {
  if (schedule.empty()) throw precondition_error("empty delta schedule");
  for (size_t i = 0; i + 1 < schedule.size(); ++i)
    if (schedule[i] <= schedule[i + 1])
      throw precondition_error("delta schedule must be strictly decreasing");
  for (size_t i = 0; i + 1 < schedule.size(); ++i)
    if (schedule[i] <= 0)
      throw precondition_error("only the last delta may be zero");
  if (schedule.back() < 0) throw precondition_error("delta must be >= 0");

  RefinementResult out;
  bool stopped = false;
  for (double delta : schedule) {
    if (stopped && delta > 0) continue;
    auto build = build_full_problem(p, delta);
    auto res = solve_conic(build.program);
    auto sol = build.extract(res);
    RefinementStep step{delta, res.status, res.primal_objective, sol.x};
    if (res.status == SolveStatus::Optimal) {
      if (out.has_candidate && delta > 0) {
        const double prev = out.value;
        if (std::abs(res.primal_objective - prev) <=
            stop_rel_tol * std::max(1.0, std::abs(res.primal_objective)))
          stopped = true;
      }
      out.has_candidate = true;
      out.x_candidate = sol.x;
      out.value = res.primal_objective;
      out.delta_used = delta;
      if (delta == 0.0) out.delta_zero_solved = true;
    } else {
      step.value = std::numeric_limits<double>::quiet_NaN();
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

TwoStageProblem robust_mode(const TwoStageProblem& p) {
  const Index k = p.recourse.uncertainty_dim();
  Vector lo(k), hi(k);
  for (Index d = 0; d < k; ++d) {
    for (int sense : {+1, -1}) {
      ProgramBuilder pb;
      const Index xi = pb.add_variables(k, "xi");
      pb.add_objective(xi + d, sense == +1 ? -1.0 : 1.0);  // max / min
      Index r = pb.begin_block(ConeKind::NonNeg, k, "xi>=0");
      for (Index j = 0; j < k; ++j) pb.coef(r + j, xi + j, 1.0);
      const Index nr = p.support.num_rows();
      if (nr > 0) {
        Index rs = pb.begin_block(ConeKind::NonNeg, nr, "Sxi<=t");
        for (Index i = 0; i < nr; ++i) {
          pb.constant(rs + i, p.support.t[i]);
          for (Index j = 0; j < k; ++j)
            pb.coef(rs + i, xi + j, -p.support.S(i, j));
        }
      }
      auto res = conic::solve(pb.finish());
      if (res.status == SolveStatus::DualInfeasible)
        throw precondition_error("support unbounded, robust mode unavailable");
      if (res.status != SolveStatus::Optimal)
        throw solver_error("support bounding LP failed");
      (sense == +1 ? hi[d] : lo[d]) =
          sense == +1 ? -res.primal_objective : res.primal_objective;
    }
  }

  // project the box midpoint into the support
  const Vector mid = 0.5 * (lo + hi);
  Vector anchor;
  {
    ProgramBuilder pb;
    const Index xi = pb.add_variables(k, "xi");
    const Index t = pb.add_variable("t", 1.0);
    Index rq = pb.begin_block(ConeKind::SecondOrder, k + 1, "dist");
    pb.coef(rq, t, 1.0);
    for (Index j = 0; j < k; ++j) {
      pb.coef(rq + 1 + j, xi + j, 1.0);
      pb.constant(rq + 1 + j, -mid[j]);
    }
    Index r = pb.begin_block(ConeKind::NonNeg, k, "xi>=0");
    for (Index j = 0; j < k; ++j) pb.coef(r + j, xi + j, 1.0);
    const Index nr = p.support.num_rows();
    if (nr > 0) {
      Index rs = pb.begin_block(ConeKind::NonNeg, nr, "Sxi<=t");
      for (Index i = 0; i < nr; ++i) {
        pb.constant(rs + i, p.support.t[i]);
        for (Index j = 0; j < k; ++j) pb.coef(rs + i, xi + j, -p.support.S(i, j));
      }
    }
    auto res = conic::solve(pb.finish());
    if (res.status == SolveStatus::Optimal) {
      anchor = res.primal.segment(0, k);
      anchor = anchor.cwiseMax(0.0);
    } else {
      anchor = 0.5 * (lo + hi);  // box corners are feasible for box supports
    }
  }

  TwoStageProblem out = p;
  out.samples = {anchor};
  const double eps = std::max(1e-6, (hi - lo).norm());
  out.metric.radius = eps;
  out.metric.order = 2;
  out.metric.norm = NormTag::Euclidean;
  return out;
}

}  // namespace wassdro::copos
