#include "wassdro/oracles.hpp"

#include "wassdro/copos.hpp"
#include "wassdro/solver.hpp"
#include "wassdro/symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wassdro::oracle {

using conic::ConeKind;
using conic::ProgramBuilder;
using conic::SolveStatus;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Index kEnumerationCap = 16384;
}  // namespace

Index SumMaxRecourse::enumeration_size() const {
  Index total = 1;
  for (const auto& t : terms) {
    total *= static_cast<Index>(t.pieces.size());
    if (total > kEnumerationCap) return total;
  }
  return total;
}

double SumMaxRecourse::value(const Vector& xi) const {
  double z = 0.0;
  for (const auto& t : terms) {
    double best = -kInf;
    for (const auto& pc : t.pieces)
      best = std::max(best, pc.slope.dot(xi) + pc.offset);
    z += best;
  }
  return z;
}

void SumMaxRecourse::validate() const {
  if (lower.size() != upper.size())
    throw precondition_error("sum-of-max: box bound sizes differ");
  if ((lower.array() > upper.array()).any())
    throw precondition_error("sum-of-max: lower bound exceeds upper bound");
  if (terms.empty()) throw precondition_error("sum-of-max: no terms");
  for (const auto& t : terms) {
    if (t.pieces.empty()) throw precondition_error("sum-of-max: empty term");
    for (const auto& pc : t.pieces)
      if (pc.slope.size() != dim())
        throw precondition_error("sum-of-max: piece dimension mismatch");
  }
  if (enumeration_size() > kEnumerationCap)
    throw precondition_error(
        "sum-of-max: piece enumeration exceeds the supported size (16384)");
}

SumMaxRecourse SumMaxRecourse::from_relu(const Matrix& a, const Vector& b,
                                         const Vector& lower,
                                         const Vector& upper) {
  SumMaxRecourse r;
  r.lower = lower;
  r.upper = upper;
  for (Index n = 0; n < a.rows(); ++n) {
    Term t;
    t.pieces.push_back({Vector::Zero(a.cols()), 0.0});
    t.pieces.push_back({a.row(n).transpose(), -b[n]});
    r.terms.push_back(std::move(t));
  }
  r.validate();
  return r;
}

SumMaxRecourse SumMaxRecourse::newsvendor_terms(const Vector& b, const Vector& s,
                                                const Vector& x,
                                                const Vector& lower,
                                                const Vector& upper) {
  SumMaxRecourse r;
  r.lower = lower;
  r.upper = upper;
  const Index k = x.size();
  for (Index n = 0; n < k; ++n) {
    Term t;
    Vector e = Vector::Zero(k);
    e[n] = -b[n];
    t.pieces.push_back({e, b[n] * x[n]});
    e[n] = s[n];
    t.pieces.push_back({e, -s[n] * x[n]});
    r.terms.push_back(std::move(t));
  }
  r.validate();
  return r;
}

double recourse_value(const TwoStageProblem& p, const Vector& x, const Vector& xi) {
  const Index n2 = p.recourse.num_recourse_vars();
  const Index m = p.recourse.num_rows();
  const Vector cost = p.recourse.Q * xi + p.recourse.q;
  const Vector rhs = p.recourse.T(x) * xi + p.recourse.h(x);

  ProgramBuilder pb;
  const Index y0 = pb.add_variables(n2, "y");
  for (Index j = 0; j < n2; ++j) pb.add_objective(y0 + j, cost[j]);
  Index r = pb.begin_block(ConeKind::NonNeg, m, "Wy>=Txi+h");
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n2; ++j) pb.coef(r + i, y0 + j, p.recourse.W(i, j));
    pb.constant(r + i, -rhs[i]);
  }
  auto res = conic::solve(pb.finish());
  if (res.status == SolveStatus::PrimalInfeasible) return kInf;
  if (res.status == SolveStatus::DualInfeasible) return -kInf;
  if (res.status != SolveStatus::Optimal)
    throw solver_error(std::string("recourse LP: backend status ") +
                       conic::status_name(res.status));

  // dual LP: max (T xi + h).p  s.t.  p >= 0, W'p = Q xi + q
  ProgramBuilder db;
  const Index p0 = db.add_variables(m, "p");
  for (Index i = 0; i < m; ++i) db.add_objective(p0 + i, -rhs[i]);
  Index eq = db.begin_block(ConeKind::Zero, n2, "W'p=cost");
  for (Index j = 0; j < n2; ++j) {
    for (Index i = 0; i < m; ++i) db.coef(eq + j, p0 + i, p.recourse.W(i, j));
    db.constant(eq + j, -cost[j]);
  }
  Index rp = db.begin_block(ConeKind::NonNeg, m, "p>=0");
  for (Index i = 0; i < m; ++i) db.coef(rp + i, p0 + i, 1.0);
  auto dres = conic::solve(db.finish());
  if (dres.status != SolveStatus::Optimal)
    throw solver_error("recourse dual LP did not solve while the primal did");
  const double dual_value = -dres.primal_objective;
  const double scale = std::max(1.0, std::abs(res.primal_objective));
  if (std::abs(dual_value - res.primal_objective) > 1e-7 * scale)
    throw solver_error("recourse primal/dual values disagree beyond 1e-7");
  return res.primal_objective;
}

SocpSolution exact_wce_summax(const SumMaxRecourse& r,
                              const std::vector<Vector>& samples, double eps) {
  r.validate();
  if (!(eps > 0)) throw precondition_error("exact oracle requires eps > 0");
  const Index k = r.dim();
  const Index combos = r.enumeration_size();
  if (combos > kEnumerationCap)
    throw precondition_error("piece enumeration exceeds the supported size");
  for (const auto& xi : samples)
    if (!((xi.array() >= r.lower.array() - 1e-9).all() &&
          (xi.array() <= r.upper.array() + 1e-9).all()))
      throw precondition_error("sample outside the box support");

  // aggregate affine pieces over the combination lattice
  std::vector<Vector> slopes;
  std::vector<double> offsets;
  slopes.reserve(combos);
  std::vector<size_t> idx(r.terms.size(), 0);
  while (true) {
    Vector a = Vector::Zero(k);
    double c = 0.0;
    for (size_t n = 0; n < r.terms.size(); ++n) {
      const auto& pc = r.terms[n].pieces[idx[n]];
      a += pc.slope;
      c += pc.offset;
    }
    slopes.push_back(std::move(a));
    offsets.push_back(c);
    size_t n = 0;
    for (; n < idx.size(); ++n) {
      if (++idx[n] < r.terms[n].pieces.size()) break;
      idx[n] = 0;
    }
    if (n == idx.size()) break;
  }

  const Index ns = static_cast<Index>(samples.size());
  ProgramBuilder pb;
  const Index lam = pb.add_variable("lambda", eps * eps);
  std::vector<Index> s_vars, th_vars, et_vars;
  for (Index i = 0; i < ns; ++i)
    s_vars.push_back(pb.add_variable("s[" + std::to_string(i) + "]",
                                     1.0 / static_cast<double>(ns)));
  Index rl = pb.begin_block(ConeKind::NonNeg, 1, "lambda>=0");
  pb.coef(rl, lam, 1.0);

  for (Index i = 0; i < ns; ++i) {
    const Vector& xi = samples[i];
    const double xi2 = xi.squaredNorm();
    for (size_t e = 0; e < slopes.size(); ++e) {
      const Index th = pb.add_variables(k, "theta");
      const Index et = pb.add_variables(k, "eta");
      th_vars.push_back(th);
      et_vars.push_back(et);
      Index rn = pb.begin_block(ConeKind::NonNeg, 2 * k, "mult>=0");
      for (Index d = 0; d < k; ++d) {
        pb.coef(rn + d, th + d, 1.0);
        pb.coef(rn + k + d, et + d, 1.0);
      }
      // w = s_i - c + lambda |xi|^2 + theta.l - eta.u >= 0
      auto put_w = [&](Index row, double sign) {
        pb.coef(row, s_vars[i], sign);
        pb.constant(row, sign * -offsets[e]);
        pb.coef(row, lam, sign * xi2);
        for (Index d = 0; d < k; ++d) {
          pb.coef(row, th + d, sign * r.lower[d]);
          pb.coef(row, et + d, sign * -r.upper[d]);
        }
      };
      Index rw = pb.begin_block(ConeKind::NonNeg, 1, "w>=0");
      put_w(rw, 1.0);
      // || [a + 2 lambda xi + theta - eta; w - lambda] || <= w + lambda
      Index rq = pb.begin_block(ConeKind::SecondOrder, k + 2, "hyperbolic");
      put_w(rq, 1.0);
      pb.coef(rq, lam, 1.0);
      for (Index d = 0; d < k; ++d) {
        pb.constant(rq + 1 + d, slopes[e][d]);
        pb.coef(rq + 1 + d, lam, 2.0 * xi[d]);
        pb.coef(rq + 1 + d, th + d, 1.0);
        pb.coef(rq + 1 + d, et + d, -1.0);
      }
      put_w(rq + k + 1, 1.0);
      pb.coef(rq + k + 1, lam, -1.0);
    }
  }
  auto res = conic::solve(pb.finish());
  if (res.status != SolveStatus::Optimal) {
    conic::SolverSettings loose;
    loose.feas_tol = 1e-6;
    loose.gap_tol = 1e-6;
    auto retry = conic::solve(pb.finish(), loose);
    if (retry.status != SolveStatus::Optimal)
      throw solver_error(std::string("exact SOCP oracle: backend status ") +
                         conic::status_name(res.status));
    res = retry;
  }
  SocpSolution sol;
  sol.lambda = res.primal[lam];
  sol.value = res.primal_objective;
  sol.provenance = "socp-enumeration combos=" + std::to_string(slopes.size()) +
                   " samples=" + std::to_string(ns) +
                   " gap=" + std::to_string(res.gap);
  size_t rec = 0;
  for (Index i = 0; i < ns; ++i)
    for (size_t e = 0; e < slopes.size(); ++e, ++rec) {
      SocpRecord sr;
      sr.s = res.primal[s_vars[i]];
      sr.theta = res.primal.segment(th_vars[rec], k);
      sr.eta = res.primal.segment(et_vars[rec], k);
      sol.records.push_back(std::move(sr));
    }
  return sol;
}

GridResult grid_wce(const TwoStageProblem& p, const Vector& x,
                    Index grid_per_dim, double lambda_tol) {
  const Index k = p.recourse.uncertainty_dim();
  if (k > 3) throw precondition_error("grid oracle supports K <= 3");
  if (grid_per_dim < 2) throw precondition_error("grid needs >= 2 points per dim");
  if (p.metric.order != 1 && p.metric.order != 2)
    throw precondition_error("grid oracle supports r in {1,2}");

  // bounding box of the support via coordinate LPs
  Vector lo(k), hi(k);
  for (Index d = 0; d < k; ++d) {
    for (int sense : {+1, -1}) {
      ProgramBuilder pb;
      const Index xi0 = pb.add_variables(k, "xi");
      pb.add_objective(xi0 + d, sense == +1 ? -1.0 : 1.0);
      Index r = pb.begin_block(ConeKind::NonNeg, k, "xi>=0");
      for (Index j = 0; j < k; ++j) pb.coef(r + j, xi0 + j, 1.0);
      if (p.support.num_rows() > 0) {
        Index rs = pb.begin_block(ConeKind::NonNeg, p.support.num_rows(), "S");
        for (Index i = 0; i < p.support.num_rows(); ++i) {
          pb.constant(rs + i, p.support.t[i]);
          for (Index j = 0; j < k; ++j)
            pb.coef(rs + i, xi0 + j, -p.support.S(i, j));
        }
      }
      auto res = conic::solve(pb.finish());
      if (res.status == SolveStatus::DualInfeasible)
        throw precondition_error("grid oracle requires a bounded support");
      if (res.status != SolveStatus::Optimal)
        throw solver_error("support bounding LP failed");
      (sense == +1 ? hi[d] : lo[d]) =
          sense == +1 ? -res.primal_objective : res.primal_objective;
    }
  }

  auto evaluate_on_grid = [&](Index n_per_dim, GridResult& out) -> double {
    std::vector<Vector> points;
    std::vector<Index> idx(k, 0);
    while (true) {
      Vector xi(k);
      for (Index d = 0; d < k; ++d)
        xi[d] = lo[d] + (hi[d] - lo[d]) * static_cast<double>(idx[d]) /
                            static_cast<double>(n_per_dim - 1);
      if (p.support.contains(xi, 1e-9)) points.push_back(xi);
      Index d = 0;
      for (; d < k; ++d) {
        if (++idx[d] < n_per_dim) break;
        idx[d] = 0;
      }
      if (d == k) break;
    }
    if (points.empty()) throw solver_error("grid of the support came up empty");

    std::vector<double> zvals(points.size());
    for (size_t g = 0; g < points.size(); ++g) {
      zvals[g] = recourse_value(p, x, points[g]);
      if (zvals[g] == kInf) {
        out.hit_infinite = true;
        return kInf;
      }
      if (zvals[g] == -kInf)
        throw solver_error(
            "recourse unbounded below at a grid point: not sufficiently "
            "expensive on the support");
    }
    const double r_exp = static_cast<double>(p.metric.order);
    auto dist = [&](const Vector& a, const Vector& b) {
      if (p.metric.norm == NormTag::Euclidean) return (a - b).norm();
      double nrm = 0.0;
      for (Index d = 0; d < k; ++d)
        nrm += std::max(p.metric.w_plus * (a[d] - b[d]),
                        -p.metric.w_minus * (a[d] - b[d]));
      return nrm;
    };
    // precompute distances^r per sample x grid point
    const size_t ns = p.samples.size();
    std::vector<std::vector<double>> dr(ns, std::vector<double>(points.size()));
    for (size_t i = 0; i < ns; ++i)
      for (size_t g = 0; g < points.size(); ++g)
        dr[i][g] = std::pow(dist(points[g], p.samples[i]), r_exp);

    auto outer = [&](double lam) {
      double acc = 0.0;
      for (size_t i = 0; i < ns; ++i) {
        double best = -kInf;
        for (size_t g = 0; g < points.size(); ++g)
          best = std::max(best, zvals[g] - lam * dr[i][g]);
        acc += best;
      }
      return std::pow(p.metric.radius, r_exp) * lam +
             acc / static_cast<double>(ns);
    };
    const double zmax = *std::max_element(zvals.begin(), zvals.end());
    const double zmin = *std::min_element(zvals.begin(), zvals.end());
    double a = 0.0;
    double b = (zmax - zmin) / std::pow(std::max(p.metric.radius, 1e-12), r_exp) + 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = outer(c1), f2 = outer(c2);
    while (b - a > lambda_tol * std::max(1.0, b)) {
      if (f1 <= f2) {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - gr * (b - a);
        f1 = outer(c1);
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + gr * (b - a);
        f2 = outer(c2);
      }
    }
    return std::min({outer(0.0), f1, f2});
  };

  GridResult out;
  const Index coarse = std::max<Index>(2, (grid_per_dim + 1) / 2);
  const double v_fine = evaluate_on_grid(grid_per_dim, out);
  out.provenance = "grid-dual n_per_dim=" + std::to_string(grid_per_dim) +
                   " lambda_tol=" + std::to_string(lambda_tol);
  if (out.hit_infinite) {
    out.value = out.refined_estimate = kInf;
    return out;
  }
  GridResult scratch;
  const double v_coarse = evaluate_on_grid(coarse, scratch);
  out.value = v_fine;
  out.refined_estimate = v_fine + (v_fine - v_coarse);
  return out;
}

double cvar_from_costs(std::vector<double> costs, double rho) {
  if (costs.empty()) throw precondition_error("CVaR of an empty sample");
  if (!(rho > 0) || rho > 1) throw precondition_error("CVaR level must be in (0,1]");
  std::sort(costs.begin(), costs.end(), std::greater<double>());
  const double n = static_cast<double>(costs.size());
  const double mass = rho * n;  // number of tail samples, fractional
  double acc = 0.0;
  double remaining = mass;
  for (double cst : costs) {
    const double take = std::min(1.0, remaining);
    acc += take * cst;
    remaining -= take;
    if (remaining <= 0) break;
  }
  return acc / mass;
}

SaaCvarResult saa_cvar(const TwoStageProblem& p, const Vector* x_fixed,
                       double rho, bool optimize_x) {
  if (!(rho > 0) || rho > 1)
    throw precondition_error("CVaR level must be in (0,1]");
  if (p.samples.empty()) throw precondition_error("no samples");
  const Index n1 = p.num_first_stage();
  const Index n2 = p.recourse.num_recourse_vars();
  const Index m = p.recourse.num_rows();
  const Index ns = p.num_samples();
  const double inv = 1.0 / (rho * static_cast<double>(ns));

  const Vector no_x;
  if (!optimize_x && x_fixed == nullptr) {
    if (n1 > 0)
      throw precondition_error("fixed-x evaluation needs the x vector");
    x_fixed = &no_x;
  }

  ProgramBuilder pb;
  Index x0 = -1;
  if (optimize_x) {
    x0 = pb.add_variables(n1, "x");
    for (Index j = 0; j < n1; ++j) pb.add_objective(x0 + j, 0.0);
  }
  const Index theta = pb.add_variable("theta", 1.0);
  std::vector<Index> y_start(ns), u_var(ns);
  for (Index i = 0; i < ns; ++i) {
    y_start[i] = pb.add_variables(n2, "y[" + std::to_string(i) + "]");
    u_var[i] = pb.add_variable("u[" + std::to_string(i) + "]", inv);
  }

  for (Index i = 0; i < ns; ++i) {
    const Vector cost = p.recourse.Q * p.samples[i] + p.recourse.q;
    // u_i >= cost.y_i - theta, u_i >= 0
    Index ru = pb.begin_block(ConeKind::NonNeg, 2, "excess");
    pb.coef(ru, u_var[i], 1.0);
    for (Index j = 0; j < n2; ++j) pb.coef(ru, y_start[i] + j, -cost[j]);
    pb.coef(ru, theta, 1.0);
    pb.coef(ru + 1, u_var[i], 1.0);
    // W y_i >= T(x) xi_i + h(x)
    Index rw = pb.begin_block(ConeKind::NonNeg, m, "recourse");
    Vector rhs_const;
    if (optimize_x) {
      rhs_const = p.recourse.T.base * p.samples[i] + p.recourse.h.base;
      for (Index n = 0; n < n1; ++n) {
        const Vector slope = p.recourse.T.slopes[n] * p.samples[i] +
                             p.recourse.h.slope.col(n);
        for (Index row = 0; row < m; ++row)
          if (slope[row] != 0.0) pb.coef(rw + row, x0 + n, -slope[row]);
      }
    } else {
      rhs_const = p.recourse.T(*x_fixed) * p.samples[i] + p.recourse.h(*x_fixed);
    }
    for (Index row = 0; row < m; ++row) {
      pb.constant(rw + row, -rhs_const[row]);
      for (Index j = 0; j < n2; ++j)
        pb.coef(rw + row, y_start[i] + j, p.recourse.W(row, j));
    }
  }
  if (optimize_x) {
    for (Index j = 0; j < n1; ++j) pb.add_objective(x0 + j, p.c[j]);
    const Index nr = p.x_set.A.rows();
    if (nr > 0) {
      Index r = pb.begin_block(ConeKind::NonNeg, nr, "x_polytope");
      for (Index i = 0; i < nr; ++i) {
        pb.constant(r + i, p.x_set.b[i]);
        for (Index j = 0; j < n1; ++j) pb.coef(r + i, x0 + j, -p.x_set.A(i, j));
      }
    }
    std::vector<std::pair<Index, double>> lohi;
    Index count = 0;
    for (Index j = 0; j < p.x_set.lb.size(); ++j)
      if (std::isfinite(p.x_set.lb[j])) ++count;
    for (Index j = 0; j < p.x_set.ub.size(); ++j)
      if (std::isfinite(p.x_set.ub[j])) ++count;
    if (count > 0) {
      Index r = pb.begin_block(ConeKind::NonNeg, count, "x_bounds");
      Index i = 0;
      for (Index j = 0; j < p.x_set.lb.size(); ++j)
        if (std::isfinite(p.x_set.lb[j])) {
          pb.coef(r + i, x0 + j, 1.0);
          pb.constant(r + i, -p.x_set.lb[j]);
          ++i;
        }
      for (Index j = 0; j < p.x_set.ub.size(); ++j)
        if (std::isfinite(p.x_set.ub[j])) {
          pb.coef(r + i, x0 + j, -1.0);
          pb.constant(r + i, p.x_set.ub[j]);
          ++i;
        }
    }
  }
  auto res = conic::solve(pb.finish());
  if (res.status != SolveStatus::Optimal)
    throw solver_error(std::string("SAA CVaR LP: backend status ") +
                       conic::status_name(res.status));
  SaaCvarResult out;
  out.value = res.primal_objective;
  if (optimize_x) out.x = res.primal.segment(x0, n1);
  return out;
}

double decision_rule_bound(const SumMaxRecourse& r,
                           const std::vector<Vector>& samples, double eps,
                           DecisionRuleDegree degree) {
  r.validate();
  if (!(eps > 0)) throw precondition_error("decision rules require eps > 0");
  const Index k = r.dim();
  const Index n2 = static_cast<Index>(r.terms.size());
  const Index ns = static_cast<Index>(samples.size());
  if (ns == 0) throw precondition_error("decision rules need samples");
  const bool quad = degree == DecisionRuleDegree::Quadratic;

  ProgramBuilder pb;
  const Index lam = pb.add_variable("lambda", eps * eps);
  Index rl = pb.begin_block(ConeKind::NonNeg, 1, "lambda>=0");
  pb.coef(rl, lam, 1.0);

  // rule per term: y_n(xi) = xi' G_n xi + g_n . xi + g0_n (G only when quad)
  const Index tri = svec_size(k);
  std::vector<Index> g0(n2), gl(n2), gq(n2, -1);
  for (Index n = 0; n < n2; ++n) {
    g0[n] = pb.add_variable("g0[" + std::to_string(n) + "]");
    gl[n] = pb.add_variables(k, "g[" + std::to_string(n) + "]");
    if (quad) gq[n] = pb.add_variables(tri, "G[" + std::to_string(n) + "]");
  }

  // affine forms describing the box: xi_d - l_d >= 0 and u_d - xi_d >= 0
  struct LinForm {
    Vector a;
    double c;
  };
  std::vector<LinForm> forms;
  for (Index d = 0; d < k; ++d) {
    Vector e = Vector::Zero(k);
    e[d] = 1.0;
    forms.push_back({e, -r.lower[d]});
    Vector f = Vector::Zero(k);
    f[d] = -1.0;
    forms.push_back({f, r.upper[d]});
  }
  const Index nf = static_cast<Index>(forms.size());
  auto form_matrix = [&](const LinForm& f) {
    Matrix m = Matrix::Zero(k + 1, k + 1);
    m.block(0, k, k, 1) = 0.5 * f.a;
    m.block(k, 0, 1, k) = 0.5 * f.a.transpose();
    m(k, k) = f.c;
    return m;
  };
  auto product_matrix = [&](const LinForm& f, const LinForm& g) {
    Matrix m = Matrix::Zero(k + 1, k + 1);
    m.topLeftCorner(k, k) =
        0.5 * (f.a * g.a.transpose() + g.a * f.a.transpose());
    const Vector border = 0.5 * (f.c * g.a + g.c * f.a);
    m.block(0, k, k, 1) = border;
    m.block(k, 0, 1, k) = border.transpose();
    m(k, k) = f.c * g.c;
    return m;
  };
  // svec basis matrix for the quadratic-coefficient variables
  std::vector<Matrix> tri_basis(tri);
  {
    Index t = 0;
    for (Index j = 0; j < k; ++j)
      for (Index i = j; i < k; ++i, ++t) {
        Matrix b = Matrix::Zero(k, k);
        if (i == j) b(i, i) = 1.0;
        else b(i, j) = b(j, i) = 1.0 / kSqrt2;
        tri_basis[t] = b;
      }
  }

  // appends multipliers and the PSD remainder certifying expr(xi) >= 0 on
  // the box, where expr is described by its (k+1)x(k+1) homogeneous matrix
  // given as a SymmetricAffine over existing variables
  auto certify = [&](wassdro::copos::SymmetricAffine expr, const std::string& name) {
    const Index m1 = pb.add_variables(nf, name + ".m1");
    const Index npair = quad ? nf * (nf + 1) / 2 : 0;
    const Index m2 = quad ? pb.add_variables(npair, name + ".m2") : -1;
    Index rn = pb.begin_block(ConeKind::NonNeg, nf + npair, name + ".m");
    for (Index i = 0; i < nf + npair; ++i) pb.coef(rn + i, m1 + i, 1.0);
    for (Index f = 0; f < nf; ++f) expr.add_term(m1 + f, -form_matrix(forms[f]));
    if (quad) {
      Index pairidx = 0;
      for (Index f = 0; f < nf; ++f)
        for (Index g2 = f; g2 < nf; ++g2, ++pairidx)
          expr.add_term(m2 + pairidx, -product_matrix(forms[f], forms[g2]));
    }
    wassdro::copos::add_psd_affine_block(pb, expr, name + ".psd");
  };

  // (a) epigraph rows: y_n(xi) - (a.xi + c) >= 0 on the box, per piece
  for (Index n = 0; n < n2; ++n)
    for (size_t pcidx = 0; pcidx < r.terms[n].pieces.size(); ++pcidx) {
      const auto& pc = r.terms[n].pieces[pcidx];
      const std::string nm =
          "epi[" + std::to_string(n) + "," + std::to_string(pcidx) + "]";
      if (!quad) {
        // exact box duality with a sign split of the slope
        const Index dp = pb.add_variables(k, nm + ".d+");
        const Index dm = pb.add_variables(k, nm + ".d-");
        Index rs = pb.begin_block(ConeKind::NonNeg, 2 * k, nm + ".sign");
        for (Index d = 0; d < k; ++d) {
          pb.coef(rs + d, dp + d, 1.0);
          pb.coef(rs + k + d, dm + d, 1.0);
        }
        Index eq = pb.begin_block(ConeKind::Zero, k, nm + ".split");
        for (Index d = 0; d < k; ++d) {
          pb.coef(eq + d, gl[n] + d, 1.0);
          pb.constant(eq + d, -pc.slope[d]);
          pb.coef(eq + d, dp + d, -1.0);
          pb.coef(eq + d, dm + d, 1.0);
        }
        Index rw = pb.begin_block(ConeKind::NonNeg, 1, nm + ".val");
        pb.coef(rw, g0[n], 1.0);
        pb.constant(rw, -pc.offset);
        for (Index d = 0; d < k; ++d) {
          pb.coef(rw, dp + d, r.lower[d]);
          pb.coef(rw, dm + d, -r.upper[d]);
        }
      } else {
        wassdro::copos::SymmetricAffine expr(k + 1);
        for (Index t = 0; t < tri; ++t) {
          Matrix coef = Matrix::Zero(k + 1, k + 1);
          coef.topLeftCorner(k, k) = tri_basis[t];
          expr.add_term(gq[n] + t, coef);
        }
        for (Index d = 0; d < k; ++d) {
          Matrix coef = Matrix::Zero(k + 1, k + 1);
          coef(d, k) = coef(k, d) = 0.5;
          expr.add_term(gl[n] + d, coef);
        }
        Matrix corner = Matrix::Zero(k + 1, k + 1);
        corner(k, k) = 1.0;
        expr.add_term(g0[n], corner);
        expr.constant.block(0, k, k, 1) = -0.5 * pc.slope;
        expr.constant.block(k, 0, 1, k) = -0.5 * pc.slope.transpose();
        expr.constant(k, k) = -pc.offset;
        certify(std::move(expr), nm);
      }
    }

  // (c) per-sample rows: s_i - sum_n y_n(xi) + lam |xi - xi_i|^2 >= 0 on box
  std::vector<Index> s_vars(ns);
  const double inv = 1.0 / static_cast<double>(ns);
  for (Index i = 0; i < ns; ++i)
    s_vars[i] = pb.add_variable("s[" + std::to_string(i) + "]", inv);

  for (Index i = 0; i < ns; ++i) {
    const Vector& xi = samples[i];
    const std::string nm = "wce[" + std::to_string(i) + "]";
    if (!quad) {
      // affine rule: the same hyperbolic construction as the exact oracle,
      // with the aggregated rule coefficients in place of the fixed piece
      const double xi2 = xi.squaredNorm();
      Index th = pb.add_variables(k, nm + ".theta");
      Index et = pb.add_variables(k, nm + ".eta");
      Index rn = pb.begin_block(ConeKind::NonNeg, 2 * k, nm + ".mult");
      for (Index d = 0; d < k; ++d) {
        pb.coef(rn + d, th + d, 1.0);
        pb.coef(rn + k + d, et + d, 1.0);
      }
      auto put_w = [&](Index row, double sign) {
        pb.coef(row, s_vars[i], sign);
        pb.coef(row, lam, sign * xi2);
        for (Index n = 0; n < n2; ++n) pb.coef(row, g0[n], -sign);
        for (Index d = 0; d < k; ++d) {
          pb.coef(row, th + d, sign * r.lower[d]);
          pb.coef(row, et + d, sign * -r.upper[d]);
        }
      };
      Index rw = pb.begin_block(ConeKind::NonNeg, 1, nm + ".w");
      put_w(rw, 1.0);
      Index rq = pb.begin_block(ConeKind::SecondOrder, k + 2, nm + ".soc");
      put_w(rq, 1.0);
      pb.coef(rq, lam, 1.0);
      for (Index d = 0; d < k; ++d) {
        for (Index n = 0; n < n2; ++n) pb.coef(rq + 1 + d, gl[n] + d, 1.0);
        pb.coef(rq + 1 + d, lam, 2.0 * xi[d]);
        pb.coef(rq + 1 + d, th + d, 1.0);
        pb.coef(rq + 1 + d, et + d, -1.0);
      }
      put_w(rq + k + 1, 1.0);
      pb.coef(rq + k + 1, lam, -1.0);
    } else {
      wassdro::copos::SymmetricAffine expr(k + 1);
      // -sum_n y_n contributions
      for (Index n = 0; n < n2; ++n) {
        for (Index t = 0; t < tri; ++t) {
          Matrix coef = Matrix::Zero(k + 1, k + 1);
          coef.topLeftCorner(k, k) = -tri_basis[t];
          expr.add_term(gq[n] + t, coef);
        }
        for (Index d = 0; d < k; ++d) {
          Matrix coef = Matrix::Zero(k + 1, k + 1);
          coef(d, k) = coef(k, d) = -0.5;
          expr.add_term(gl[n] + d, coef);
        }
        Matrix corner = Matrix::Zero(k + 1, k + 1);
        corner(k, k) = -1.0;
        expr.add_term(g0[n], corner);
      }
      // + lam (xi'xi - 2 xi_i.xi + |xi_i|^2)
      {
        Matrix coef = Matrix::Zero(k + 1, k + 1);
        coef.topLeftCorner(k, k) = Matrix::Identity(k, k);
        coef.block(0, k, k, 1) = -xi;
        coef.block(k, 0, 1, k) = -xi.transpose();
        coef(k, k) = xi.squaredNorm();
        expr.add_term(lam, std::move(coef));
      }
      Matrix corner = Matrix::Zero(k + 1, k + 1);
      corner(k, k) = 1.0;
      expr.add_term(s_vars[i], corner);
      certify(std::move(expr), nm);
    }
  }

  auto res = conic::solve(pb.finish());
  if (res.status != SolveStatus::Optimal) {
    conic::SolverSettings loose;
    loose.feas_tol = 1e-6;
    loose.gap_tol = 1e-6;
    res = conic::solve(pb.finish(), loose);
    if (res.status != SolveStatus::Optimal)
      throw solver_error(std::string("decision-rule program: backend status ") +
                         conic::status_name(res.status));
  }
  return res.primal_objective;
}

}  // namespace wassdro::oracle
