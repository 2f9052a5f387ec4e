#include "wassdro/solver.hpp"

#include "wassdro/symmetric.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wassdro::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepFraction = 0.99;

struct Block {
  ConeKind kind;
  Index off;   // first row
  Index rows;  // row count (svec rows for Psd)
  Index side;  // matrix side for Psd, else 0
};

// Nesterov-Todd scaling state for one cone block.
struct Scaling {
  // NonNeg: W = diag(d)
  Vector d;
  // SecondOrder: W = sqrt(beta) (2 v v' - J), J = diag(1, -1, ..., -1)
  Vector v;
  Vector wbar;
  double beta = 1.0;
  // Psd: W u = svec(r' U r); rti = r^{-T}; lambda matrix is diag(sigma)
  Matrix r, rti;
  Vector sigma;

  Vector lambda;  // scaled point, lambda = W^{-T} s = W w
  Matrix h;       // dense W'W for the KKT system
};

Vector soc_jmul(const Vector& u) {
  Vector r = -u;
  r[0] = u[0];
  return r;
}

double soc_residual(const Vector& u) { return u[0] - u.tail(u.size() - 1).norm(); }

// --- per-block cone margin (strict interior distance proxy) ---------------
double cone_margin(const Block& b, const Vector& u) {
  switch (b.kind) {
    case ConeKind::Zero:
      return kInf;
    case ConeKind::NonNeg:
      return u.size() == 0 ? kInf : u.minCoeff();
    case ConeKind::SecondOrder:
      return soc_residual(u);
    case ConeKind::Psd: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(smat(u), Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff();
    }
  }
  return 0.0;
}

void bring_to_cone(const Block& b, Eigen::Ref<Vector> u) {
  if (b.kind == ConeKind::Zero) {
    u.setZero();
    return;
  }
  const double m = cone_margin(b, u);
  const double thresh = 1e-8 * std::max(1.0, u.norm());
  if (m > thresh) return;
  const double bump = 1.0 - std::min(m, 0.0);
  if (b.kind == ConeKind::NonNeg) {
    u.array() += bump;
  } else if (b.kind == ConeKind::SecondOrder) {
    u[0] += bump;
  } else {
    Matrix mtx = smat(u);
    mtx.diagonal().array() += bump;
    u = svec(mtx);
  }
}

Vector cone_identity(const Block& b) {
  Vector e = Vector::Zero(b.rows);
  switch (b.kind) {
    case ConeKind::Zero:
      break;
    case ConeKind::NonNeg:
      e.setOnes();
      break;
    case ConeKind::SecondOrder:
      e[0] = 1.0;
      break;
    case ConeKind::Psd:
      e = svec(Matrix::Identity(b.side, b.side));
      break;
  }
  return e;
}

// symmetric Kronecker-style operator: column p of the result is
// svec(G B_p G) where B_p is the p-th svec basis matrix.
Matrix sym_congruence_operator(const Matrix& g) {
  const Index k = g.rows();
  const Index d = svec_size(k);
  Matrix h(d, d);
  Index p = 0;
  for (Index j = 0; j < k; ++j) {
    for (Index i = j; i < k; ++i) {
      Matrix gbg;
      if (i == j) {
        gbg = g.col(i) * g.row(i);
      } else {
        gbg = (g.col(i) * g.row(j) + g.col(j) * g.row(i)) / kSqrt2;
      }
      h.col(p++) = svec_symmetrized(gbg);
    }
  }
  return h;
}

// --- NT scaling -----------------------------------------------------------
bool compute_scaling(const Block& b, const Vector& s, const Vector& w, Scaling& sc) {
  switch (b.kind) {
    case ConeKind::Zero:
      sc.lambda.resize(0);
      sc.h.resize(0, 0);
      return true;
    case ConeKind::NonNeg: {
      if ((s.array() <= 0).any() || (w.array() <= 0).any()) return false;
      sc.d = (s.array() / w.array()).sqrt();
      sc.lambda = (s.array() * w.array()).sqrt();
      sc.h = sc.d.array().square().matrix().asDiagonal();
      return true;
    }
    case ConeKind::SecondOrder: {
      const double a2 = s[0] * s[0] - s.tail(s.size() - 1).squaredNorm();
      const double b2 = w[0] * w[0] - w.tail(w.size() - 1).squaredNorm();
      if (a2 <= 0 || b2 <= 0 || s[0] <= 0 || w[0] <= 0) return false;
      const double a = std::sqrt(a2), bb = std::sqrt(b2);
      Vector sbar = s / a, wbar2 = w / bb;
      const double gamma = std::sqrt((1.0 + sbar.dot(wbar2)) / 2.0);
      sc.wbar = (sbar + soc_jmul(wbar2)) / (2.0 * gamma);
      sc.v = sc.wbar;
      sc.v[0] += 1.0;
      sc.v /= std::sqrt(2.0 * sc.v[0]);
      sc.beta = a / bb;
      // lambda
      const double denom = sbar[0] + wbar2[0] + 2.0 * gamma;
      Vector lam(s.size());
      lam[0] = gamma;
      lam.tail(s.size() - 1) = ((wbar2[0] + gamma) * sbar.tail(s.size() - 1) +
                                (sbar[0] + gamma) * wbar2.tail(s.size() - 1)) /
                               denom;
      sc.lambda = std::sqrt(a * bb) * lam;
      // W'W = beta (2 wbar wbar' - J)
      Matrix j = -Matrix::Identity(s.size(), s.size());
      j(0, 0) = 1.0;
      sc.h = sc.beta * (2.0 * sc.wbar * sc.wbar.transpose() - j);
      return true;
    }
    case ConeKind::Psd: {
      const Matrix smtx = smat(s), wmtx = smat(w);
      Eigen::LLT<Matrix> ls(smtx), lw(wmtx);
      if (ls.info() != Eigen::Success || lw.info() != Eigen::Success) return false;
      const Matrix lsm = ls.matrixL(), lwm = lw.matrixL();
      Eigen::JacobiSVD<Matrix> svd(lwm.transpose() * lsm,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      sc.sigma = svd.singularValues();
      if (sc.sigma.minCoeff() <= 0) return false;
      const Vector isqrt = sc.sigma.array().sqrt().inverse();
      sc.r = lsm * svd.matrixV() * isqrt.asDiagonal();
      sc.rti = lwm * svd.matrixU() * isqrt.asDiagonal();
      sc.lambda = svec(Matrix(sc.sigma.asDiagonal()));
      sc.h = sym_congruence_operator(sc.r * sc.r.transpose());
      return true;
    }
  }
  return false;
}

// --- scaled-space linear maps ----------------------------------------------
Vector apply_w(const Block& b, const Scaling& sc, const Vector& u) {
  switch (b.kind) {
    case ConeKind::Zero: return u;
    case ConeKind::NonNeg: return sc.d.cwiseProduct(u);
    case ConeKind::SecondOrder:
      return std::sqrt(sc.beta) * (2.0 * sc.v * sc.v.dot(u) - soc_jmul(u));
    case ConeKind::Psd:
      return svec_symmetrized(sc.r.transpose() * smat(u) * sc.r);
  }
  return u;
}

Vector apply_wt(const Block& b, const Scaling& sc, const Vector& u) {
  if (b.kind == ConeKind::Psd)
    return svec_symmetrized(sc.r * smat(u) * sc.r.transpose());
  return apply_w(b, sc, u);  // diagonal and SOC scalings are symmetric
}

// --- Jordan algebra ---------------------------------------------------------
Vector jordan_product(const Block& b, const Vector& u, const Vector& v) {
  switch (b.kind) {
    case ConeKind::Zero: return u;
    case ConeKind::NonNeg: return u.cwiseProduct(v);
    case ConeKind::SecondOrder: {
      Vector r(u.size());
      r[0] = u.dot(v);
      r.tail(u.size() - 1) =
          u[0] * v.tail(v.size() - 1) + v[0] * u.tail(u.size() - 1);
      return r;
    }
    case ConeKind::Psd: {
      const Matrix um = smat(u), vm = smat(v);
      return svec_symmetrized(0.5 * (um * vm + vm * um));
    }
  }
  return u;
}

// solve lambda o x = rhs
Vector jordan_solve(const Block& b, const Scaling& sc, const Vector& rhs) {
  const Vector& lam = sc.lambda;
  switch (b.kind) {
    case ConeKind::Zero: return rhs;
    case ConeKind::NonNeg: return rhs.cwiseQuotient(lam);
    case ConeKind::SecondOrder: {
      const Index n = lam.size();
      const double det = lam[0] * lam[0] - lam.tail(n - 1).squaredNorm();
      Vector x(n);
      x[0] = (lam[0] * rhs[0] - lam.tail(n - 1).dot(rhs.tail(n - 1))) / det;
      x.tail(n - 1) = (rhs.tail(n - 1) - x[0] * lam.tail(n - 1)) / lam[0];
      return x;
    }
    case ConeKind::Psd: {
      // lambda is diagonal in the scaled frame: X_ij = 2 R_ij / (sig_i+sig_j)
      const Index k = b.side;
      Vector x(rhs.size());
      Index p = 0;
      for (Index j = 0; j < k; ++j)
        for (Index i = j; i < k; ++i, ++p)
          x[p] = 2.0 * rhs[p] / (sc.sigma[i] + sc.sigma[j]);
      return x;
    }
  }
  return rhs;
}

// sup { alpha >= 0 : point + alpha * dir in cone }, point strictly interior
double max_step(const Block& b, const Vector& point, const Vector& dir) {
  switch (b.kind) {
    case ConeKind::Zero:
      return kInf;
    case ConeKind::NonNeg: {
      double step = kInf;
      for (Index i = 0; i < point.size(); ++i)
        if (dir[i] < 0) step = std::min(step, -point[i] / dir[i]);
      return step;
    }
    case ConeKind::SecondOrder: {
      const Index n = point.size();
      const double a = dir[0] * dir[0] - dir.tail(n - 1).squaredNorm();
      const double bq =
          2.0 * (point[0] * dir[0] - point.tail(n - 1).dot(dir.tail(n - 1)));
      const double c = point[0] * point[0] - point.tail(n - 1).squaredNorm();
      double root = kInf;
      if (std::abs(a) < 1e-300) {
        if (bq < 0) root = -c / bq;
      } else {
        const double disc = bq * bq - 4.0 * a * c;
        if (disc >= 0) {
          const double sq = std::sqrt(disc);
          for (double cand : {(-bq - sq) / (2.0 * a), (-bq + sq) / (2.0 * a)})
            if (cand > 0) root = std::min(root, cand);
        }
      }
      // also the apex constraint point0 + alpha dir0 >= 0
      if (dir[0] < 0) root = std::min(root, -point[0] / dir[0]);
      return root;
    }
    case ConeKind::Psd: {
      // point in the scaled frame is diag(sigma); for general symmetric
      // points fall back to a pencil eigenvalue computation.
      const Matrix pm = smat(point), dm = smat(dir);
      Eigen::LLT<Matrix> llt(pm);
      if (llt.info() != Eigen::Success) return 0.0;
      const Matrix l = llt.matrixL();
      const Matrix m =
          l.triangularView<Eigen::Lower>().solve(
               Matrix(l.triangularView<Eigen::Lower>().solve(dm).transpose()))
              .transpose();
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                               Eigen::EigenvaluesOnly);
      const double emin = es.eigenvalues().minCoeff();
      return emin >= 0 ? kInf : -1.0 / emin;
    }
  }
  return kInf;
}

struct BestIterate {
  double merit = kInf;
  double pres = kInf, dres = kInf, gap = kInf;
  double pobj = 0.0, dobj = 0.0;
  Vector x, w, s;
  double tau = 1.0;
  Index iter = 0;
};

}  // namespace

SolveResult solve(const ConicProgram& prog, const SolverSettings& st) {
  prog.validate();
  const Index n = prog.num_vars;
  const Index m = prog.num_rows();
  const SparseMatrix& amat = prog.constraint;
  const Vector& bvec = prog.rhs;
  const Vector& cvec = prog.objective;

  std::vector<Block> blocks;
  {
    Index off = 0;
    for (const auto& cb : prog.cones.blocks) {
      blocks.push_back({cb.kind, off, cb.rows(),
                        cb.kind == ConeKind::Psd ? cb.dim : Index(0)});
      off += cb.rows();
    }
  }
  const Index degree = prog.cones.total_degree();

  SolveResult res;
  res.primal = Vector::Zero(n);
  res.dual = Vector::Zero(m);
  res.slack = Vector::Zero(m);

  if (n == 0) {
    // feasibility of constants only
    bool ok = true;
    for (const auto& b : blocks) {
      const Vector seg = bvec.segment(b.off, b.rows);
      if (b.kind == ConeKind::Zero ? seg.cwiseAbs().maxCoeff() > st.feas_tol
                                   : cone_margin(b, seg) < -st.feas_tol)
        ok = false;
    }
    res.status = ok ? SolveStatus::Optimal : SolveStatus::PrimalInfeasible;
    res.primal_objective = res.dual_objective = prog.objective_offset;
    res.slack = bvec;
    return res;
  }

  const double resx0 = std::max(1.0, cvec.norm());
  const double resz0 = std::max(1.0, bvec.norm());

  // --- KKT machinery --------------------------------------------------------
  const Index dim = n + m;
  std::vector<Triplet> trips;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  SparseMatrix kkt(dim, dim);
  Vector reg_diag(dim);
  reg_diag.head(n).setConstant(st.static_reg);
  reg_diag.tail(m).setConstant(-st.static_reg);

  std::vector<Scaling> scalings(blocks.size());
  bool pattern_ready = false;

  auto assemble_kkt = [&](bool identity_scaling) {
    trips.clear();
    for (Index i = 0; i < dim; ++i) trips.emplace_back(i, i, reg_diag[i]);
    for (Index col = 0; col < amat.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(amat, col); it; ++it) {
        trips.emplace_back(n + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      if (b.kind == ConeKind::Zero) continue;
      if (identity_scaling) {
        for (Index i = 0; i < b.rows; ++i)
          trips.emplace_back(n + b.off + i, n + b.off + i, -1.0);
        // keep the dense pattern stable across iterations
        if (b.kind != ConeKind::NonNeg)
          for (Index i = 0; i < b.rows; ++i)
            for (Index j = 0; j < b.rows; ++j)
              if (i != j) trips.emplace_back(n + b.off + i, n + b.off + j, 0.0);
      } else {
        const Matrix& h = scalings[bi].h;
        if (b.kind == ConeKind::NonNeg) {
          for (Index i = 0; i < b.rows; ++i)
            trips.emplace_back(n + b.off + i, n + b.off + i, -h(i, i));
        } else {
          for (Index i = 0; i < b.rows; ++i)
            for (Index j = 0; j < b.rows; ++j)
              trips.emplace_back(n + b.off + i, n + b.off + j, -h(i, j));
        }
      }
    }
    kkt.setFromTriplets(trips.begin(), trips.end());
    if (!pattern_ready) {
      ldlt.analyzePattern(kkt);
      pattern_ready = true;
    }
    ldlt.factorize(kkt);
    return ldlt.info() == Eigen::Success;
  };

  // refinement against the assembled (regularized) matrix minus the known
  // regularization, i.e. the true KKT operator
  auto kkt_matvec = [&](const Vector& v) -> Vector {
    Vector r = kkt.selfadjointView<Eigen::Lower>() * v;
    r -= reg_diag.cwiseProduct(v);
    return r;
  };
  auto kkt_solve = [&](const Vector& rhs) -> Vector {
    Vector x = ldlt.solve(rhs);
    for (Index it = 0; it < st.refinement_steps; ++it) {
      Vector r = rhs - kkt_matvec(x);
      if (r.norm() <= 1e-14 * std::max(1.0, rhs.norm())) break;
      x += ldlt.solve(r);
    }
    return x;
  };

  // --- initialization -------------------------------------------------------
  if (!assemble_kkt(true)) {
    res.status = SolveStatus::NumericalTrouble;
    res.message = "initial KKT factorization failed";
    return res;
  }
  Vector x(n), w(m), s(m);
  {
    Vector rhs = Vector::Zero(dim);
    rhs.tail(m) = bvec;
    Vector sol = kkt_solve(rhs);
    x = sol.head(n);
    s = bvec - amat * x;
    for (const auto& b : blocks) bring_to_cone(b, s.segment(b.off, b.rows));

    rhs.setZero();
    rhs.head(n) = -cvec;
    sol = kkt_solve(rhs);
    w = sol.tail(m);
    for (const auto& b : blocks)
      if (b.kind != ConeKind::Zero) bring_to_cone(b, w.segment(b.off, b.rows));
      else w.segment(b.off, b.rows) = sol.tail(m).segment(b.off, b.rows);
  }
  double tau = 1.0, kappa = 1.0;

  BestIterate best;
  auto record = [&](double pres, double dres, double gap, double pobj,
                    double dobj, Index iter) {
    const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pobj))});
    if (merit < best.merit) {
      best = BestIterate{merit, pres, dres, gap, pobj, dobj, x, w, s, tau, iter};
    }
  };
  auto finish_with = [&](SolveStatus status, const std::string& msg) {
    res.status = status;
    res.message = msg;
    res.primal = best.x / best.tau;
    res.dual = best.w / best.tau;
    res.slack = best.s / best.tau;
    res.primal_objective = best.pobj + prog.objective_offset;
    res.dual_objective = best.dobj + prog.objective_offset;
    res.primal_residual = best.pres;
    res.dual_residual = best.dres;
    res.gap = best.gap;
    res.iterations = best.iter;
    return res;
  };

  Vector r1(n), r2(m);
  double r3 = 0.0;

  for (Index iter = 0; iter <= st.max_iterations; ++iter) {
    // residuals of the homogeneous system
    r1 = amat.transpose() * w + cvec * tau;
    r2 = -(amat * x) + bvec * tau - s;
    r3 = -cvec.dot(x) - bvec.dot(w) - kappa;

    const double sw = s.dot(w);
    const double mu = (sw + tau * kappa) / static_cast<double>(degree + 1);
    const double pcost = cvec.dot(x) / tau;
    const double dcost = -bvec.dot(w) / tau;
    const double gap_abs = sw / (tau * tau);
    // residuals of the descaled iterate, relative to data and iterate size
    const double az_norm = (amat * x).norm() / tau;
    const double atw_norm = (amat.transpose() * w).norm() / tau;
    const double pres = (r2.norm() / tau) /
                        (1.0 + std::max({bvec.norm(), az_norm, s.norm() / tau}));
    const double dres =
        (r1.norm() / tau) / (1.0 + std::max(cvec.norm(), atw_norm));

    if (!std::isfinite(mu) || !std::isfinite(pres) || !std::isfinite(dres))
      return finish_with(SolveStatus::NumericalTrouble, "non-finite iterate");

    record(pres, dres, gap_abs, pcost, dcost, iter);

    if (st.verbose) {
      std::ostringstream os;
      os << "iter " << iter << " pcost " << pcost << " dcost " << dcost
         << " pres " << pres << " dres " << dres << " gap " << gap_abs
         << " tau " << tau << " kappa " << kappa << " |Az/t| "
         << (amat * x).norm() / tau << " |s/t| " << s.norm() / tau
         << " |A'w/t| " << (amat.transpose() * w).norm() / tau;
      fprintf(stderr, "%s\n", os.str().c_str());
    }

    const bool gap_ok =
        gap_abs <= st.gap_tol ||
        gap_abs <= st.gap_tol * std::max(std::abs(pcost), std::abs(dcost));
    if (pres <= st.feas_tol && dres <= st.feas_tol && gap_ok) {
      best = BestIterate{0.0, pres, dres, gap_abs, pcost, dcost, x, w, s, tau, iter};
      return finish_with(SolveStatus::Optimal, "");
    }

    // infeasibility certificates
    const double bw = bvec.dot(w);
    if (bw < 0) {
      const double pinfres = (amat.transpose() * w).norm() / (resx0 * (-bw));
      if (pinfres <= st.feas_tol) {
        res.status = SolveStatus::PrimalInfeasible;
        res.dual = w / (-bw);
        res.primal = x;
        res.slack = s;
        res.primal_residual = pinfres;
        res.dual_residual = pinfres;
        res.gap = 0.0;
        res.iterations = iter;
        res.message = "primal infeasibility certificate";
        return res;
      }
    }
    const double cx = cvec.dot(x);
    if (cx < 0) {
      const double dinfres = (amat * x + s).norm() / (resz0 * (-cx));
      if (dinfres <= st.feas_tol) {
        res.status = SolveStatus::DualInfeasible;
        res.primal = x / (-cx);
        res.slack = s / (-cx);
        res.dual = w;
        res.primal_residual = dinfres;
        res.dual_residual = dinfres;
        res.gap = 0.0;
        res.iterations = iter;
        res.message = "dual infeasibility certificate (primal unbounded)";
        return res;
      }
    }

    if (iter == st.max_iterations)
      return finish_with(SolveStatus::IterLimit, "iteration limit reached");

    // NT scaling
    bool scaled = true;
    for (size_t bi = 0; bi < blocks.size(); ++bi)
      scaled = scaled && compute_scaling(blocks[bi], s.segment(blocks[bi].off, blocks[bi].rows),
                                         w.segment(blocks[bi].off, blocks[bi].rows), scalings[bi]);
    if (!scaled)
      return finish_with(SolveStatus::NumericalTrouble,
                         "iterate left the cone interior");

    if (!assemble_kkt(false)) {
      // one retry with heavier regularization
      reg_diag.head(n).setConstant(st.static_reg * 1e3);
      reg_diag.tail(m).setConstant(-st.static_reg * 1e3);
      if (!assemble_kkt(false))
        return finish_with(SolveStatus::NumericalTrouble, "KKT factorization failed");
    }

    Vector rhs_t(dim);
    rhs_t.head(n) = -cvec;
    rhs_t.tail(m) = bvec;
    const Vector qt = kkt_solve(rhs_t);

    auto solve_direction = [&](double sigma, const Vector& ds_tilde_target,
                               double dtk_target, Vector& dx, Vector& dw,
                               Vector& ds, double& dtau, double& dkappa,
                               Vector& ds_scaled) {
      // ds_tilde_target holds d_s~ per cone row (zero on Zero rows)
      Vector wt_dst = Vector::Zero(m);
      for (size_t bi = 0; bi < blocks.size(); ++bi) {
        const Block& b = blocks[bi];
        if (b.kind == ConeKind::Zero) continue;
        wt_dst.segment(b.off, b.rows) =
            apply_wt(b, scalings[bi], ds_tilde_target.segment(b.off, b.rows));
      }
      Vector rhs_a(dim);
      rhs_a.head(n) = -(1.0 - sigma) * r1;
      rhs_a.tail(m) = (1.0 - sigma) * r2 - wt_dst;
      const Vector qa = kkt_solve(rhs_a);

      const double xi3 = -(1.0 - sigma) * r3;
      const double num = xi3 + cvec.dot(qa.head(n)) + bvec.dot(qa.tail(m)) +
                         dtk_target / tau;
      const double den = kappa / tau - cvec.dot(qt.head(n)) - bvec.dot(qt.tail(m));
      dtau = num / den;
      dx = qa.head(n) + dtau * qt.head(n);
      dw = qa.tail(m) + dtau * qt.tail(m);
      ds = Vector::Zero(m);
      ds_scaled = Vector::Zero(m);
      for (size_t bi = 0; bi < blocks.size(); ++bi) {
        const Block& b = blocks[bi];
        if (b.kind == ConeKind::Zero) continue;
        const Vector wdw = apply_w(b, scalings[bi], dw.segment(b.off, b.rows));
        const Vector dst = ds_tilde_target.segment(b.off, b.rows) - wdw;
        ds_scaled.segment(b.off, b.rows) = dst;  // = W^{-T} ds
        ds.segment(b.off, b.rows) = apply_wt(b, scalings[bi], dst);
      }
      dkappa = (dtk_target - kappa * dtau) / tau;
    };

    auto step_length = [&](const Vector& ds_scaled, const Vector& dw,
                           double dtau, double dkappa) {
      double alpha = kInf;
      for (size_t bi = 0; bi < blocks.size(); ++bi) {
        const Block& b = blocks[bi];
        if (b.kind == ConeKind::Zero) continue;
        const Vector wdw = apply_w(b, scalings[bi], dw.segment(b.off, b.rows));
        alpha = std::min(alpha, max_step(b, scalings[bi].lambda,
                                         ds_scaled.segment(b.off, b.rows)));
        alpha = std::min(alpha, max_step(b, scalings[bi].lambda, wdw));
      }
      if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
      if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
      return alpha;
    };

    // affine (predictor) direction: ds~ solves lambda o ds~ = -lambda o lambda
    Vector dst_aff = Vector::Zero(m);
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      if (b.kind == ConeKind::Zero) continue;
      dst_aff.segment(b.off, b.rows) = -scalings[bi].lambda;
    }
    Vector dx_a, dw_a, ds_a, dsc_a;
    double dtau_a, dkap_a;
    solve_direction(0.0, dst_aff, -tau * kappa, dx_a, dw_a, ds_a, dtau_a,
                    dkap_a, dsc_a);
    double alpha_aff = std::min(1.0, step_length(dsc_a, dw_a, dtau_a, dkap_a));
    const double mu_aff =
        ((s + alpha_aff * ds_a).dot(w + alpha_aff * dw_a) +
         (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a)) /
        static_cast<double>(degree + 1);
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // combined direction with Mehrotra correction
    Vector dst_comb = Vector::Zero(m);
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      if (b.kind == ConeKind::Zero) continue;
      const Vector wdw = apply_w(b, scalings[bi], dw_a.segment(b.off, b.rows));
      Vector d_comp =
          -jordan_product(b, scalings[bi].lambda, scalings[bi].lambda) -
          jordan_product(b, dsc_a.segment(b.off, b.rows), wdw) +
          sigma * mu * cone_identity(b);
      dst_comb.segment(b.off, b.rows) = jordan_solve(b, scalings[bi], d_comp);
    }
    const double dtk_comb = -tau * kappa - dtau_a * dkap_a + sigma * mu;
    Vector dx, dw, ds, dsc;
    double dtau, dkap;
    solve_direction(sigma, dst_comb, dtk_comb, dx, dw, ds, dtau, dkap, dsc);
    double alpha = std::min(1.0, kStepFraction * step_length(dsc, dw, dtau, dkap));

    if (!std::isfinite(alpha) || alpha <= 1e-10)
      return finish_with(SolveStatus::NumericalTrouble,
                         "step length collapsed (stalled)");

    x += alpha * dx;
    w += alpha * dw;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkap;
    if (tau <= 0 || kappa < 0)
      return finish_with(SolveStatus::NumericalTrouble, "tau left the positive ray");
  }
  return finish_with(SolveStatus::IterLimit, "iteration limit reached");
}

}  // namespace wassdro::conic
