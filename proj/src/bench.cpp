#include "wassdro/bench.hpp"

#include "wassdro/oracles.hpp"
#include "wassdro/solver.hpp"
#include "wassdro/symmetric.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

namespace wassdro::bench {

using conic::ConeKind;
using conic::ProgramBuilder;
using conic::SolveStatus;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Index thread_budget(Index requested) {
  if (const char* env = std::getenv("WASSDRO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<Index>(v);
  }
  if (requested >= 1) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<Index>(hw);
}

// runs jobs 0..count-1 across a small pool; results must be written into
// pre-sized slots so aggregation stays order-independent
void parallel_for(Index count, Index max_threads,
                  const std::function<void(Index)>& job) {
  const Index nt = std::min<Index>(std::max<Index>(1, thread_budget(max_threads)), count);
  if (nt <= 1) {
    for (Index i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  for (Index t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      while (true) {
        const Index i = next.fetch_add(1);
        if (i >= count) break;
        job(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace

void NewsvendorConfig::fill_defaults() {
  if (holding.size() == 0) holding = Vector::Ones(items);
  if (stockout.size() == 0) stockout = 10.0 * Vector::Ones(items);
  if (eps_grid.empty()) {
    // log grid 1e-3 .. 1e1 (9 points) plus the 1/sqrt(I) rule
    for (Index e = 0; e < 9; ++e)
      eps_grid.push_back(std::pow(10.0, -3.0 + 0.5 * static_cast<double>(e)));
    eps_grid.push_back(1.0 / std::sqrt(static_cast<double>(train_size)));
    std::sort(eps_grid.begin(), eps_grid.end());
  }
  if (gamma1_grid.empty()) gamma1_grid = {0.0, 0.3, 1.0};
  if (gamma2_grid.empty()) gamma2_grid = {0.3, 1.0, 3.0};
}

void NewsvendorConfig::validate() const {
  if (items < 1) throw precondition_error("config: K must be >= 1");
  if ((holding.array() <= 0).any() || (stockout.array() <= 0).any())
    throw precondition_error("config: b and s must be positive");
  if (!(budget > 0)) throw precondition_error("config: budget must be positive");
  if (!(cvar_level > 0) || cvar_level > 1)
    throw precondition_error("config: rho must lie in (0,1]");
  if (train_size < cv_folds)
    throw precondition_error("config: need at least cv_folds training samples");
  if (trials < 1 || test_samples < 1 || cv_folds < 1)
    throw precondition_error("config: counts must be positive");
}

Matrix random_correlation(Rng& rng, Index k) {
  if (k == 1) return Matrix::Ones(1, 1);
  // random positive spectrum summing to k
  Vector lam(k);
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    lam[i] = 0.05 + rng.uniform();
    total += lam[i];
  }
  lam *= static_cast<double>(k) / total;
  // random orthogonal basis from a QR factorization of a Gaussian matrix
  Matrix g(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix a = q * lam.asDiagonal() * q.transpose();

  // Givens rotations driving the diagonal to one (trace is already k)
  for (Index pass = 0; pass < k; ++pass) {
    Index below = -1, above = -1;
    for (Index i = 0; i < k; ++i) {
      if (a(i, i) < 1.0 - 1e-12 && below < 0) below = i;
      if (a(i, i) > 1.0 + 1e-12 && above < 0) above = i;
    }
    if (below < 0 || above < 0) break;
    const Index i = std::min(below, above), j = std::max(below, above);
    const double aii = a(i, i), ajj = a(j, j), aij = a(i, j);
    const double disc = aij * aij - (aii - 1.0) * (ajj - 1.0);
    const double t = (aij + std::copysign(std::sqrt(std::max(disc, 0.0)), aij)) /
                     (ajj - 1.0);
    const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
    Matrix rot = Matrix::Identity(k, k);
    rot(i, i) = c;
    rot(j, j) = c;
    rot(i, j) = -s;
    rot(j, i) = s;
    a = rot.transpose() * a * rot;
    a(i, i) = 1.0;  // exact by construction of t
  }
  a = 0.5 * (a + a.transpose()).eval();
  a.diagonal().setOnes();
  return a;
}

LognormalSpec random_instance(Rng& rng, Index k) {
  if (k < 1) throw precondition_error("instance dimension must be >= 1");
  LognormalSpec spec;
  spec.nu.resize(k);
  for (Index i = 0; i < k; ++i) spec.nu[i] = rng.uniform(0.0, 2.0);
  const Vector sigma = Vector::Constant(k, 0.25);
  const Matrix corr = random_correlation(rng, k);
  spec.sigma = sigma.asDiagonal() * corr * sigma.asDiagonal();
  spec.sigma += spec.nu * spec.nu.transpose();
  return spec;
}

std::vector<Vector> sample_lognormal(const LognormalSpec& spec, Index n, Rng& rng) {
  if (n < 1) throw precondition_error("need n >= 1 samples");
  const Index k = spec.nu.size();
  Matrix cov = spec.sigma - spec.nu * spec.nu.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw precondition_error("lognormal covariance is not positive semidefinite");
  const Matrix chol =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::vector<Vector> out;
  out.reserve(n);
  for (Index i = 0; i < n; ++i) {
    const Vector z = chol * rng.normal_vector(k) + spec.nu;
    out.push_back(z.array().exp().matrix());
  }
  return out;
}

double newsvendor_cost(const Vector& x, const Vector& xi, const Vector& b,
                       const Vector& s) {
  double cost = 0.0;
  for (Index k = 0; k < x.size(); ++k)
    cost += std::max(b[k] * (x[k] - xi[k]), s[k] * (xi[k] - x[k]));
  return cost;
}

double out_of_sample_cvar(const Vector& x, const std::vector<Vector>& test,
                          double rho, const Vector& b, const Vector& s) {
  if (test.empty()) throw precondition_error("empty test set");
  std::vector<double> costs;
  costs.reserve(test.size());
  for (const auto& xi : test) costs.push_back(newsvendor_cost(x, xi, b, s));
  return oracle::cvar_from_costs(std::move(costs), rho);
}

TwoStageProblem newsvendor_problem(const NewsvendorConfig& cfg,
                                   const std::vector<Vector>& samples,
                                   double eps) {
  const Index k = cfg.items;
  TwoStageProblem p;
  p.c = Vector::Zero(k);
  p.x_set.A = Matrix::Ones(1, k);
  p.x_set.b = Vector::Constant(1, cfg.budget);
  p.x_set.lb = Vector::Zero(k);
  p.recourse.Q = Matrix::Zero(k, k);
  p.recourse.q = Vector::Ones(k);
  p.recourse.W.resize(2 * k, k);
  p.recourse.W << Matrix::Identity(k, k), Matrix::Identity(k, k);
  p.recourse.T.base.resize(2 * k, k);
  p.recourse.T.base << Matrix((-cfg.holding).asDiagonal()),
      Matrix(cfg.stockout.asDiagonal());
  p.recourse.T.slopes.assign(k, Matrix::Zero(2 * k, k));
  p.recourse.h.base = Vector::Zero(2 * k);
  p.recourse.h.slope.resize(2 * k, k);
  p.recourse.h.slope << Matrix(cfg.holding.asDiagonal()),
      Matrix(Matrix(cfg.stockout.asDiagonal()) * -1.0);
  p.support.S.resize(0, k);
  p.support.t.resize(0);
  p.samples = samples;
  p.metric = MetricConfig{2, NormTag::Euclidean, eps, 1.0, 1.0};
  return p;
}

NewsvendorBuild build_newsvendor_wasserstein(const NewsvendorConfig& cfg,
                                             const std::vector<Vector>& samples,
                                             double eps) {
  if (!(eps > 0)) throw precondition_error("radius must be positive");
  if (samples.empty()) throw precondition_error("no samples");
  const Index k = cfg.items;
  const Index ns = static_cast<Index>(samples.size());
  const double rho = cfg.cvar_level;
  const double inv = 1.0 / static_cast<double>(ns);

  Matrix t_mat(2 * k, k);
  t_mat << Matrix((-cfg.holding).asDiagonal()), Matrix(cfg.stockout.asDiagonal());
  Matrix w_mat(2 * k, k);
  w_mat << Matrix::Identity(k, k), Matrix::Identity(k, k);

  ProgramBuilder pb;
  NewsvendorBuild out;
  out.items = k;
  out.x_start = pb.add_variables(k, "x");
  out.theta_var = pb.add_variable("theta", 1.0);
  out.lambda_var = pb.add_variable("lambda", eps * eps / rho);
  std::vector<Index> s_vars(ns), psi_starts(ns), phi_starts(ns);
  for (Index i = 0; i < ns; ++i) {
    s_vars[i] = pb.add_variable("s[" + std::to_string(i) + "]", inv / rho);
    psi_starts[i] = pb.add_variables(k, "psi[" + std::to_string(i) + "]");
    phi_starts[i] = pb.add_variables(k, "phi[" + std::to_string(i) + "]");
  }

  Index r = pb.begin_block(ConeKind::NonNeg, k + 2 + ns, "bounds");
  for (Index j = 0; j < k; ++j) pb.coef(r + j, out.x_start + j, 1.0);  // x >= 0
  pb.constant(r + k, cfg.budget);                                     // e'x <= B
  for (Index j = 0; j < k; ++j) pb.coef(r + k, out.x_start + j, -1.0);
  pb.coef(r + k + 1, out.lambda_var, 1.0);  // lambda >= 0
  for (Index i = 0; i < ns; ++i) pb.coef(r + k + 2 + i, s_vars[i], 1.0);

  const Index side = 3 * k + 1;
  for (Index i = 0; i < ns; ++i) {
    const Vector& xi = samples[i];
    copos::SymmetricAffine m(side);
    m.constant.block(0, k, k, 2 * k) = -0.5 * t_mat.transpose();
    m.constant.block(k, 0, 2 * k, k) = -0.5 * t_mat;
    {
      Matrix coef = Matrix::Zero(side, side);
      coef.topLeftCorner(k, k) = Matrix::Identity(k, k);
      coef.block(0, 3 * k, k, 1) = -xi;
      coef.block(3 * k, 0, 1, k) = -xi.transpose();
      coef(side - 1, side - 1) = xi.squaredNorm();
      m.add_term(out.lambda_var, std::move(coef));
    }
    // h(x) = [diag(b) x; -diag(s) x] enters the border of the middle block
    for (Index n = 0; n < k; ++n) {
      Matrix coef = Matrix::Zero(side, side);
      Vector hcol = Vector::Zero(2 * k);
      hcol[n] = cfg.holding[n];
      hcol[k + n] = -cfg.stockout[n];
      coef.block(k, 3 * k, 2 * k, 1) = -0.5 * hcol;
      coef.block(3 * k, k, 1, 2 * k) = -0.5 * hcol.transpose();
      m.add_term(out.x_start + n, std::move(coef));
    }
    for (Index j = 0; j < k; ++j) {
      Matrix coef = Matrix::Zero(side, side);
      const Vector wcol = w_mat.col(j);
      coef.block(k, 3 * k, 2 * k, 1) = 0.5 * wcol;
      coef.block(3 * k, k, 1, 2 * k) = 0.5 * wcol.transpose();
      coef(side - 1, side - 1) = -1.0;  // - e'psi in the corner
      m.add_term(psi_starts[i] + j, std::move(coef));

      Matrix coefp = Matrix::Zero(side, side);
      coefp.block(k, k, 2 * k, 2 * k) = wcol * wcol.transpose();
      coefp(side - 1, side - 1) = -1.0;  // - e'phi in the corner
      m.add_term(phi_starts[i] + j, std::move(coefp));
    }
    {
      Matrix coef = Matrix::Zero(side, side);
      coef(side - 1, side - 1) = 1.0;
      m.add_term(s_vars[i], coef);
      Matrix coeft = Matrix::Zero(side, side);
      coeft(side - 1, side - 1) = 1.0;
      m.add_term(out.theta_var, coeft);
    }
    copos::add_c0_block(pb, m, "block[" + std::to_string(i) + "]");
  }
  out.program = pb.finish();
  return out;
}

ChebyshevParams estimate_chebyshev(const std::vector<Vector>& samples,
                                   double gamma1, double gamma2) {
  if (samples.empty()) throw precondition_error("no samples");
  const Index k = samples[0].size();
  ChebyshevParams out;
  out.gamma1 = gamma1;
  out.gamma2 = gamma2;
  out.mean = Vector::Zero(k);
  for (const auto& xi : samples) out.mean += xi;
  out.mean /= static_cast<double>(samples.size());
  out.second_moment_bound = Matrix::Zero(k, k);
  for (const auto& xi : samples)
    out.second_moment_bound +=
        (xi - out.mean) * (xi - out.mean).transpose();
  out.second_moment_bound /= static_cast<double>(samples.size());
  // ridge for invertibility
  Eigen::LLT<Matrix> llt(out.second_moment_bound);
  if (llt.info() != Eigen::Success)
    out.second_moment_bound += 1e-8 * Matrix::Identity(k, k);
  return out;
}

NewsvendorBuild build_newsvendor_chebyshev(const NewsvendorConfig& cfg,
                                           const ChebyshevParams& params) {
  const Index k = cfg.items;
  const double rho = cfg.cvar_level;
  Eigen::LLT<Matrix> llt(params.second_moment_bound);
  if (llt.info() != Eigen::Success)
    throw precondition_error("Chebyshev second-moment matrix is singular");
  // symmetric square root for the norm row
  Eigen::SelfAdjointEigenSolver<Matrix> es(params.second_moment_bound);
  const Matrix sqrt_sigma =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  Matrix t_mat(2 * k, k);
  t_mat << Matrix((-cfg.holding).asDiagonal()), Matrix(cfg.stockout.asDiagonal());
  Matrix w_mat(2 * k, k);
  w_mat << Matrix::Identity(k, k), Matrix::Identity(k, k);

  ProgramBuilder pb;
  NewsvendorBuild out;
  out.items = k;
  out.x_start = pb.add_variables(k, "x");
  out.theta_var = pb.add_variable("theta", 1.0);
  const Index s_var = pb.add_variable("s", 1.0 / rho);
  const Index m_vec = pb.add_variables(k, "m");
  const Index psi = pb.add_variables(k, "psi");
  const Index phi = pb.add_variables(k, "phi");
  const Index tri = svec_size(k);
  const Index m_mat = pb.add_variables(tri, "M");
  const Index t_norm = pb.add_variable("tnorm", std::sqrt(params.gamma1) / rho);

  // objective: tr(((1+gamma2) Sigma + mu mu') M) + mu'm, scaled by 1/rho.
  // The (1+gamma2) factor matches the ambiguity set's second-moment bound;
  // with gamma2 alone the curvature of the majorant in directions around
  // the mean would be free of charge and the dual value collapses.
  const Matrix weight =
      (1.0 + params.gamma2) * params.second_moment_bound +
      params.mean * params.mean.transpose();
  const Vector wsvec = svec(weight);
  for (Index t = 0; t < tri; ++t) pb.add_objective(m_mat + t, wsvec[t] / rho);
  for (Index d = 0; d < k; ++d)
    pb.add_objective(m_vec + d, params.mean[d] / rho);

  // x >= 0, budget
  Index r = pb.begin_block(ConeKind::NonNeg, k + 1, "bounds");
  for (Index j = 0; j < k; ++j) pb.coef(r + j, out.x_start + j, 1.0);
  pb.constant(r + k, cfg.budget);
  for (Index j = 0; j < k; ++j) pb.coef(r + k, out.x_start + j, -1.0);

  // M psd
  {
    Index rp = pb.begin_block(ConeKind::Psd, k, "M_psd");
    for (Index t = 0; t < tri; ++t) pb.coef(rp + t, m_mat + t, 1.0);
  }
  // t_norm >= || sqrt(Sigma) (m + 2 M mu) ||
  {
    Index rq = pb.begin_block(ConeKind::SecondOrder, k + 1, "moment_norm");
    pb.coef(rq, t_norm, 1.0);
    // rows: sqrt_sigma * (m + 2 M mu)
    for (Index row = 0; row < k; ++row)
      for (Index d = 0; d < k; ++d)
        pb.coef(rq + 1 + row, m_vec + d, sqrt_sigma(row, d));
    // coefficient of the svec variable (i,j) in (2 sqrt_sigma M mu)_row,
    // descaled for the svec convention
    for (Index row = 0; row < k; ++row) {
      Index t = 0;
      for (Index j = 0; j < k; ++j)
        for (Index i = j; i < k; ++i, ++t) {
          double coef;
          if (i == j) {
            coef = 2.0 * sqrt_sigma(row, i) * params.mean[i];
          } else {
            coef = 2.0 * (sqrt_sigma(row, i) * params.mean[j] +
                          sqrt_sigma(row, j) * params.mean[i]) / kSqrt2;
          }
          if (coef != 0.0) pb.coef(rq + 1 + row, m_mat + t, coef);
        }
    }
  }

  // svec basis matrices of M for the copositive blocks
  std::vector<Matrix> basis(tri);
  {
    Index t = 0;
    for (Index j = 0; j < k; ++j)
      for (Index i = j; i < k; ++i, ++t) {
        Matrix b = Matrix::Zero(k, k);
        if (i == j) b(i, i) = 1.0;
        else b(i, j) = b(j, i) = 1.0 / kSqrt2;
        basis[t] = b;
      }
  }

  // big block, side 3k+1
  {
    const Index side = 3 * k + 1;
    copos::SymmetricAffine m(side);
    m.constant.block(0, k, k, 2 * k) = -0.5 * t_mat.transpose();
    m.constant.block(k, 0, 2 * k, k) = -0.5 * t_mat;
    for (Index t = 0; t < tri; ++t) {
      Matrix coef = Matrix::Zero(side, side);
      coef.topLeftCorner(k, k) = basis[t];
      m.add_term(m_mat + t, std::move(coef));
    }
    for (Index d = 0; d < k; ++d) {
      Matrix coef = Matrix::Zero(side, side);
      coef(d, side - 1) = coef(side - 1, d) = 0.5;
      m.add_term(m_vec + d, std::move(coef));
    }
    for (Index n = 0; n < k; ++n) {
      Matrix coef = Matrix::Zero(side, side);
      Vector hcol = Vector::Zero(2 * k);
      hcol[n] = cfg.holding[n];
      hcol[k + n] = -cfg.stockout[n];
      coef.block(k, 3 * k, 2 * k, 1) = -0.5 * hcol;
      coef.block(3 * k, k, 1, 2 * k) = -0.5 * hcol.transpose();
      m.add_term(out.x_start + n, std::move(coef));
    }
    for (Index j = 0; j < k; ++j) {
      Matrix coef = Matrix::Zero(side, side);
      const Vector wcol = w_mat.col(j);
      coef.block(k, 3 * k, 2 * k, 1) = 0.5 * wcol;
      coef.block(3 * k, k, 1, 2 * k) = 0.5 * wcol.transpose();
      coef(side - 1, side - 1) = -1.0;
      m.add_term(psi + j, std::move(coef));
      Matrix coefp = Matrix::Zero(side, side);
      coefp.block(k, k, 2 * k, 2 * k) = wcol * wcol.transpose();
      coefp(side - 1, side - 1) = -1.0;
      m.add_term(phi + j, std::move(coefp));
    }
    Matrix corner = Matrix::Zero(side, side);
    corner(side - 1, side - 1) = 1.0;
    m.add_term(s_var, corner);
    Matrix cornert = corner;
    m.add_term(out.theta_var, cornert);
    copos::add_c0_block(pb, m, "block_main");
  }
  // small block [[M, m/2], [m'/2, s]], side k+1
  {
    const Index side = k + 1;
    copos::SymmetricAffine m(side);
    for (Index t = 0; t < tri; ++t) {
      Matrix coef = Matrix::Zero(side, side);
      coef.topLeftCorner(k, k) = basis[t];
      m.add_term(m_mat + t, std::move(coef));
    }
    for (Index d = 0; d < k; ++d) {
      Matrix coef = Matrix::Zero(side, side);
      coef(d, side - 1) = coef(side - 1, d) = 0.5;
      m.add_term(m_vec + d, std::move(coef));
    }
    Matrix corner = Matrix::Zero(side, side);
    corner(side - 1, side - 1) = 1.0;
    m.add_term(s_var, corner);
    copos::add_c0_block(pb, m, "block_corner");
  }
  out.program = pb.finish();
  return out;
}

namespace {

Vector solve_policy(const conic::ConicProgram& prog, const NewsvendorBuild& b,
                    const char* what) {
  auto res = copos::solve_conic(prog);
  if (res.status != SolveStatus::Optimal)
    throw solver_error(std::string(what) + ": backend status " +
                       conic::status_name(res.status));
  return b.extract_x(res);
}

std::vector<Index> shuffled_indices(Index n, Rng& rng) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.integer(0, static_cast<std::uint64_t>(i)));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace

double cross_validate_epsilon(const NewsvendorConfig& cfg,
                              const std::vector<Vector>& samples,
                              const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw precondition_error("empty radius grid");
  const Index ns = static_cast<Index>(samples.size());
  const Index folds = cfg.cv_folds;
  if (ns < folds) throw precondition_error("fewer samples than folds");

  Rng rng(Rng::derive(cfg.seed, 0x5eedca11));
  const auto order = shuffled_indices(ns, rng);

  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end());
  double best_eps = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double eps : grid) {
    double score = 0.0;
    bool ok = true;
    for (Index f = 0; f < folds && ok; ++f) {
      const Index lo = f * ns / folds, hi = (f + 1) * ns / folds;
      if (hi == lo) throw precondition_error("empty cross-validation fold");
      std::vector<Vector> train, hold;
      for (Index i = 0; i < ns; ++i)
        (i >= lo && i < hi ? hold : train).push_back(samples[order[i]]);
      try {
        auto build = build_newsvendor_wasserstein(cfg, train, eps);
        const Vector x = solve_policy(build.program, build, "cv solve");
        score += out_of_sample_cvar(x, hold, cfg.cvar_level, cfg.holding,
                                    cfg.stockout);
      } catch (const solver_error&) {
        ok = false;
      }
    }
    if (!ok) continue;
    score /= static_cast<double>(folds);
    if (score < best_score - 1e-12) {
      best_score = score;
      best_eps = eps;
    }
  }
  return best_eps;
}

std::pair<double, double> cross_validate_chebyshev(
    const NewsvendorConfig& cfg, const std::vector<Vector>& samples,
    const std::vector<double>& gamma1_grid,
    const std::vector<double>& gamma2_grid) {
  if (gamma1_grid.empty() || gamma2_grid.empty())
    throw precondition_error("empty gamma grid");
  const Index ns = static_cast<Index>(samples.size());
  const Index folds = cfg.cv_folds;
  if (ns < folds) throw precondition_error("fewer samples than folds");
  Rng rng(Rng::derive(cfg.seed, 0xc4ebca11));
  const auto order = shuffled_indices(ns, rng);

  double best_g1 = gamma1_grid.front(), best_g2 = gamma2_grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double g1 : gamma1_grid)
    for (double g2 : gamma2_grid) {
      double score = 0.0;
      bool ok = true;
      for (Index f = 0; f < folds && ok; ++f) {
        const Index lo = f * ns / folds, hi = (f + 1) * ns / folds;
        std::vector<Vector> train, hold;
        for (Index i = 0; i < ns; ++i)
          (i >= lo && i < hi ? hold : train).push_back(samples[order[i]]);
        try {
          auto params = estimate_chebyshev(train, g1, g2);
          auto build = build_newsvendor_chebyshev(cfg, params);
          const Vector x = solve_policy(build.program, build, "cv solve");
          score += out_of_sample_cvar(x, hold, cfg.cvar_level, cfg.holding,
                                      cfg.stockout);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok) continue;
      score /= static_cast<double>(folds);
      if (score < best_score - 1e-12) {
        best_score = score;
        best_g1 = g1;
        best_g2 = g2;
      }
    }
  return {best_g1, best_g2};
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw precondition_error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - std::floor(pos);
  return (1.0 - frac) * values[lo] + frac * values[hi];
}

GapStudyOutput run_gap_study(const std::vector<Index>& k_list,
                             const std::vector<Index>& i_list, Index trials,
                             std::uint64_t seed, bool reduced,
                             Index max_threads) {
  if (k_list.empty() || i_list.empty() || trials < 1)
    throw precondition_error("gap study needs cells and trials");
  if (reduced) {
    for (Index k : k_list)
      if (k > 4) throw precondition_error("reduced mode caps K at 4");
    for (Index i : i_list)
      if (i > 20) throw precondition_error("reduced mode caps I at 20");
    if (trials > 20) throw precondition_error("reduced mode caps trials at 20");
  }

  struct Job {
    Index k, train, trial;
    std::uint64_t cell_id;
  };
  std::vector<Job> jobs;
  for (size_t ck = 0; ck < k_list.size(); ++ck)
    for (size_t ci = 0; ci < i_list.size(); ++ci)
      for (Index t = 0; t < trials; ++t)
        jobs.push_back({k_list[ck], i_list[ci], t,
                        static_cast<std::uint64_t>(ck * 100 + ci)});

  GapStudyOutput out;
  out.rows.resize(jobs.size());
  parallel_for(static_cast<Index>(jobs.size()), max_threads, [&](Index ji) {
    const auto& job = jobs[ji];
    GapStudyRow row;
    row.k = job.k;
    row.train_size = job.train;
    row.trial = job.trial;
    row.seed = Rng::derive(seed, job.cell_id * 10007ULL +
                                     static_cast<std::uint64_t>(job.trial));
    Rng rng(row.seed);
    const Index n2_max = static_cast<Index>(
        std::ceil(std::log(static_cast<double>(job.k) + 1.0)));
    row.n2 = static_cast<Index>(rng.integer(1, static_cast<std::uint64_t>(
                                                   std::max<Index>(1, n2_max))));
    Matrix a(row.n2, job.k);
    for (Index i = 0; i < row.n2; ++i)
      for (Index j = 0; j < job.k; ++j) a(i, j) = rng.uniform();
    Vector b(row.n2);
    for (Index i = 0; i < row.n2; ++i) b[i] = rng.uniform() * a.row(i).sum();
    std::vector<Vector> samples;
    for (Index i = 0; i < job.train; ++i) {
      Vector xi(job.k);
      for (Index j = 0; j < job.k; ++j) xi[j] = rng.uniform();
      samples.push_back(xi);
    }
    const double eps = 1.0 / std::sqrt(static_cast<double>(job.train));
    const auto relu = oracle::SumMaxRecourse::from_relu(
        a, b, Vector::Zero(job.k), Vector::Ones(job.k));

    try {
      auto t0 = std::chrono::steady_clock::now();
      row.exact_value = oracle::exact_wce_summax(relu, samples, eps).value;
      row.time_exact_s = seconds_since(t0);

      // C0 path through the copositive builder on the relu instance
      TwoStageProblem p;
      p.recourse.Q = Matrix::Zero(row.n2, job.k);
      p.recourse.q = Vector::Ones(row.n2);
      p.recourse.W.resize(2 * row.n2, row.n2);
      p.recourse.W << Matrix::Identity(row.n2, row.n2),
          Matrix::Identity(row.n2, row.n2);
      p.recourse.T.base.resize(2 * row.n2, job.k);
      p.recourse.T.base << a, Matrix::Zero(row.n2, job.k);
      p.recourse.h.base.resize(2 * row.n2);
      p.recourse.h.base << -b, Vector::Zero(row.n2);
      p.recourse.h.slope = Matrix(2 * row.n2, 0);
      p.support.S = Matrix::Identity(job.k, job.k);
      p.support.t = Vector::Ones(job.k);
      p.samples = samples;
      p.metric = MetricConfig{2, NormTag::Euclidean, eps, 1.0, 1.0};

      t0 = std::chrono::steady_clock::now();
      auto res = copos::solve_conic(copos::build_wce_upper(p, Vector(), 0.0).program);
      row.time_c0_s = seconds_since(t0);
      if (res.status != SolveStatus::Optimal) {
        row.solvable = false;
      } else {
        row.c0_value = res.primal_objective;
        row.c0_gap_pct = 100.0 * (row.c0_value - row.exact_value) /
                         std::max(1e-12, std::abs(row.exact_value));
      }

      t0 = std::chrono::steady_clock::now();
      row.qdr_value = oracle::decision_rule_bound(
          relu, samples, eps, oracle::DecisionRuleDegree::Quadratic);
      row.time_qdr_s = seconds_since(t0);
      row.qdr_gap_pct = 100.0 * (row.qdr_value - row.exact_value) /
                        std::max(1e-12, std::abs(row.exact_value));
    } catch (const std::exception&) {
      row.solvable = false;
    }
    out.rows[ji] = row;
  });

  // aggregate per cell
  std::ostringstream csv, tlog;
  csv << "k,i,trial,seed,n2,solvable,exact,c0_value,c0_gap_pct,qdr_value,"
         "qdr_gap_pct\r\n";
  tlog << "k,i,trial,time_exact_s,time_c0_s,time_qdr_s\n";
  for (const auto& row : out.rows) {
    csv << row.k << "," << row.train_size << "," << row.trial << "," << row.seed
        << "," << row.n2 << "," << (row.solvable ? 1 : 0) << ","
        << fmt(row.exact_value) << "," << fmt(row.c0_value) << ","
        << fmt(row.c0_gap_pct) << "," << fmt(row.qdr_value) << ","
        << fmt(row.qdr_gap_pct) << "\r\n";
    tlog << row.k << "," << row.train_size << "," << row.trial << ","
         << fmt(row.time_exact_s) << "," << fmt(row.time_c0_s) << ","
         << fmt(row.time_qdr_s) << "\n";
  }
  for (Index k : k_list)
    for (Index i : i_list) {
      GapStudyCell cell;
      cell.k = k;
      cell.train_size = i;
      Index solvable = 0, total = 0;
      for (const auto& row : out.rows)
        if (row.k == k && row.train_size == i) {
          ++total;
          if (row.solvable) {
            ++solvable;
            cell.mean_c0_gap_pct += row.c0_gap_pct;
            cell.mean_qdr_gap_pct += row.qdr_gap_pct;
            cell.mean_time_c0_s += row.time_c0_s;
            cell.mean_time_qdr_s += row.time_qdr_s;
          }
        }
      if (solvable > 0) {
        cell.mean_c0_gap_pct /= solvable;
        cell.mean_qdr_gap_pct /= solvable;
        cell.mean_time_c0_s /= solvable;
        cell.mean_time_qdr_s /= solvable;
      }
      cell.solvable_pct = 100.0 * solvable / std::max<Index>(1, total);
      out.cells.push_back(cell);
    }
  out.csv = csv.str();
  out.timing_log = tlog.str();
  return out;
}

NewsvendorStudyOutput run_newsvendor_study(const NewsvendorConfig& cfg_in,
                                           Index max_threads) {
  NewsvendorConfig cfg = cfg_in;
  cfg.fill_defaults();
  cfg.validate();

  NewsvendorStudyOutput out;
  out.trials.resize(cfg.trials);
  parallel_for(cfg.trials, max_threads, [&](Index t) {
    StudyResult res;
    res.trial = t;
    res.seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(t));
    try {
      Rng rng(res.seed);
      const auto spec = random_instance(rng, cfg.items);
      {
        std::ostringstream dig;
        dig << "nu=";
        for (Index i = 0; i < spec.nu.size(); ++i) dig << fmt(spec.nu[i]) << (i + 1 < spec.nu.size() ? ";" : "");
        res.instance_digest = dig.str();
      }
      const auto train = sample_lognormal(spec, cfg.train_size, rng);
      Rng rng_test(Rng::derive(res.seed, 0x7e57));
      const auto test = sample_lognormal(spec, cfg.test_samples, rng_test);
      Rng rng_ref(Rng::derive(res.seed, 0x0ef5));
      const auto ref_samples = sample_lognormal(spec, cfg.test_samples, rng_ref);

      NewsvendorConfig cfg_t = cfg;
      cfg_t.seed = res.seed;

      // Wasserstein policy with cross-validated radius
      auto t0 = std::chrono::steady_clock::now();
      res.eps_chosen = cross_validate_epsilon(cfg_t, train, cfg.eps_grid);
      auto build_w = build_newsvendor_wasserstein(cfg_t, train, res.eps_chosen);
      auto sol_w = copos::solve_conic(build_w.program);
      if (sol_w.status != SolveStatus::Optimal)
        throw solver_error("wasserstein solve failed");
      const Vector x_w = build_w.extract_x(sol_w);
      res.in_sample_wass = sol_w.primal_objective;
      res.time_wass_s = seconds_since(t0);

      // Chebyshev policy with cross-validated confidence parameters
      t0 = std::chrono::steady_clock::now();
      auto [g1, g2] = cross_validate_chebyshev(cfg_t, train, cfg.gamma1_grid,
                                               cfg.gamma2_grid);
      res.gamma1_chosen = g1;
      res.gamma2_chosen = g2;
      auto build_c =
          build_newsvendor_chebyshev(cfg_t, estimate_chebyshev(train, g1, g2));
      auto sol_c = copos::solve_conic(build_c.program);
      if (sol_c.status != SolveStatus::Optimal)
        throw solver_error("chebyshev solve failed");
      const Vector x_c = build_c.extract_x(sol_c);
      res.in_sample_cheb = sol_c.primal_objective;
      res.time_cheb_s = seconds_since(t0);

      // SAA policy (radius zero)
      t0 = std::chrono::steady_clock::now();
      auto p_train = newsvendor_problem(cfg_t, train, 0.0);
      auto saa = oracle::saa_cvar(p_train, nullptr, cfg.cvar_level, true);
      res.in_sample_saa = saa.value;
      res.time_saa_s = seconds_since(t0);

      // large-sample SAA reference policy for the optimality gaps
      auto p_ref = newsvendor_problem(cfg_t, ref_samples, 0.0);
      auto ref = oracle::saa_cvar(p_ref, nullptr, cfg.cvar_level, true);

      res.oos_wass = out_of_sample_cvar(x_w, test, cfg.cvar_level, cfg.holding,
                                        cfg.stockout);
      res.oos_cheb = out_of_sample_cvar(x_c, test, cfg.cvar_level, cfg.holding,
                                        cfg.stockout);
      res.oos_saa = out_of_sample_cvar(saa.x, test, cfg.cvar_level, cfg.holding,
                                       cfg.stockout);
      res.oos_reference = out_of_sample_cvar(ref.x, test, cfg.cvar_level,
                                             cfg.holding, cfg.stockout);
      const double denom = std::abs(res.oos_saa);
      res.improvement_wass = (res.oos_saa - res.oos_wass) / denom;
      res.improvement_cheb = (res.oos_saa - res.oos_cheb) / denom;
      const double refd = std::abs(res.oos_reference);
      res.gap_wass = (res.oos_wass - res.oos_reference) / refd;
      res.gap_cheb = (res.oos_cheb - res.oos_reference) / refd;
      res.gap_saa = (res.oos_saa - res.oos_reference) / refd;
    } catch (const std::exception& e) {
      res.solved = false;
      res.failure = e.what();
    }
    out.trials[t] = res;
  });

  std::vector<double> imp_w, imp_c;
  for (const auto& r : out.trials) {
    if (!r.solved) {
      ++out.failed_trials;
      continue;
    }
    imp_w.push_back(r.improvement_wass);
    imp_c.push_back(r.improvement_cheb);
  }
  if (!imp_w.empty()) {
    out.mean_improvement_wass =
        std::accumulate(imp_w.begin(), imp_w.end(), 0.0) / imp_w.size();
    out.mean_improvement_cheb =
        std::accumulate(imp_c.begin(), imp_c.end(), 0.0) / imp_c.size();
    out.q20_improvement_wass = sample_quantile(imp_w, 0.2);
    out.q80_improvement_wass = sample_quantile(imp_w, 0.8);
    out.q20_improvement_cheb = sample_quantile(imp_c, 0.2);
    out.q80_improvement_cheb = sample_quantile(imp_c, 0.8);
  }

  std::ostringstream csv, dat, tlog;
  csv << "trial,seed,solved,eps,gamma1,gamma2,in_wass,in_cheb,in_saa,"
         "oos_wass,oos_cheb,oos_saa,oos_reference,improvement_wass,"
         "improvement_cheb,gap_wass,gap_cheb,gap_saa\r\n";
  tlog << "trial,time_wass_s,time_cheb_s,time_saa_s\n";
  for (const auto& r : out.trials) {
    csv << r.trial << "," << r.seed << "," << (r.solved ? 1 : 0) << ","
        << fmt(r.eps_chosen) << "," << fmt(r.gamma1_chosen) << ","
        << fmt(r.gamma2_chosen) << "," << fmt(r.in_sample_wass) << ","
        << fmt(r.in_sample_cheb) << "," << fmt(r.in_sample_saa) << ","
        << fmt(r.oos_wass) << "," << fmt(r.oos_cheb) << "," << fmt(r.oos_saa)
        << "," << fmt(r.oos_reference) << "," << fmt(r.improvement_wass) << ","
        << fmt(r.improvement_cheb) << "," << fmt(r.gap_wass) << ","
        << fmt(r.gap_cheb) << "," << fmt(r.gap_saa) << "\r\n";
    tlog << r.trial << "," << fmt(r.time_wass_s) << "," << fmt(r.time_cheb_s)
         << "," << fmt(r.time_saa_s) << "\n";
  }
  dat << "# policy train_size mean q20 q80\n";
  dat << "wasserstein " << cfg.train_size << " " << fmt(out.mean_improvement_wass)
      << " " << fmt(out.q20_improvement_wass) << " "
      << fmt(out.q80_improvement_wass) << "\n";
  dat << "chebyshev " << cfg.train_size << " " << fmt(out.mean_improvement_cheb)
      << " " << fmt(out.q20_improvement_cheb) << " "
      << fmt(out.q80_improvement_cheb) << "\n";
  out.csv = csv.str();
  out.quantiles_dat = dat.str();
  out.timing_log = tlog.str();
  return out;
}

}  // namespace wassdro::bench
