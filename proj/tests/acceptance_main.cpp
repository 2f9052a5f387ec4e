// Acceptance suite: one named criterion per invocation (or "all"), one
// PASS/FAIL line per criterion with the measured evidence.
#include "wassdro/bench.hpp"
#include "wassdro/copos.hpp"
#include "wassdro/exact_lp.hpp"
#include "wassdro/oracles.hpp"
#include "wassdro/rng.hpp"
#include "wassdro/solver.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace wassdro;
using conic::SolveStatus;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

TwoStageProblem example33_instance() {
  TwoStageProblem p;
  p.recourse.Q = Matrix::Constant(1, 1, 1.0);
  p.recourse.q = Vector::Constant(1, -1.0);
  p.recourse.W = Matrix::Zero(1, 1);
  p.recourse.T.base = Matrix::Constant(1, 1, 1.0);
  p.recourse.h.base = Vector::Constant(1, -1.0);
  p.recourse.h.slope = Matrix(1, 0);
  p.support.S.resize(2, 1);
  p.support.S << 1.0, -1.0;
  p.support.t.resize(2);
  p.support.t << 1.0, -1.0;
  p.samples = {Vector::Constant(1, 1.0)};
  p.metric = MetricConfig{2, NormTag::Euclidean, 1.0, 1.0, 1.0};
  return p;
}

struct RandomSumMax {
  Matrix a;
  Vector b;
  std::vector<Vector> samples;
  double eps = 0.0;
  oracle::SumMaxRecourse relu;
  TwoStageProblem problem;  // the same cost as a two-stage instance
};

RandomSumMax random_summax(Rng& rng, Index k, Index n2, Index train) {
  RandomSumMax out;
  out.a.resize(n2, k);
  out.b.resize(n2);
  for (Index i = 0; i < n2; ++i) {
    double rowsum = 0.0;
    for (Index j = 0; j < k; ++j) {
      out.a(i, j) = rng.uniform();
      rowsum += out.a(i, j);
    }
    out.b[i] = rng.uniform() * rowsum;
  }
  for (Index i = 0; i < train; ++i) {
    Vector xi(k);
    for (Index j = 0; j < k; ++j) xi[j] = rng.uniform();
    out.samples.push_back(xi);
  }
  out.eps = 1.0 / std::sqrt(static_cast<double>(train));
  out.relu = oracle::SumMaxRecourse::from_relu(out.a, out.b, Vector::Zero(k),
                                               Vector::Ones(k));
  TwoStageProblem& p = out.problem;
  p.recourse.Q = Matrix::Zero(n2, k);
  p.recourse.q = Vector::Ones(n2);
  p.recourse.W.resize(2 * n2, n2);
  p.recourse.W << Matrix::Identity(n2, n2), Matrix::Identity(n2, n2);
  p.recourse.T.base.resize(2 * n2, k);
  p.recourse.T.base << out.a, Matrix::Zero(n2, k);
  p.recourse.h.base.resize(2 * n2);
  p.recourse.h.base << -out.b, Vector::Zero(n2);
  p.recourse.h.slope = Matrix(2 * n2, 0);
  p.support.S = Matrix::Identity(k, k);
  p.support.t = Vector::Ones(k);
  p.samples = out.samples;
  p.metric = MetricConfig{2, NormTag::Euclidean, out.eps, 1.0, 1.0};
  return out;
}

TwoStageProblem random_wlp_instance(Rng& rng, Index k, Index train) {
  // random fixed-cost recourse with complete recourse (W = [I; I])
  TwoStageProblem p;
  const Index n2 = k;
  p.c = Vector::Zero(k);
  for (Index j = 0; j < k; ++j) p.c[j] = 0.2 * rng.uniform();
  p.x_set.A = Matrix::Ones(1, k);
  p.x_set.b = Vector::Constant(1, 4.0 + 4.0 * rng.uniform());
  p.x_set.lb = Vector::Zero(k);
  p.recourse.Q = Matrix::Zero(n2, k);
  p.recourse.q = Vector::Ones(n2);
  for (Index j = 0; j < n2; ++j) p.recourse.q[j] = 0.5 + rng.uniform();
  p.recourse.W.resize(2 * n2, n2);
  p.recourse.W << Matrix::Identity(n2, n2), Matrix::Identity(n2, n2);
  Vector hold(k), stock(k);
  for (Index j = 0; j < k; ++j) {
    hold[j] = 0.5 + rng.uniform();
    stock[j] = 2.0 + 8.0 * rng.uniform();
  }
  p.recourse.T.base.resize(2 * k, k);
  p.recourse.T.base << Matrix((-hold).asDiagonal()), Matrix(stock.asDiagonal());
  p.recourse.T.slopes.assign(k, Matrix::Zero(2 * k, k));
  p.recourse.h.base = Vector::Zero(2 * k);
  p.recourse.h.slope.resize(2 * k, k);
  p.recourse.h.slope << Matrix(hold.asDiagonal()),
      Matrix(Matrix(stock.asDiagonal()) * -1.0);
  p.support.S.resize(0, k);
  p.support.t.resize(0);
  for (Index i = 0; i < train; ++i) {
    Vector xi(k);
    for (Index j = 0; j < k; ++j) xi[j] = 0.3 + 2.5 * rng.uniform();
    p.samples.push_back(xi);
  }
  p.metric = MetricConfig{1, NormTag::WeightedMax, 0.05 + 0.3 * rng.uniform(),
                          1.0, 1.0};
  return p;
}

// ---------------------------------------------------------------------------

Check criterion_infinite_gap_regression() {
  Check c;
  Timer timer;
  auto p = example33_instance();
  auto res0 = copos::solve_conic(copos::build_full_problem(p, 0.0).program);
  c.require(res0.status == SolveStatus::PrimalInfeasible,
            std::string("delta=0 status ") + conic::status_name(res0.status) +
                " (expected PrimalInfeasible)");
  double prev = -1e30, last = 0.0;
  for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    auto res = copos::solve_conic(copos::build_full_problem(p, delta).program);
    c.require(res.status == SolveStatus::Optimal,
              "delta=" + std::to_string(delta) + " not Optimal");
    if (res.status != SolveStatus::Optimal) break;
    c.require(res.primal_objective >= prev - 1e-6,
              "sequence decreased at delta=" + std::to_string(delta));
    prev = res.primal_objective;
    last = res.primal_objective;
  }
  c.require(std::abs(last) <= 1e-2,
            "final value " + std::to_string(last) + " not within 1e-2 of 0");
  const double secs = timer.seconds();
  c.require(secs < 1.0, "runtime " + std::to_string(secs) + "s exceeds 1s");
  c.note("final value " + std::to_string(last) + ", runtime " +
         std::to_string(secs) + "s");
  return c;
}

Check criterion_small_dim_exactness() {
  Check c;
  Timer timer;
  Rng rng(Rng::derive(2026, 1));
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index k = 1 + rep % 2;
    const Index n2 = 1 + (rep / 2) % 2;
    const Index train = (rep % 4 < 2) ? 5 : 10;
    auto inst = random_summax(rng, k, n2, train);
    const double exact = oracle::exact_wce_summax(inst.relu, inst.samples,
                                                  inst.eps).value;
    auto res = copos::solve_conic(
        copos::build_wce_upper(inst.problem, Vector(), 0.0).program);
    c.require(res.status == SolveStatus::Optimal,
              "instance " + std::to_string(rep) + " did not solve");
    if (res.status != SolveStatus::Optimal) continue;
    const double rel = std::abs(res.primal_objective - exact) /
                       std::max(1e-12, std::abs(exact));
    worst = std::max(worst, rel);
    c.require(rel <= 0.005, "instance " + std::to_string(rep) +
                                " relative gap " + std::to_string(rel));
    c.require(res.primal_objective >= exact - 1e-6,
              "approximation fell below the exact value");
  }
  const double secs = timer.seconds();
  c.require(secs < 120.0, "runtime exceeds 2 minutes");
  c.note("worst relative gap " + std::to_string(worst) + ", runtime " +
         std::to_string(secs) + "s");
  return c;
}

Check criterion_table1_pattern() {
  Check c;
  Timer timer;
  auto out = bench::run_gap_study({4}, {5, 10, 20}, 10, 2026, true);
  for (const auto& cell : out.cells) {
    c.require(cell.mean_c0_gap_pct <= 1.0,
              "cell I=" + std::to_string(cell.train_size) + " c0 gap " +
                  std::to_string(cell.mean_c0_gap_pct) + "%");
    c.require(cell.mean_qdr_gap_pct >= cell.mean_c0_gap_pct - 0.5,
              "cell I=" + std::to_string(cell.train_size) +
                  " decision-rule gap below the c0 gap");
    c.note("I=" + std::to_string(cell.train_size) + ": c0 " +
           std::to_string(cell.mean_c0_gap_pct) + "% qdr " +
           std::to_string(cell.mean_qdr_gap_pct) + "% solvable " +
           std::to_string(cell.solvable_pct) + "%");
  }
  const double secs = timer.seconds();
  c.require(secs < 900.0, "runtime exceeds 15 minutes");
  c.note("runtime " + std::to_string(secs) + "s");
  return c;
}

Check criterion_lp_exactness() {
  Check c;
  Timer timer;
  Rng rng(Rng::derive(2026, 4));
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    auto p = random_wlp_instance(rng, 1 + rep % 3, 3 + rep % 4);
    auto build = exact_lp::build_lp(p);
    auto res = conic::solve(build.program);
    c.require(res.status == SolveStatus::Optimal,
              "LP " + std::to_string(rep) + " did not solve");
    if (res.status != SolveStatus::Optimal) continue;
    auto sol = build.extract(res);
    const double inner = exact_lp::evaluate_fixed_x(p, sol.x);
    const double whole = p.c.dot(sol.x) + inner;
    const double rel = std::abs(whole - res.primal_objective) /
                       std::max(1.0, std::abs(res.primal_objective));
    worst = std::max(worst, rel);
    c.require(rel <= 1e-6, "instance " + std::to_string(rep) +
                               " fixed-x mismatch " + std::to_string(rel));
  }
  // LAD closed-form identity on 50 draws in the slope-dominant regime
  double worst_lad = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index k = 1 + rep % 3;
    Vector x(k);
    for (Index j = 0; j < k; ++j) x[j] = rng.uniform(-2.0, 2.0);
    if (exact_lp::dual_norm(x, 1.0, 1.0) < 1.0)
      x[0] = (x[0] >= 0 ? 1.0 : -1.0) * (1.0 + rng.uniform());
    const double x0 = rng.uniform(-1.0, 1.0);
    std::vector<Vector> xi;
    std::vector<double> chi;
    for (int i = 0; i < 5; ++i) {
      Vector v(k);
      for (Index j = 0; j < k; ++j) v[j] = rng.uniform();
      xi.push_back(v);
      chi.push_back(rng.uniform());
    }
    const double eps = 0.2 + rng.uniform();
    // two-stage encoding over the joint (xi, chi) vector
    TwoStageProblem p;
    p.recourse.Q = Matrix::Zero(1, k + 1);
    p.recourse.q = Vector::Ones(1);
    p.recourse.W = Matrix::Ones(2, 1);
    p.recourse.T.base.resize(2, k + 1);
    p.recourse.T.base.row(0) << x.transpose(), -1.0;
    p.recourse.T.base.row(1) << -x.transpose(), 1.0;
    p.recourse.h.base.resize(2);
    p.recourse.h.base << x0, -x0;
    p.recourse.h.slope = Matrix(2, 0);
    p.support.S.resize(0, k + 1);
    p.support.t.resize(0);
    for (size_t i = 0; i < xi.size(); ++i) {
      Vector joint(k + 1);
      joint << xi[i], chi[i];
      p.samples.push_back(joint);
    }
    p.metric = MetricConfig{1, NormTag::WeightedMax, eps, 1.0, 1.0};
    auto res = conic::solve(exact_lp::build_lp_fixed(p, Vector()).program);
    c.require(res.status == SolveStatus::Optimal, "LAD LP did not solve");
    const double closed = exact_lp::lad_value(x, x0, xi, chi, eps, 1.0, 1.0);
    const double err = std::abs(res.primal_objective - closed);
    worst_lad = std::max(worst_lad, err);
    c.require(err <= 1e-8 * std::max(1.0, std::abs(closed)),
              "LAD draw " + std::to_string(rep) + " error " + std::to_string(err));
  }
  const double secs = timer.seconds();
  c.require(secs < 60.0, "runtime exceeds 1 minute");
  c.note("worst fixed-x mismatch " + std::to_string(worst) + ", worst LAD error " +
         std::to_string(worst_lad) + ", runtime " + std::to_string(secs) + "s");
  return c;
}

Check criterion_oracle_sandwich() {
  Check c;
  Timer timer;
  Rng rng(Rng::derive(2026, 5));
  // sandwich on K <= 2 instances
  for (int rep = 0; rep < 12; ++rep) {
    const Index k = 1 + rep % 2;
    const Index n2 = 1 + (rep / 2) % 2;
    auto inst = random_summax(rng, k, n2, 3 + rep % 3);
    const double exact =
        oracle::exact_wce_summax(inst.relu, inst.samples, inst.eps).value;
    const double grid =
        oracle::grid_wce(inst.problem, Vector(), k == 1 ? 201 : 41).value;
    const double aff = oracle::decision_rule_bound(
        inst.relu, inst.samples, inst.eps, oracle::DecisionRuleDegree::Affine);
    const double quad = oracle::decision_rule_bound(
        inst.relu, inst.samples, inst.eps, oracle::DecisionRuleDegree::Quadratic);
    c.require(grid <= exact + 1e-6, "grid above exact on instance " +
                                        std::to_string(rep));
    c.require(exact <= aff + 1e-6, "exact above affine rule on instance " +
                                       std::to_string(rep));
    c.require(exact <= quad + 1e-6, "exact above quadratic rule on instance " +
                                        std::to_string(rep));
    c.require(quad <= aff + 1e-5, "quadratic rule above affine rule");
  }
  // recourse primal/dual agreement at 1e-7 (recourse_value throws on
  // disagreement beyond the bound)
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = random_summax(rng, 1 + rep % 2, 1 + rep % 2, 2);
    Vector xi(inst.a.cols());
    for (Index j = 0; j < xi.size(); ++j) xi[j] = rng.uniform();
    try {
      const double z = oracle::recourse_value(inst.problem, Vector(), xi);
      c.require(std::isfinite(z), "recourse value not finite");
      c.require(std::abs(z - inst.relu.value(xi)) <= 1e-6 * std::max(1.0, z),
                "recourse LP deviates from the closed form");
    } catch (const std::exception& e) {
      c.require(false, std::string("recourse dual cross-check failed: ") + e.what());
    }
  }
  // eps-monotonicity: 25 instances
  for (int rep = 0; rep < 25; ++rep) {
    auto inst = random_summax(rng, 1 + rep % 2, 1, 3);
    double prev = -1e30;
    for (double eps : {0.05, 0.3, 1.0}) {
      const double v = oracle::exact_wce_summax(inst.relu, inst.samples, eps).value;
      c.require(v >= prev - 1e-6, "eps-monotonicity violated");
      prev = v;
    }
  }
  // delta-monotonicity: 25 instances through the c0 builder
  for (int rep = 0; rep < 25; ++rep) {
    auto inst = random_summax(rng, 1 + rep % 2, 1, 2 + rep % 2);
    double prev = -1e30;
    for (double delta : {1e-1, 1e-3, 0.0}) {
      auto res = copos::solve_conic(
          copos::build_wce_upper(inst.problem, Vector(), delta).program);
      c.require(res.status == SolveStatus::Optimal, "delta solve failed");
      if (res.status != SolveStatus::Optimal) break;
      c.require(res.primal_objective >= prev - 1e-6, "delta-monotonicity violated");
      prev = res.primal_objective;
    }
  }
  const double secs = timer.seconds();
  c.require(secs < 300.0, "runtime exceeds 5 minutes");
  c.note("runtime " + std::to_string(secs) + "s");
  return c;
}

Check criterion_newsvendor_statistical() {
  Check c;
  Timer timer;
  bench::NewsvendorConfig cfg;
  cfg.items = 3;
  cfg.train_size = 10;
  cfg.trials = 20;
  cfg.test_samples = 5000;
  cfg.seed = 2026;
  cfg.eps_grid = {0.05, 0.1, 0.2, 1.0 / std::sqrt(10.0), 0.6, 1.2};
  cfg.gamma1_grid = {0.0, 0.5};
  cfg.gamma2_grid = {0.5, 2.0};
  auto out = bench::run_newsvendor_study(cfg);
  c.require(out.failed_trials == 0,
            std::to_string(out.failed_trials) + " trials failed");
  c.require(out.mean_improvement_wass > 0.0,
            "mean improvement " + std::to_string(out.mean_improvement_wass) +
                " not positive");
  c.require(out.q20_improvement_wass > -0.10,
            "20% quantile " + std::to_string(out.q20_improvement_wass) +
                " below -0.10");
  const double secs = timer.seconds();
  c.require(secs < 1200.0, "runtime exceeds 20 minutes");
  c.note("mean improvement " + std::to_string(out.mean_improvement_wass) +
         ", q20 " + std::to_string(out.q20_improvement_wass) + ", q80 " +
         std::to_string(out.q80_improvement_wass) + ", runtime " +
         std::to_string(secs) + "s");
  return c;
}

Check criterion_determinism() {
  Check c;
  Timer timer;
  auto g1 = bench::run_gap_study({1, 2}, {5}, 3, 77, true, 1);
  auto g2 = bench::run_gap_study({1, 2}, {5}, 3, 77, true, 3);
  c.require(g1.csv == g2.csv, "gap-study CSV differs across reruns");
  auto g3 = bench::run_gap_study({1, 2}, {5}, 3, 78, true, 1);
  c.require(g1.csv != g3.csv, "gap-study CSV ignores the seed");

  bench::NewsvendorConfig cfg;
  cfg.items = 2;
  cfg.train_size = 5;
  cfg.trials = 2;
  cfg.test_samples = 400;
  cfg.seed = 99;
  cfg.eps_grid = {0.1, 0.5};
  cfg.gamma1_grid = {0.0};
  cfg.gamma2_grid = {0.5};
  auto n1 = bench::run_newsvendor_study(cfg, 1);
  auto n2 = bench::run_newsvendor_study(cfg, 2);
  c.require(n1.csv == n2.csv, "newsvendor CSV differs across reruns");
  c.require(n1.quantiles_dat == n2.quantiles_dat,
            "newsvendor quantile file differs across reruns");
  c.note("runtime " + std::to_string(timer.seconds()) + "s");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<Check()>> criteria = {
      {"infinite_gap_regression", criterion_infinite_gap_regression},
      {"small_dim_exactness", criterion_small_dim_exactness},
      {"table1_pattern", criterion_table1_pattern},
      {"lp_exactness", criterion_lp_exactness},
      {"oracle_sandwich", criterion_oracle_sandwich},
      {"newsvendor_statistical", criterion_newsvendor_statistical},
      {"determinism", criterion_determinism},
  };

  std::vector<std::string> to_run;
  if (argc < 2 || std::strcmp(argv[1], "all") == 0) {
    for (const auto& [name, fn] : criteria) to_run.push_back(name);
  } else {
    for (int i = 1; i < argc; ++i) to_run.push_back(argv[i]);
  }

  int failures = 0;
  for (const auto& name : to_run) {
    auto it = criteria.find(name);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion: %s\n", name.c_str());
      return 2;
    }
    Check c;
    try {
      c = it->second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s%s%s\n", c.ok ? "PASS" : "FAIL", name.c_str(),
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    failures += c.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
