#include "wassdro/oracles.hpp"
#include "wassdro/solver.hpp"

#include <doctest.h>

#include <random>

using namespace wassdro;
using namespace wassdro::oracle;

TEST_SUITE_BEGIN("oracles");

namespace {

TwoStageProblem newsvendor_fixed(Index k, const Vector& b, const Vector& s) {
  TwoStageProblem p;
  p.recourse.Q = Matrix::Zero(k, k);
  p.recourse.q = Vector::Ones(k);
  p.recourse.W.resize(2 * k, k);
  p.recourse.W << Matrix::Identity(k, k), Matrix::Identity(k, k);
  p.recourse.T.base.resize(2 * k, k);
  p.recourse.T.base << Matrix((-b).asDiagonal()), Matrix(s.asDiagonal());
  p.recourse.h.base = Vector::Zero(2 * k);
  p.recourse.h.slope = Matrix(2 * k, 0);
  p.support.S.resize(0, k);
  p.support.t.resize(0);
  p.samples = {Vector::Zero(k)};
  p.metric = MetricConfig{2, NormTag::Euclidean, 0.5, 1.0, 1.0};
  return p;
}

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

// Z(x, xi) = xi on [0, 1] modeled as min{y : y >= xi, y >= 0} minus nothing
TwoStageProblem identity_cost_instance(double radius, const Vector& sample) {
  TwoStageProblem p;
  p.recourse.Q = Matrix::Zero(1, 1);
  p.recourse.q = Vector::Ones(1);
  p.recourse.W.resize(2, 1);
  p.recourse.W << 1.0, 1.0;
  p.recourse.T.base.resize(2, 1);
  p.recourse.T.base << 1.0, 0.0;
  p.recourse.h.base = Vector::Zero(2);
  p.recourse.h.slope = Matrix(2, 0);
  p.support.S = Matrix::Identity(1, 1);
  p.support.t = Vector::Ones(1);
  p.samples = {sample};
  p.metric = MetricConfig{2, NormTag::Euclidean, radius, 1.0, 1.0};
  return p;
}

}  // namespace

TEST_CASE("recourse value: newsvendor closed form") {
  const Index k = 1;
  auto p = newsvendor_fixed(k, Vector::Ones(k), 10.0 * Vector::Ones(k));
  Vector x = Vector::Constant(1, 2.0), xi = Vector::Constant(1, 1.0);
  // h(x) folded manually: T(x)xi + h(x) rows are (-b)(xi - x), s(xi - x)
  p.recourse.h.base.resize(2);
  p.recourse.h.base << 1.0 * 2.0, -10.0 * 2.0;
  CHECK(recourse_value(p, Vector(), xi) == doctest::Approx(1.0).epsilon(1e-7));

  Vector xi0 = Vector::Zero(1);
  p.recourse.h.base << 0.0, 0.0;
  CHECK(recourse_value(p, Vector(), xi0) == doctest::Approx(0.0).epsilon(1e-7));
  (void)x;
}

TEST_CASE("recourse value: infinite tags") {
  auto p = example33_instance();
  // xi = 2 violates 1 <= 0y
  CHECK(recourse_value(p, Vector(), Vector::Constant(1, 2.0)) ==
        std::numeric_limits<double>::infinity());
  // xi = 1 gives value 0
  CHECK(recourse_value(p, Vector(), Vector::Constant(1, 1.0)) ==
        doctest::Approx(0.0));
  // unbounded: minimize -y with y free and no binding rows
  TwoStageProblem ub;
  ub.recourse.Q = Matrix::Zero(1, 1);
  ub.recourse.q = Vector::Constant(1, -1.0);
  ub.recourse.W = Matrix::Constant(1, 1, 1.0);
  ub.recourse.T.base = Matrix::Zero(1, 1);
  ub.recourse.h.base = Vector::Zero(1);
  ub.recourse.h.slope = Matrix(1, 0);
  ub.support.S.resize(0, 1);
  ub.support.t.resize(0);
  ub.samples = {Vector::Zero(1)};
  ub.metric = MetricConfig{2, NormTag::Euclidean, 1.0, 1.0, 1.0};
  CHECK(recourse_value(ub, Vector(), Vector::Zero(1)) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("exact socp: zero recourse on the box") {
  // A=[1], b=[2]: A xi - b <= -1 on [0,1], so Z = 0 everywhere
  auto r = SumMaxRecourse::from_relu(Matrix::Constant(1, 1, 1.0),
                                     Vector::Constant(1, 2.0), Vector::Zero(1),
                                     Vector::Ones(1));
  auto sol = exact_wce_summax(r, {Vector::Constant(1, 0.5)}, 1.0);
  CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("exact socp: analytic value 1") {
  auto r = SumMaxRecourse::from_relu(Matrix::Constant(1, 1, 1.0), Vector::Zero(1),
                                     Vector::Zero(1), Vector::Ones(1));
  auto sol = exact_wce_summax(r, {Vector::Zero(1)}, 1.0);
  CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.lambda >= 0.0);
}

TEST_CASE("exact socp: small radius approaches the empirical value") {
  auto r = SumMaxRecourse::from_relu(Matrix::Constant(1, 1, 1.0), Vector::Zero(1),
                                     Vector::Zero(1), Vector::Ones(1));
  auto sol = exact_wce_summax(r, {Vector::Ones(1)}, 1e-3);
  CHECK(std::abs(sol.value - 1.0) < 1e-2);  // Z(1) = 1
}

TEST_CASE("exact socp: nondecreasing in eps and SAA limit") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix a(2, 2);
  a << u(rng), u(rng), u(rng), u(rng);
  Vector b(2);
  b << 0.4 * u(rng), 0.4 * u(rng);
  auto r = SumMaxRecourse::from_relu(a, b, Vector::Zero(2), Vector::Ones(2));
  std::vector<Vector> samples;
  for (int i = 0; i < 4; ++i) {
    Vector xi(2);
    xi << u(rng), u(rng);
    samples.push_back(xi);
  }
  double saa = 0.0;
  for (const auto& xi : samples) saa += r.value(xi);
  saa /= static_cast<double>(samples.size());

  double prev = -1e30;
  double v_last = 0;
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    const double v = exact_wce_summax(r, samples, eps).value;
    CHECK(v >= prev - 1e-7);
    prev = v;
    if (eps == 1e-3) v_last = v;
  }
  CHECK(std::abs(v_last - saa) < 5e-2);
  CHECK(v_last >= saa - 1e-6);
}

TEST_CASE("enumeration guard refuses oversized instances") {
  const Index n2 = 15;
  Matrix a = Matrix::Ones(n2, 1);
  Vector b = Vector::Zero(n2);
  CHECK_THROWS_AS(
      SumMaxRecourse::from_relu(a, b, Vector::Zero(1), Vector::Ones(1)),
      precondition_error);
}

TEST_CASE("grid oracle: linear cost analytic optimum") {
  // Z = xi on [0,1], sample 0, eps = 0.5, r = 2: value 0.5 at lambda* = 1
  auto p = identity_cost_instance(0.5, Vector::Zero(1));
  auto g = grid_wce(p, Vector(), 1001);
  CHECK(g.value == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_FALSE(g.hit_infinite);
}

TEST_CASE("grid oracle: zero cost stays zero") {
  auto p = identity_cost_instance(0.7, Vector::Constant(1, 0.2));
  p.recourse.T.base << 0.0, 0.0;  // Z == 0
  auto g = grid_wce(p, Vector(), 101);
  CHECK(g.value == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("grid oracle: huge radius gives the robust value") {
  auto p = identity_cost_instance(10.0, Vector::Zero(1));
  auto g = grid_wce(p, Vector(), 501);
  CHECK(g.value == doctest::Approx(1.0).epsilon(1e-3));  // max Z on [0,1]
}

TEST_CASE("grid oracle reports infinite recourse") {
  auto p = example33_instance();
  // support [2,3]: the row xi - 1 <= 0*y is violated everywhere
  p.support.S.resize(2, 1);
  p.support.S << 1.0, -1.0;
  p.support.t.resize(2);
  p.support.t << 3.0, -2.0;
  p.samples = {Vector::Constant(1, 2.0)};
  auto g = grid_wce(p, Vector(), 11);
  CHECK(g.hit_infinite);
  CHECK(g.value == std::numeric_limits<double>::infinity());
}

TEST_CASE("cvar from costs: pinned examples") {
  std::vector<double> costs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(cvar_from_costs(costs, 0.5) == doctest::Approx(8.0));
  CHECK(cvar_from_costs(costs, 1.0) == doctest::Approx(5.5));
  CHECK(cvar_from_costs({3, 3, 3}, 0.4) == doctest::Approx(3.0));
  // fractional tail: rho = 0.25 on 10 samples -> 2.5 tail samples
  CHECK(cvar_from_costs(costs, 0.25) ==
        doctest::Approx((10 + 9 + 0.5 * 8) / 2.5));
}

TEST_CASE("cvar level zero is rejected") {
  CHECK_THROWS_AS(cvar_from_costs({1.0, 2.0}, 0.0), precondition_error);
  auto p = newsvendor_fixed(1, Vector::Ones(1), 10.0 * Vector::Ones(1));
  CHECK_THROWS_AS(saa_cvar(p, nullptr, 0.0, true), precondition_error);
}

TEST_CASE("saa cvar LP agrees with the sorted oracle at fixed x") {
  const Index k = 2;
  auto p = newsvendor_fixed(k, Vector::Ones(k), 10.0 * Vector::Ones(k));
  p.c = Vector::Zero(0);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  p.samples.clear();
  for (int i = 0; i < 8; ++i) {
    Vector xi(k);
    xi << u(rng), u(rng);
    p.samples.push_back(xi);
  }
  const Vector x = Vector::Constant(k, 1.2);
  // fold fixed x into h
  p.recourse.h.base.resize(2 * k);
  p.recourse.h.base << x, Vector(-10.0 * x);
  std::vector<double> costs;
  for (const auto& xi : p.samples) costs.push_back(recourse_value(p, Vector(), xi));
  const double rho = 0.3;
  auto lp = saa_cvar(p, nullptr, rho, false);
  // x enters through h already; x_fixed unused for evaluation
  CHECK(lp.value == doctest::Approx(cvar_from_costs(costs, rho)).epsilon(1e-6));
}

TEST_CASE("decision rules: affine is tight for affine recourse") {
  // single term, strongly negative b: max(a.xi - b, 0) = a.xi - b on the box
  Matrix a = Matrix::Constant(1, 2, 0.7);
  Vector b = Vector::Constant(1, -5.0);
  auto r = SumMaxRecourse::from_relu(a, b, Vector::Zero(2), Vector::Ones(2));
  std::vector<Vector> samples{Vector::Constant(2, 0.3), Vector::Constant(2, 0.9)};
  const double eps = 0.4;
  const double exact = exact_wce_summax(r, samples, eps).value;
  const double aff = decision_rule_bound(r, samples, eps, DecisionRuleDegree::Affine);
  CHECK(aff >= exact - 1e-6);
  CHECK(aff == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("decision rules: quadratic never worse than affine, both above exact") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 8; ++rep) {
    const Index k = 1 + rep % 2, n2 = 1 + (rep / 2) % 2;
    Matrix a(n2, k);
    Vector b(n2);
    for (Index i = 0; i < n2; ++i) {
      double rowsum = 0;
      for (Index j = 0; j < k; ++j) {
        a(i, j) = u(rng);
        rowsum += a(i, j);
      }
      b[i] = u(rng) * rowsum;
    }
    auto r = SumMaxRecourse::from_relu(a, b, Vector::Zero(k), Vector::Ones(k));
    std::vector<Vector> samples;
    for (int i = 0; i < 3; ++i) {
      Vector xi(k);
      for (Index j = 0; j < k; ++j) xi[j] = u(rng);
      samples.push_back(xi);
    }
    const double eps = 1.0 / std::sqrt(3.0);
    const double exact = exact_wce_summax(r, samples, eps).value;
    const double aff = decision_rule_bound(r, samples, eps, DecisionRuleDegree::Affine);
    const double quad =
        decision_rule_bound(r, samples, eps, DecisionRuleDegree::Quadratic);
    CHECK(quad <= aff + 1e-5);
    CHECK(quad >= exact - 1e-5);
    CHECK(aff >= exact - 1e-5);
  }
}

TEST_CASE("sandwich: grid <= exact <= decision rule") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 4; ++rep) {
    const Index k = 1 + rep % 2;
    const Index n2 = 1 + rep / 2 % 2;
    Matrix a(n2, k);
    Vector b(n2);
    for (Index i = 0; i < n2; ++i) {
      double rowsum = 0;
      for (Index j = 0; j < k; ++j) {
        a(i, j) = u(rng);
        rowsum += a(i, j);
      }
      b[i] = u(rng) * rowsum;
    }
    auto r = SumMaxRecourse::from_relu(a, b, Vector::Zero(k), Vector::Ones(k));
    std::vector<Vector> samples;
    for (int i = 0; i < 3; ++i) {
      Vector xi(k);
      for (Index j = 0; j < k; ++j) xi[j] = u(rng);
      samples.push_back(xi);
    }
    const double eps = 0.5;
    // grid needs the TwoStageProblem form of the same recourse
    TwoStageProblem p;
    p.recourse.Q = Matrix::Zero(n2, k);
    p.recourse.q = Vector::Ones(n2);
    p.recourse.W.resize(2 * n2, n2);
    p.recourse.W << Matrix::Identity(n2, n2), Matrix::Identity(n2, n2);
    p.recourse.T.base.resize(2 * n2, k);
    p.recourse.T.base << a, Matrix::Zero(n2, k);
    p.recourse.h.base.resize(2 * n2);
    p.recourse.h.base << -b, Vector::Zero(n2);
    p.recourse.h.slope = Matrix(2 * n2, 0);
    p.support.S = Matrix::Identity(k, k);
    p.support.t = Vector::Ones(k);
    p.samples = samples;
    p.metric = MetricConfig{2, NormTag::Euclidean, eps, 1.0, 1.0};

    const double exact = exact_wce_summax(r, samples, eps).value;
    const double grid = grid_wce(p, Vector(), k == 1 ? 201 : 41).value;
    const double aff = decision_rule_bound(r, samples, eps, DecisionRuleDegree::Affine);
    CHECK(grid <= exact + 1e-6);
    CHECK(exact <= aff + 1e-6);
    CHECK(grid >= exact - 5e-2);  // grid converges from below
  }
}

TEST_SUITE_END();
