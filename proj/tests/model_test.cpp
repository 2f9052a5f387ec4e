#include "wassdro/model.hpp"
#include "wassdro/model_io.hpp"

#include <doctest.h>

#include <random>

using namespace wassdro;

TEST_SUITE_BEGIN("model");

namespace {

// small helper: newsvendor-shaped instance with K items
TwoStageProblem newsvendor_instance(Index k, std::vector<Vector> samples,
                                    double radius) {
  TwoStageProblem p;
  p.c = Vector::Zero(k);
  p.x_set.A = Matrix::Ones(1, k);
  p.x_set.b = Vector::Constant(1, 30.0);
  p.x_set.lb = Vector::Zero(k);
  const Vector b = Vector::Ones(k), s = 10.0 * Vector::Ones(k);
  p.recourse.Q = Matrix::Zero(k, k);
  p.recourse.q = Vector::Ones(k);
  p.recourse.W.resize(2 * k, k);
  p.recourse.W << Matrix::Identity(k, k), Matrix::Identity(k, k);
  p.recourse.T.base.resize(2 * k, k);
  p.recourse.T.base << -Matrix(b.asDiagonal()), Matrix(s.asDiagonal());
  p.recourse.T.slopes.assign(k, Matrix::Zero(2 * k, k));
  p.recourse.h.base = Vector::Zero(2 * k);
  p.recourse.h.slope.resize(2 * k, k);
  p.recourse.h.slope << Matrix(b.asDiagonal()), Matrix(Matrix(s.asDiagonal()) * -1.0);
  p.support.S.resize(0, k);
  p.support.t.resize(0);
  p.samples = std::move(samples);
  p.metric = MetricConfig{2, NormTag::Euclidean, radius, 1.0, 1.0};
  return p;
}

TwoStageProblem example33_instance() {
  // Z(x, xi) = inf{(xi-1) y : xi - 1 <= 0*y}, support {1}, one sample at 1
  TwoStageProblem p;
  p.c = Vector();
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

}  // namespace

TEST_CASE("complete recourse: simple certificates") {
  Matrix w(2, 1);
  w << 1, 1;
  auto chk = check_complete_recourse(w);
  CHECK(chk.complete);
  REQUIRE(chk.certificate.has_value());
  CHECK((w * *chk.certificate).minCoeff() >= 1e-8);

  w << 1, -1;
  chk = check_complete_recourse(w);
  CHECK_FALSE(chk.complete);
  CHECK_FALSE(chk.certificate.has_value());
}

TEST_CASE("complete recourse: newsvendor stacking W=[I;I]") {
  const Index k = 3;
  Matrix w(2 * k, k);
  w << Matrix::Identity(k, k), Matrix::Identity(k, k);
  auto chk = check_complete_recourse(w);
  CHECK(chk.complete);
  REQUIRE(chk.certificate.has_value());
  CHECK((w * *chk.certificate).minCoeff() >= 1e-8);
  CHECK(chk.certificate->cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("complete recourse implies strictly copositive WW' on the simplex") {
  // discretized check: min over a simplex grid of l' WW' l stays positive
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  int found = 0;
  while (found < 5) {
    const Index m = 3, n2 = 2;
    Matrix w(m, n2);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n2; ++j) w(i, j) = u(rng);
    auto chk = check_complete_recourse(w);
    if (!chk.complete) continue;
    ++found;
    const Matrix ww = w * w.transpose();
    double best = 1e30;
    const double step = 0.05;
    for (double a = 0; a <= 1.0 + 1e-12; a += step)
      for (double b = 0; a + b <= 1.0 + 1e-12; b += step) {
        Vector l(3);
        l << a, b, 1.0 - a - b;
        best = std::min(best, l.dot(ww * l));
      }
    CHECK(best > 0.0);
  }
}

TEST_CASE("sufficiently expensive recourse") {
  SUBCASE("Q = 0 with spanning W is xi-independent") {
    auto p = newsvendor_instance(2, {Vector::Constant(2, 1.0)}, 0.5);
    auto rep = check_sufficiently_expensive(p, {Vector::Constant(2, 0.3)});
    CHECK(rep.xi_independent);
    CHECK(rep.independent_value);
    REQUIRE(rep.per_point.size() == 1);
    CHECK(rep.per_point[0]);
  }
  SUBCASE("example with a zero W row is feasible at its support point") {
    auto p = example33_instance();
    auto rep = check_sufficiently_expensive(p, {Vector::Constant(1, 1.0)});
    CHECK_FALSE(rep.xi_independent);
    REQUIRE(rep.per_point.size() == 1);
    CHECK(rep.per_point[0]);
    CHECK_FALSE(rep.warning.empty());
  }
  SUBCASE("infeasible dual: q = -1 with W = [1]") {
    TwoStageProblem p = newsvendor_instance(1, {Vector::Constant(1, 1.0)}, 0.5);
    p.recourse.W = Matrix::Constant(1, 1, 1.0);
    p.recourse.q = Vector::Constant(1, -1.0);
    p.recourse.T.base = Matrix::Zero(1, 1);
    p.recourse.T.slopes.assign(1, Matrix::Zero(1, 1));
    p.recourse.h.base = Vector::Zero(1);
    p.recourse.h.slope = Matrix::Zero(1, 1);
    auto rep = check_sufficiently_expensive(p, {});
    CHECK(rep.xi_independent);
    CHECK_FALSE(rep.independent_value);
  }
  SUBCASE("empty point list with Q != 0 is a precondition error") {
    auto p = example33_instance();
    CHECK_THROWS_AS(check_sufficiently_expensive(p, {}), precondition_error);
  }
}

TEST_CASE("extend: example 3.3 matrices") {
  auto e = extend(example33_instance());
  Matrix q_ext(3, 1);
  q_ext << 1, 1, -1;
  CHECK((e.Q_ext - q_ext).cwiseAbs().maxCoeff() == 0.0);
  Vector qv(3);
  qv << -1, -1, 1;
  CHECK((e.q_ext - qv).cwiseAbs().maxCoeff() == 0.0);
  Matrix w_ext(3, 3);
  w_ext << 0, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK((e.W_ext - w_ext).cwiseAbs().maxCoeff() == 0.0);
  Matrix t_ext(3, 1);
  t_ext << 1, 0, 0;
  CHECK((e.T_ext.base - t_ext).cwiseAbs().maxCoeff() == 0.0);
  Vector h_ext(3);
  h_ext << -1, 0, 0;
  CHECK((e.h_ext.base - h_ext).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extend: J = 0 degenerates to the original data") {
  auto p = newsvendor_instance(2, {Vector::Constant(2, 1.0)}, 0.5);
  auto e = extend(p);
  CHECK((e.Q_ext - p.recourse.Q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.q_ext - p.recourse.q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.W_ext - p.recourse.W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extend: random instance blocks match a hand assembly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  TwoStageProblem p;
  const Index k = 2, n2 = 2, m = 2, j = 2, n1 = 2;
  p.c = Vector::Zero(n1);
  p.recourse.Q = Matrix::NullaryExpr(n2, k, [&] { return u(rng); });
  p.recourse.q = Vector::NullaryExpr(n2, [&] { return u(rng); });
  p.recourse.W = Matrix::NullaryExpr(m, n2, [&] { return u(rng); });
  p.recourse.T.base = Matrix::NullaryExpr(m, k, [&] { return u(rng); });
  for (Index n = 0; n < n1; ++n)
    p.recourse.T.slopes.push_back(Matrix::NullaryExpr(m, k, [&] { return u(rng); }));
  p.recourse.h.base = Vector::NullaryExpr(m, [&] { return u(rng); });
  p.recourse.h.slope = Matrix::NullaryExpr(m, n1, [&] { return u(rng); });
  p.support.S = Matrix::NullaryExpr(j, k, [&] { return std::abs(u(rng)); });
  p.support.t = Vector::NullaryExpr(j, [&] { return 1.0 + std::abs(u(rng)); });
  p.samples = {Vector::Zero(k)};
  p.metric = MetricConfig{2, NormTag::Euclidean, 1.0, 1.0, 1.0};

  auto e = extend(p);
  // re-reading the blocks returns the originals exactly
  CHECK((e.Q_ext.topRows(n2) - p.recourse.Q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.Q_ext.bottomRows(j) - p.support.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.q_ext.head(n2) - p.recourse.q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.q_ext.tail(j) + p.support.t).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.W_ext.topLeftCorner(m, n2) - p.recourse.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.W_ext.topRightCorner(m, j).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.W_ext.bottomLeftCorner(j, n2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.W_ext.bottomRightCorner(j, j) + Matrix::Identity(j, j))
            .cwiseAbs().maxCoeff() == 0.0);
  // x dependence evaluates exactly
  Vector x(n1);
  x << u(rng), u(rng);
  const Matrix t_at = e.T_ext(x);
  CHECK((t_at.topRows(m) - p.recourse.T(x)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(t_at.bottomRows(j).cwiseAbs().maxCoeff() == 0.0);
  const Vector h_at = e.h_ext(x);
  CHECK((h_at.head(m) - p.recourse.h(x)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("validate: well-formed instance yields an empty report") {
  auto p = newsvendor_instance(
      2, {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)}, 0.3);
  CHECK(validate(p).ok());
}

TEST_CASE("validate: sample with negative coordinate is flagged") {
  auto p = newsvendor_instance(2, {Vector::Constant(2, -1.0)}, 0.3);
  auto rep = validate(p);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.findings[0].code == "sample_outside_support");
}

TEST_CASE("validate: empty support detected by LP") {
  auto p = newsvendor_instance(1, {Vector::Constant(1, 0.0)}, 0.3);
  p.support.S = Matrix::Constant(1, 1, 1.0);
  p.support.t = Vector::Constant(1, -1.0);  // xi >= 0 and xi <= -1
  auto rep = validate(p);
  bool found = false;
  for (const auto& f : rep.findings) found |= f.code == "empty_support";
  CHECK(found);
}

TEST_CASE("instance json round-trip") {
  auto p = newsvendor_instance(
      2, {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)}, 0.25);
  const std::string text = save_instance_json(p);
  auto p2 = load_instance_json(text);
  CHECK(p2.num_first_stage() == p.num_first_stage());
  CHECK(p2.num_samples() == p.num_samples());
  CHECK((p2.recourse.W - p.recourse.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p2.metric.radius == p.metric.radius);
}

TEST_CASE("instance loader rejects non-finite values") {
  auto p = newsvendor_instance(1, {Vector::Constant(1, 1.0)}, 0.25);
  std::string text = save_instance_json(p);
  const auto pos = text.find("\"radius\": 0.25");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"radius\": 0.25").size(), "\"radius\": 1e999");
  CHECK_THROWS_AS(load_instance_json(text), precondition_error);
}

TEST_CASE("support box vertices") {
  SupportPolytope box;
  box.S.resize(2, 2);
  box.S << 1, 0, 0, 1;
  box.t.resize(2);
  box.t << 1.0, 2.0;
  auto verts = support_box_vertices(box);
  REQUIRE(verts.size() == 4);
  double maxsum = 0;
  for (const auto& v : verts) maxsum = std::max(maxsum, v.sum());
  CHECK(maxsum == doctest::Approx(3.0));

  SupportPolytope coupled;
  coupled.S = Matrix::Ones(1, 2);  // x1 + x2 <= 1 is not a box
  coupled.t = Vector::Ones(1);
  CHECK(support_box_vertices(coupled).empty());

  SupportPolytope unbounded;
  unbounded.S.resize(0, 2);
  unbounded.t.resize(0);
  CHECK(support_box_vertices(unbounded).empty());
}

TEST_CASE("sufficiently-expensive check over all box vertices") {
  // Q != 0 instance on a box: verify at the enumerated vertices
  TwoStageProblem p;
  p.recourse.Q = Matrix::Identity(2, 2);
  p.recourse.q = Vector::Ones(2);
  p.recourse.W.resize(2, 2);
  p.recourse.W << 1, 0, 0, 1;  // W'p = Q xi + q needs Q xi + q >= 0
  p.recourse.T.base = Matrix::Zero(2, 2);
  p.recourse.h.base = Vector::Zero(2);
  p.recourse.h.slope = Matrix(2, 0);
  p.support.S = Matrix::Identity(2, 2);
  p.support.t = Vector::Ones(2);
  p.samples = {Vector::Zero(2)};
  p.metric = MetricConfig{2, NormTag::Euclidean, 1.0, 1.0, 1.0};
  auto verts = support_box_vertices(p.support);
  REQUIRE(verts.size() == 4);
  auto rep = check_sufficiently_expensive(p, verts);
  REQUIRE(rep.per_point.size() == 4);
  for (bool ok : rep.per_point) CHECK(ok);  // xi + 1 >= 0 on the box
}

TEST_SUITE_END();
