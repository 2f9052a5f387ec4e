#include "wassdro/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace wassdro {
namespace {

using nlohmann::json;

double finite(const json& j, const std::string& where) {
  if (!j.is_number())
    throw precondition_error("instance: " + where + " is not a number");
  const double v = j.get<double>();
  if (!std::isfinite(v))
    throw precondition_error("instance: non-finite value in " + where);
  return v;
}

Vector parse_vector(const json& j, const std::string& where) {
  if (!j.is_array())
    throw precondition_error("instance: " + where + " is not an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<Index>(i)] = finite(j[i], where);
  return v;
}

// dense row-major with explicit dimensions: {"rows": r, "cols": c, "data": [...]}
Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw precondition_error("instance: " + where +
                             " must be {rows, cols, data}");
  const Index r = j["rows"].get<Index>(), c = j["cols"].get<Index>();
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<Index>(data.size()) != r * c)
    throw precondition_error("instance: " + where + " data length mismatch");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k)
      m(i, k) = finite(data[static_cast<size_t>(i * c + k)], where);
  return m;
}

json dump_vector(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json dump_matrix(const Matrix& m) {
  json out;
  out["rows"] = m.rows();
  out["cols"] = m.cols();
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  out["data"] = a;
  return out;
}

}  // namespace

TwoStageProblem load_instance_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw precondition_error(std::string("instance: JSON parse error: ") +
                             e.what());
  }

  TwoStageProblem p;
  p.c = j.contains("c") ? parse_vector(j["c"], "c") : Vector();

  if (j.contains("feasible_set")) {
    const auto& fx = j["feasible_set"];
    if (fx.contains("A")) p.x_set.A = parse_matrix(fx["A"], "feasible_set.A");
    if (fx.contains("b")) p.x_set.b = parse_vector(fx["b"], "feasible_set.b");
    if (fx.contains("lb")) p.x_set.lb = parse_vector(fx["lb"], "feasible_set.lb");
    if (fx.contains("ub")) p.x_set.ub = parse_vector(fx["ub"], "feasible_set.ub");
  }
  if (p.x_set.A.size() == 0) p.x_set.A.resize(0, p.c.size());

  if (!j.contains("recourse"))
    throw precondition_error("instance: missing recourse section");
  const auto& rc = j["recourse"];
  p.recourse.Q = parse_matrix(rc.at("Q"), "recourse.Q");
  p.recourse.q = parse_vector(rc.at("q"), "recourse.q");
  p.recourse.W = parse_matrix(rc.at("W"), "recourse.W");
  p.recourse.T.base = parse_matrix(rc.at("T0"), "recourse.T0");
  if (rc.contains("T_slopes"))
    for (const auto& s : rc["T_slopes"])
      p.recourse.T.slopes.push_back(parse_matrix(s, "recourse.T_slopes"));
  p.recourse.h.base = parse_vector(rc.at("h0"), "recourse.h0");
  p.recourse.h.slope = rc.contains("H")
                           ? parse_matrix(rc["H"], "recourse.H")
                           : Matrix::Zero(p.recourse.h.base.size(), p.c.size());
  if (p.recourse.T.slopes.empty() && p.c.size() > 0)
    p.recourse.T.slopes.assign(
        p.c.size(), Matrix::Zero(p.recourse.T.base.rows(), p.recourse.T.base.cols()));

  if (!j.contains("support"))
    throw precondition_error("instance: missing support section");
  p.support.S = parse_matrix(j["support"].at("S"), "support.S");
  p.support.t = parse_vector(j["support"].at("t"), "support.t");

  if (!j.contains("samples"))
    throw precondition_error("instance: missing samples");
  for (const auto& s : j["samples"]) p.samples.push_back(parse_vector(s, "samples"));

  if (!j.contains("metric"))
    throw precondition_error("instance: missing metric section");
  const auto& mj = j["metric"];
  p.metric.order = mj.at("order").get<int>();
  const std::string tag = mj.value("norm", p.metric.order == 2
                                               ? std::string("euclidean")
                                               : std::string("weighted_max"));
  if (tag == "euclidean") p.metric.norm = NormTag::Euclidean;
  else if (tag == "weighted_max") p.metric.norm = NormTag::WeightedMax;
  else throw precondition_error("instance: unknown norm tag " + tag);
  p.metric.radius = finite(mj.at("radius"), "metric.radius");
  p.metric.w_plus = mj.contains("w_plus") ? finite(mj["w_plus"], "metric.w_plus") : 1.0;
  p.metric.w_minus = mj.contains("w_minus") ? finite(mj["w_minus"], "metric.w_minus") : 1.0;

  auto rep = validate(p);
  if (!rep.ok())
    throw precondition_error("instance failed validation:\n" + rep.to_string());
  return p;
}

TwoStageProblem load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw precondition_error("cannot open instance file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return load_instance_json(os.str());
}

std::string save_instance_json(const TwoStageProblem& p) {
  json j;
  j["c"] = dump_vector(p.c);
  json fx;
  fx["A"] = dump_matrix(p.x_set.A);
  fx["b"] = dump_vector(p.x_set.b);
  if (p.x_set.lb.size()) fx["lb"] = dump_vector(p.x_set.lb);
  if (p.x_set.ub.size()) fx["ub"] = dump_vector(p.x_set.ub);
  j["feasible_set"] = fx;
  json rc;
  rc["Q"] = dump_matrix(p.recourse.Q);
  rc["q"] = dump_vector(p.recourse.q);
  rc["W"] = dump_matrix(p.recourse.W);
  rc["T0"] = dump_matrix(p.recourse.T.base);
  json slopes = json::array();
  for (const auto& s : p.recourse.T.slopes) slopes.push_back(dump_matrix(s));
  rc["T_slopes"] = slopes;
  rc["h0"] = dump_vector(p.recourse.h.base);
  rc["H"] = dump_matrix(p.recourse.h.slope);
  j["recourse"] = rc;
  json sp;
  sp["S"] = dump_matrix(p.support.S);
  sp["t"] = dump_vector(p.support.t);
  j["support"] = sp;
  json samples = json::array();
  for (const auto& s : p.samples) samples.push_back(dump_vector(s));
  j["samples"] = samples;
  json mj;
  mj["order"] = p.metric.order;
  mj["norm"] = p.metric.norm == NormTag::Euclidean ? "euclidean" : "weighted_max";
  mj["radius"] = p.metric.radius;
  mj["w_plus"] = p.metric.w_plus;
  mj["w_minus"] = p.metric.w_minus;
  j["metric"] = mj;
  return j.dump(2);
}

}  // namespace wassdro
