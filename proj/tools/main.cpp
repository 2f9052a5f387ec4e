#include "wassdro/bench.hpp"
#include "wassdro/conic_io.hpp"
#include "wassdro/copos.hpp"
#include "wassdro/exact_lp.hpp"
#include "wassdro/model_io.hpp"
#include "wassdro/oracles.hpp"
#include "wassdro/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace wassdro;
using nlohmann::json;

std::uint64_t effective_seed(std::uint64_t from_config) {
  if (const char* env = std::getenv("WASSDRO_SEED"))
    return std::strtoull(env, nullptr, 10);
  return from_config;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

json result_to_json(const conic::SolveResult& res) {
  json j;
  j["status"] = conic::status_name(res.status);
  j["objective"] = res.primal_objective;
  j["dual_objective"] = res.dual_objective;
  j["primal_residual"] = res.primal_residual;
  j["dual_residual"] = res.dual_residual;
  j["gap"] = res.gap;
  j["iterations"] = res.iterations;
  if (!res.message.empty()) j["message"] = res.message;
  return j;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    auto p = load_instance_json(buf.str());
    std::cout << "instance ok: N1=" << p.num_first_stage()
              << " K=" << p.recourse.uncertainty_dim()
              << " M=" << p.recourse.num_rows()
              << " N2=" << p.recourse.num_recourse_vars()
              << " J=" << p.support.num_rows() << " I=" << p.num_samples()
              << "\n";
    auto cr = check_complete_recourse(p.recourse.W);
    std::cout << "complete recourse: " << (cr.complete ? "yes" : "no") << "\n";
    auto se = check_sufficiently_expensive(p, p.samples);
    if (se.xi_independent) {
      std::cout << "sufficiently expensive recourse: "
                << (se.independent_value ? "yes" : "no")
                << " (independent of the uncertainty)\n";
    } else {
      Index ok = 0;
      for (bool b : se.per_point) ok += b ? 1 : 0;
      std::cout << "sufficiently expensive recourse at " << ok << "/"
                << se.per_point.size() << " sample points";
      if (!se.warning.empty()) std::cout << " [" << se.warning << "]";
      std::cout << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid instance: " << e.what() << "\n";
    return 1;
  }
}

int cmd_solve(const std::string& path, double delta,
              const std::string& schedule_text, bool use_schedule,
              const std::string& export_format, const std::string& out_prefix,
              double cvar_rho) {
  auto p = load_instance_file(path);
  json out;
  if (use_schedule) {
    auto schedule = parse_list(schedule_text);
    auto traj = copos::delta_refinement(p, schedule);
    json steps = json::array();
    for (const auto& st : traj.steps) {
      json row;
      row["delta"] = st.delta;
      row["status"] = conic::status_name(st.status);
      row["value"] = st.value;
      if (st.x.size()) row["x"] = vector_to_json(st.x);
      steps.push_back(row);
    }
    out["schedule"] = steps;
    out["delta_zero_solved"] = traj.delta_zero_solved;
    if (traj.has_candidate) {
      out["value"] = traj.value;
      out["delta_used"] = traj.delta_used;
      if (traj.x_candidate.size()) out["x"] = vector_to_json(traj.x_candidate);
    } else {
      out["value"] = nullptr;
      out["outcome"] = "no feasible candidate";
    }
  } else {
    copos::CoposBuild build =
        cvar_rho > 0
            ? copos::build_risk_averse(p, copos::DisutilitySpec::cvar(cvar_rho), delta)
            : copos::build_full_problem(p, delta);
    if (!export_format.empty()) {
      const auto fmt = export_format == "cbf" ? conic::ExportFormat::Cbf
                                              : conic::ExportFormat::SdpaSparse;
      const std::string art = conic::export_program(build.program, fmt);
      const std::string file =
          (out_prefix.empty() ? "program" : out_prefix) + conic::export_extension(fmt);
      write_file(file, art);
      std::cout << "wrote " << file << "\n";
    }
    auto res = copos::solve_conic(build.program);
    auto sol = build.extract(res);
    out = result_to_json(res);
    out["delta"] = delta;
    out["bound_kind"] = build.bound_kind;
    if (res.status == conic::SolveStatus::Optimal) {
      out["x"] = vector_to_json(sol.x);
      out["lambda"] = sol.lambda;
    }
  }
  const std::string text = out.dump(2) + "\n";
  if (!out_prefix.empty()) write_file(out_prefix + ".json", text);
  std::cout << text;
  return 0;
}

int cmd_solve_lp(const std::string& path, const std::string& out_prefix) {
  auto p = load_instance_file(path);
  auto build = exact_lp::build_lp(p);
  if (!build.warning.empty()) std::cerr << "warning: " << build.warning << "\n";
  auto res = conic::solve(build.program);
  auto sol = build.extract(res);
  json out = result_to_json(res);
  if (res.status == conic::SolveStatus::Optimal) {
    out["x"] = vector_to_json(sol.x);
    out["lambda"] = sol.lambda;
  }
  const std::string text = out.dump(2) + "\n";
  if (!out_prefix.empty()) write_file(out_prefix + ".json", text);
  std::cout << text;
  return 0;
}

int cmd_oracle_socp(const std::string& path, double eps) {
  auto p = load_instance_file(path);
  // interpret the instance's recourse rows as relu terms when they carry
  // the canonical [A;0] / [I;I] stacking
  const Index n2 = p.recourse.num_recourse_vars();
  const Index k = p.recourse.uncertainty_dim();
  Matrix a = p.recourse.T.base.topRows(n2);
  Vector b = -p.recourse.h.base.head(n2);
  Vector lo = Vector::Zero(k), hi = Vector::Ones(k);
  auto relu = oracle::SumMaxRecourse::from_relu(a, b, lo, hi);
  auto sol = oracle::exact_wce_summax(relu, p.samples,
                                      eps > 0 ? eps : p.metric.radius);
  std::cout << "exact worst-case expectation: " << sol.value << "\n";
  return 0;
}

int cmd_oracle_grid(const std::string& path, Index grid_n, const std::string& x_text) {
  auto p = load_instance_file(path);
  Vector x;
  if (!x_text.empty()) {
    auto vals = parse_list(x_text);
    x = Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
  }
  auto g = oracle::grid_wce(p, x, grid_n);
  std::cout << "grid value: " << g.value
            << " refined estimate: " << g.refined_estimate
            << (g.hit_infinite ? " (unbounded recourse on the grid)" : "")
            << "\n";
  return 0;
}

int cmd_oracle_saa(const std::string& path, double rho, bool optimize,
                   const std::string& x_text) {
  auto p = load_instance_file(path);
  Vector x;
  const Vector* xp = nullptr;
  if (!x_text.empty()) {
    auto vals = parse_list(x_text);
    x = Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
    xp = &x;
  }
  auto res = oracle::saa_cvar(p, xp, rho, optimize);
  std::cout << "saa cvar value: " << res.value << "\n";
  if (optimize) {
    std::cout << "x:";
    for (Index i = 0; i < res.x.size(); ++i) std::cout << " " << res.x[i];
    std::cout << "\n";
  }
  return 0;
}

int cmd_gap_study(const std::string& k_text, const std::string& i_text,
                  Index trials, std::uint64_t seed, bool reduced,
                  const std::string& out_prefix) {
  std::vector<Index> k_list, i_list;
  for (double v : parse_list(k_text)) k_list.push_back(static_cast<Index>(v));
  for (double v : parse_list(i_text)) i_list.push_back(static_cast<Index>(v));
  auto out = bench::run_gap_study(k_list, i_list, trials, effective_seed(seed),
                                  reduced);
  write_file(out_prefix + "_rows.csv", out.csv);
  write_file(out_prefix + "_timings.log", out.timing_log);
  std::printf("%4s %4s %12s %12s %10s\n", "K", "I", "c0_gap_%", "qdr_gap_%",
              "solvable_%");
  for (const auto& c : out.cells)
    std::printf("%4lld %4lld %12.4f %12.4f %10.1f\n",
                static_cast<long long>(c.k), static_cast<long long>(c.train_size),
                c.mean_c0_gap_pct, c.mean_qdr_gap_pct, c.solvable_pct);
  std::cout << "wrote " << out_prefix << "_rows.csv\n";
  return 0;
}

int cmd_newsvendor(const std::string& cfg_path, const std::string& out_prefix) {
  bench::NewsvendorConfig cfg;
  if (!cfg_path.empty()) {
    std::ifstream in(cfg_path);
    if (!in) throw std::runtime_error("cannot open " + cfg_path);
    json j;
    in >> j;
    cfg.items = j.value("items", cfg.items);
    cfg.budget = j.value("budget", cfg.budget);
    cfg.cvar_level = j.value("cvar_level", cfg.cvar_level);
    cfg.train_size = j.value("train_size", cfg.train_size);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.test_samples = j.value("test_samples", cfg.test_samples);
    cfg.cv_folds = j.value("cv_folds", cfg.cv_folds);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("holding")) {
      auto v = j["holding"].get<std::vector<double>>();
      cfg.holding = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
    if (j.contains("stockout")) {
      auto v = j["stockout"].get<std::vector<double>>();
      cfg.stockout = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
    if (j.contains("eps_grid")) cfg.eps_grid = j["eps_grid"].get<std::vector<double>>();
    if (j.contains("gamma1_grid"))
      cfg.gamma1_grid = j["gamma1_grid"].get<std::vector<double>>();
    if (j.contains("gamma2_grid"))
      cfg.gamma2_grid = j["gamma2_grid"].get<std::vector<double>>();
  }
  cfg.seed = effective_seed(cfg.seed);
  auto out = bench::run_newsvendor_study(cfg);
  write_file(out_prefix + "_trials.csv", out.csv);
  write_file(out_prefix + "_quantiles.dat", out.quantiles_dat);
  write_file(out_prefix + "_timings.log", out.timing_log);
  std::printf("trials: %zu (failed %lld)\n", out.trials.size(),
              static_cast<long long>(out.failed_trials));
  std::printf("mean improvement vs SAA: wasserstein %.4f, chebyshev %.4f\n",
              out.mean_improvement_wass, out.mean_improvement_cheb);
  std::printf("wasserstein improvement quantiles: q20 %.4f q80 %.4f\n",
              out.q20_improvement_wass, out.q80_improvement_wass);
  std::cout << "wrote " << out_prefix << "_trials.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage distributionally robust linear programs over "
               "Wasserstein balls: conic reformulations, oracles, studies"};
  app.require_subcommand(1);

  std::string instance, out_prefix, export_format, schedule_text, x_text;
  double delta = 0.0, eps = 0.0, rho = 0.1, cvar_rho = 0.0;
  std::string cone = "c0";
  Index grid_n = 101, trials = 10;
  std::uint64_t seed = 1;
  bool reduced = false, optimize = false;
  std::string k_text = "1,2", i_text = "5,10", cfg_path;

  auto* v = app.add_subcommand("validate", "check an instance file");
  v->add_option("instance", instance)->required();

  auto* s = app.add_subcommand("solve", "copositive (C0) solve of an instance");
  s->add_option("instance", instance)->required();
  s->add_option("--delta", delta, "relaxation parameter");
  auto* sched = s->add_option("--delta-schedule", schedule_text,
                              "comma-separated decreasing schedule");
  s->add_option("--cone", cone, "cone approximation (c0)");
  s->add_option("--export", export_format, "write cbf or sdpa artifact");
  s->add_option("--out", out_prefix, "output file prefix");
  s->add_option("--risk-cvar", cvar_rho, "solve the worst-case CVaR variant");

  auto* sl = app.add_subcommand("solve-lp", "exact 1-Wasserstein LP");
  sl->add_option("instance", instance)->required();
  sl->add_option("--out", out_prefix);

  auto* osub = app.add_subcommand("oracle", "independent evaluators");
  osub->require_subcommand(1);
  auto* socp = osub->add_subcommand("socp", "exact sum-of-max oracle");
  socp->add_option("instance", instance)->required();
  socp->add_option("--eps", eps);
  auto* grid = osub->add_subcommand("grid", "grid evaluation of the dual");
  grid->add_option("instance", instance)->required();
  grid->add_option("--grid-n", grid_n);
  grid->add_option("--x", x_text, "fixed first stage, comma-separated");
  auto* saa = osub->add_subcommand("saa", "empirical CVaR");
  saa->add_option("instance", instance)->required();
  saa->add_option("--rho", rho);
  saa->add_flag("--optimize-x", optimize);
  saa->add_option("--x", x_text);

  auto* gap = app.add_subcommand("gap-study", "approximation-gap table");
  gap->add_option("--k", k_text, "comma-separated K values");
  gap->add_option("--i", i_text, "comma-separated sample counts");
  gap->add_option("--trials", trials);
  gap->add_option("--seed", seed);
  gap->add_flag("--reduced", reduced, "desk-scale limits");
  gap->add_option("--out", out_prefix)->required();

  auto* nv = app.add_subcommand("newsvendor", "out-of-sample study");
  nv->add_option("--config", cfg_path, "json config");
  nv->add_option("--out", out_prefix)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (v->parsed()) return cmd_validate(instance);
    if (s->parsed()) {
      if (cone != "c0") {
        std::cerr << "only the c0 cone approximation is available\n";
        return 2;
      }
      return cmd_solve(instance, delta, schedule_text, sched->count() > 0,
                       export_format, out_prefix, cvar_rho);
    }
    if (sl->parsed()) return cmd_solve_lp(instance, out_prefix);
    if (osub->parsed()) {
      if (socp->parsed()) return cmd_oracle_socp(instance, eps);
      if (grid->parsed()) return cmd_oracle_grid(instance, grid_n, x_text);
      if (saa->parsed()) return cmd_oracle_saa(instance, rho, optimize, x_text);
    }
    if (gap->parsed())
      return cmd_gap_study(k_text, i_text, trials, seed, reduced, out_prefix);
    if (nv->parsed()) return cmd_newsvendor(cfg_path, out_prefix);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
