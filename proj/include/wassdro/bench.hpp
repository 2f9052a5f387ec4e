#pragma once

#include "wassdro/copos.hpp"
#include "wassdro/model.hpp"
#include "wassdro/program.hpp"
#include "wassdro/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wassdro::bench {

struct NewsvendorConfig {
  Index items = 3;              // K
  Vector holding;               // b, defaults to ones
  Vector stockout;              // s, defaults to 10 * ones
  double budget = 30.0;         // B
  double cvar_level = 0.1;      // rho
  Index train_size = 10;        // I
  Index trials = 100;
  Index test_samples = 20000;
  Index cv_folds = 5;
  std::vector<double> eps_grid;           // defaults to a log grid + 1/sqrt(I)
  std::vector<double> gamma1_grid, gamma2_grid;
  std::uint64_t seed = 1;

  void fill_defaults();
  void validate() const;
};

/// Parameters of the lognormal demand model: Sigma is the second-moment
/// matrix of the underlying normal, so sampling uses N(nu, Sigma - nu nu').
struct LognormalSpec {
  Vector nu;
  Matrix sigma;
};

struct ChebyshevParams {
  Vector mean;
  Matrix second_moment_bound;  // Sigma-hat
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

struct StudyResult {
  Index trial = 0;
  std::uint64_t seed = 0;
  std::string instance_digest;
  bool solved = true;
  std::string failure;
  double eps_chosen = 0.0;
  double gamma1_chosen = 0.0, gamma2_chosen = 0.0;
  double in_sample_wass = 0.0, in_sample_cheb = 0.0, in_sample_saa = 0.0;
  double oos_wass = 0.0, oos_cheb = 0.0, oos_saa = 0.0, oos_reference = 0.0;
  double improvement_wass = 0.0, improvement_cheb = 0.0;
  double gap_wass = 0.0, gap_cheb = 0.0, gap_saa = 0.0;
  double time_wass_s = 0.0, time_cheb_s = 0.0, time_saa_s = 0.0;
};

/// nu ~ U[0,2]^K, sigma = 1/4, C a random correlation matrix,
/// Sigma = diag(sigma) C diag(sigma) + nu nu'.
LognormalSpec random_instance(Rng& rng, Index k);

/// Bendel-Mickey/Davies-Higham correlation matrix: random spectrum summing
/// to k, random orthogonal conjugation, Givens rotations to unit diagonal.
Matrix random_correlation(Rng& rng, Index k);

std::vector<Vector> sample_lognormal(const LognormalSpec& spec, Index n, Rng& rng);

/// Per-scenario newsvendor cost sum_k max(b_k (x_k - xi_k), s_k (xi_k - x_k)).
double newsvendor_cost(const Vector& x, const Vector& xi, const Vector& b,
                       const Vector& s);

/// Empirical CVaR of the newsvendor cost on a test set (exact
/// Rockafellar-Uryasev value via sorting).
double out_of_sample_cvar(const Vector& x, const std::vector<Vector>& test,
                          double rho, const Vector& b, const Vector& s);

struct NewsvendorBuild {
  conic::ConicProgram program;
  Index x_start = 0, items = 0;
  Index theta_var = -1, lambda_var = -1;

  Vector extract_x(const conic::SolveResult& r) const {
    return r.primal.segment(x_start, items);
  }
};

/// Worst-case-CVaR newsvendor program over a 2-Wasserstein ball with the
/// copositive cone replaced by C0; one block of side 3K+1 per sample.
NewsvendorBuild build_newsvendor_wasserstein(const NewsvendorConfig& cfg,
                                             const std::vector<Vector>& samples,
                                             double eps);

/// Worst-case-CVaR newsvendor program over the Chebyshev (mean/covariance)
/// ambiguity set, again with C0 in place of the copositive cone.
NewsvendorBuild build_newsvendor_chebyshev(const NewsvendorConfig& cfg,
                                           const ChebyshevParams& params);

ChebyshevParams estimate_chebyshev(const std::vector<Vector>& samples,
                                   double gamma1, double gamma2);

/// The problem-instance view of the newsvendor (for the SAA LP and the
/// copositive cross-checks).
TwoStageProblem newsvendor_problem(const NewsvendorConfig& cfg,
                                   const std::vector<Vector>& samples,
                                   double eps);

/// 5-fold cross-validation over the radius grid: seeded shuffle,
/// contiguous folds, out-of-fold empirical CVaR as the score, ties to the
/// smaller radius.
double cross_validate_epsilon(const NewsvendorConfig& cfg,
                              const std::vector<Vector>& samples,
                              const std::vector<double>& eps_grid);

std::pair<double, double> cross_validate_chebyshev(
    const NewsvendorConfig& cfg, const std::vector<Vector>& samples,
    const std::vector<double>& gamma1_grid, const std::vector<double>& gamma2_grid);

struct GapStudyRow {
  Index k = 0, train_size = 0, trial = 0;
  std::uint64_t seed = 0;
  Index n2 = 0;
  bool solvable = true;
  double exact_value = 0.0, c0_value = 0.0, qdr_value = 0.0;
  double c0_gap_pct = 0.0, qdr_gap_pct = 0.0;
  double time_exact_s = 0.0, time_c0_s = 0.0, time_qdr_s = 0.0;
};

struct GapStudyCell {
  Index k = 0, train_size = 0;
  double mean_c0_gap_pct = 0.0, mean_qdr_gap_pct = 0.0;
  double solvable_pct = 0.0;
  double mean_time_c0_s = 0.0, mean_time_qdr_s = 0.0;
};

struct GapStudyOutput {
  std::vector<GapStudyRow> rows;
  std::vector<GapStudyCell> cells;
  std::string csv;         // deterministic artifact (no timings)
  std::string timing_log;  // wall-clock side channel, not determinism-bound
};

/// Random sum-of-max instances per cell: N2 ~ U{1..ceil(log(K+1))},
/// A ~ U[0,1], b row-wise U[0, sum A row], samples U[0,1]^K, radius
/// 1/sqrt(I); exact SOCP as ground truth against the C0 value and the
/// quadratic decision rule.
GapStudyOutput run_gap_study(const std::vector<Index>& k_list,
                             const std::vector<Index>& i_list, Index trials,
                             std::uint64_t seed, bool reduced,
                             Index max_threads = 0);

struct NewsvendorStudyOutput {
  std::vector<StudyResult> trials;
  Index failed_trials = 0;
  double mean_improvement_wass = 0.0, mean_improvement_cheb = 0.0;
  double q20_improvement_wass = 0.0, q80_improvement_wass = 0.0;
  double q20_improvement_cheb = 0.0, q80_improvement_cheb = 0.0;
  std::string csv;          // per-trial records, deterministic
  std::string quantiles_dat;  // gnuplot-ready summary rows
  std::string timing_log;
};

NewsvendorStudyOutput run_newsvendor_study(const NewsvendorConfig& cfg,
                                           Index max_threads = 0);

/// Quantile of a finite sample (linear interpolation between order
/// statistics).
double sample_quantile(std::vector<double> values, double q);

}  // namespace wassdro::bench
