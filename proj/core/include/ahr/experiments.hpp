#pragma once

#include "ahr/adaptive.hpp"
#include "ahr/config.hpp"
#include "ahr/diagnostics.hpp"
#include "ahr/markov.hpp"
#include "ahr/solver.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ahr {

/// Exact results CSV header.
inline constexpr const char* kResultsHeader =
    "rep,n,d,s,delta,gamma,estimator,tau,lambda,l1_error,l2_error,support_precision,"
    "support_recall,kkt_residual,converged,seed,wall_time_ms";

/// |beta_hat_j| above this counts as selected.
inline constexpr double kSupportThreshold = 1e-8;

struct ResultRow {
  std::size_t rep = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t s = 0;
  double delta = 0.0;
  double gamma = 0.0;
  Estimator estimator = Estimator::ahr;
  double tau = 0.0;
  double lambda = 0.0;
  double l1_error = 0.0;
  double l2_error = 0.0;
  double support_precision = 0.0;
  double support_recall = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
};

std::string format_row(const ResultRow& row);
void write_results(const std::vector<ResultRow>& rows, std::ostream& out);
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

/// Shared, immutable specifications behind one (gamma, delta) cell.
struct Scenario {
  std::shared_ptr<const ChainSpec> chain;
  std::shared_ptr<const CovariateMap> covariates;
  std::shared_ptr<const ErrorModel> errors;
  TruthSpec truth;
};

/// beta_star has beta_value on the first s coordinates with alternating signs.
TruthSpec make_truth(const SweepConfig& cfg);
/// The covariate map is shared by every cell of a config (seeded by base_seed).
std::shared_ptr<const CovariateMap> make_covariates(const SweepConfig& cfg);
Scenario make_scenario(const SweepConfig& cfg, double gamma, double delta,
                       std::shared_ptr<const CovariateMap> covariates = nullptr);

/// Seed of replicate `rep` at sample size n. Independent of gamma and delta, so
/// cells that differ only in those share random numbers (paired comparisons).
std::uint64_t dataset_seed(std::uint64_t base_seed, std::size_t n, std::size_t rep);

AdaptiveSpec adaptive_spec(const SweepConfig& cfg, std::size_t n, double delta, double gamma);

struct RowContext {
  std::size_t rep = 0;
  double delta = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  bool timing = false;
};

/// Fits one estimator and scores it against the dataset's truth (NaN metrics
/// without truth). Estimator::lasso forces tau = +infinity.
ResultRow fit_row(const Dataset& ds, Estimator estimator, HuberConfig cfg, const SolverConfig& scfg,
                  const RowContext& ctx, Vector* beta_out = nullptr);

struct FitRequest {
  /// Manual (tau, lambda); if unset both come from the adaptive rules.
  std::optional<HuberConfig> manual;
  /// Needed for adaptive selection and recorded in the row.
  double delta = 1.0;
  double gamma = 0.0;
  double c_tau = 1.0;
  double c_lambda = 1.0;
  bool with_lasso = false;
  SolverConfig solver;
  bool timing = false;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
};

struct FitOutcome {
  std::vector<ResultRow> rows;
  std::vector<Vector> estimates;
  bool all_converged() const;
};

/// AHR fit (plus the tau = infinity baseline at the same lambda when requested).
FitOutcome run_fit(const Dataset& ds, const FitRequest& request);

/// One row per (cell, replicate, estimator) in the fixed order
/// delta, gamma, n, replicate, estimator. Per-row failures become
/// converged = false rows with NaN metrics; warnings go to `log`.
std::vector<ResultRow> run_sweep(const SweepConfig& cfg, unsigned threads = 1, std::ostream* log = nullptr);

// --- rate fitting -----------------------------------------------------------

enum class RateAxis { n, n_eff };
RateAxis parse_rate_axis(const std::string& name);

struct SlopeRow {
  std::vector<std::pair<std::string, std::string>> group;
  std::size_t points = 0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Per group: OLS slope of log(median y) against log(x). d is always part of the
/// grouping. Groups with fewer than 3 distinct x values are skipped (warning to log).
std::vector<SlopeRow> rate_fit(const std::vector<ResultRow>& rows, const std::vector<std::string>& group_keys,
                               RateAxis x, const std::string& y_metric, std::ostream* log = nullptr);
void write_slopes(const std::vector<SlopeRow>& slopes, RateAxis x, const std::string& y_metric,
                  const std::filesystem::path& path);

/// Column value of a row by CSV header name (numbers formatted as in the CSV).
std::string row_field(const ResultRow& row, const std::string& key);
double row_metric(const ResultRow& row, const std::string& key);

// --- diagnostics harness ----------------------------------------------------

inline const std::set<std::string> kDiagnosticKinds{"grad", "lre", "cov", "tail", "bernstein"};

struct DiagnosticRow {
  std::string kind;
  std::size_t rep = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  double value = 0.0;
  /// Reference bound (prop3 with C = 1, lemma-2 mean bound, ...); NaN if none.
  double bound = 0.0;
};

struct DiagnoseOutput {
  std::vector<DiagnosticRow> rows;
  std::vector<ConcentrationReport> bernstein;
};

/// Runs the selected diagnostics over every (delta, gamma, n) cell and replicate
/// under adaptive tau. The bernstein check uses a two-state chain with the
/// Rademacher function f = (-1, +1) for each (gamma, n).
DiagnoseOutput run_diagnose(const SweepConfig& cfg, const std::set<std::string>& which, unsigned threads = 1);

/// Writes diagnose_<kind>.csv files (and bernstein.csv) into dir; prints a
/// summary of medians and grad slopes to `summary`.
void write_diagnostics(const DiagnoseOutput& out, const SweepConfig& cfg,
                       const std::filesystem::path& dir, std::ostream& summary);

}  // namespace ahr
