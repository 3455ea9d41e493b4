#include "ahr/experiments.hpp"

#include "ahr/error.hpp"
#include "ahr/huber.hpp"
#include "ahr/parallel.hpp"
#include "ahr/rng.hpp"
#include "ahr/stats.hpp"
#include "ahr/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace ahr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// --- results CSV --------------------------------------------------------------

std::string format_row(const ResultRow& r) {
  using text::format_real;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.rep, r.n, r.d, r.s,
                     format_real(r.delta), format_real(r.gamma), to_string(r.estimator), format_real(r.tau),
                     format_real(r.lambda), format_real(r.l1_error), format_real(r.l2_error),
                     format_real(r.support_precision), format_real(r.support_recall),
                     format_real(r.kkt_residual), r.converged ? 1 : 0, r.seed, format_real(r.wall_time_ms));
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  write_results(rows, out);
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kResultsHeader) {
    throw IoError(path.string(), "missing or unexpected results header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != 17) throw IoError(path.string(), "line " + std::to_string(lineno) + ": expected 17 fields");
    try {
      ResultRow r;
      r.rep = text::parse_uint(f[0], "rep");
      r.n = text::parse_uint(f[1], "n");
      r.d = text::parse_uint(f[2], "d");
      r.s = text::parse_uint(f[3], "s");
      r.delta = text::parse_real(f[4], "delta");
      r.gamma = text::parse_real(f[5], "gamma");
      r.estimator = parse_estimator(f[6]);
      r.tau = text::parse_real(f[7], "tau");
      r.lambda = text::parse_real(f[8], "lambda");
      r.l1_error = f[9] == "nan" ? kNaN : text::parse_real(f[9], "l1_error");
      r.l2_error = f[10] == "nan" ? kNaN : text::parse_real(f[10], "l2_error");
      r.support_precision = f[11] == "nan" ? kNaN : text::parse_real(f[11], "support_precision");
      r.support_recall = f[12] == "nan" ? kNaN : text::parse_real(f[12], "support_recall");
      r.kkt_residual = f[13] == "nan" ? kNaN : text::parse_real(f[13], "kkt_residual");
      r.converged = text::parse_int(f[14], "converged") != 0;
      r.seed = text::parse_uint(f[15], "seed");
      r.wall_time_ms = text::parse_real(f[16], "wall_time_ms");
      rows.push_back(r);
    } catch (const InvalidInput& e) {
      throw IoError(path.string(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

// --- scenarios ----------------------------------------------------------------

TruthSpec make_truth(const SweepConfig& cfg) {
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(cfg.d));
  for (std::size_t j = 0; j < cfg.s; ++j) {
    beta[static_cast<Eigen::Index>(j)] = (j % 2 == 0 ? 1.0 : -1.0) * cfg.beta_value;
  }
  return TruthSpec(std::move(beta));
}

std::shared_ptr<const CovariateMap> make_covariates(const SweepConfig& cfg) {
  const std::size_t m = cfg.state_count();
  const Vector pi = Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  switch (cfg.design) {
    case DesignKind::gaussian:
      return std::make_shared<const CovariateMap>(gaussian_covariates(m, cfg.d, pi, cfg.base_seed));
    case DesignKind::indicator:
      return std::make_shared<const CovariateMap>(
          indicator_covariates(Vector::Ones(static_cast<Eigen::Index>(cfg.d)), pi));
    case DesignKind::constant:
      return std::make_shared<const CovariateMap>(Matrix::Ones(1, static_cast<Eigen::Index>(cfg.d)), pi);
  }
  throw InvalidInput("unknown design");
}

Scenario make_scenario(const SweepConfig& cfg, double gamma, double delta,
                       std::shared_ptr<const CovariateMap> covariates) {
  if (!covariates) covariates = make_covariates(cfg);
  const std::size_t m = cfg.state_count();
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(m, gamma));
  Vector scale(static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a) {
    const double pos = m > 1 ? static_cast<double>(a) / static_cast<double>(m - 1) : 0.0;
    scale[static_cast<Eigen::Index>(a)] = cfg.scale * (1.0 + cfg.heteroskedasticity * pos);
  }
  auto errors = std::make_shared<const ErrorModel>(cfg.family, cfg.family_shape, std::move(scale), delta);
  return Scenario{std::move(chain), std::move(covariates), std::move(errors), make_truth(cfg)};
}

std::uint64_t dataset_seed(std::uint64_t base_seed, std::size_t n, std::size_t rep) {
  return mix_seed(mix_seed(base_seed, n), rep);
}

AdaptiveSpec adaptive_spec(const SweepConfig& cfg, std::size_t n, double delta, double gamma) {
  return AdaptiveSpec{n, cfg.d, delta, gamma, cfg.c_tau, cfg.c_lambda};
}

// --- fitting ------------------------------------------------------------------

ResultRow fit_row(const Dataset& ds, Estimator estimator, HuberConfig cfg, const SolverConfig& scfg,
                  const RowContext& ctx, Vector* beta_out) {
  if (estimator == Estimator::lasso) cfg.tau = kSquaredLoss;
  const auto start = std::chrono::steady_clock::now();
  SolverResult res = fit(ds.problem, cfg, scfg);
  const auto stop = std::chrono::steady_clock::now();

  ResultRow row;
  row.rep = ctx.rep;
  row.n = ds.problem.n();
  row.d = ds.problem.d();
  row.delta = ctx.delta;
  row.gamma = ctx.gamma;
  row.estimator = estimator;
  row.tau = cfg.tau;
  row.lambda = cfg.lambda;
  row.kkt_residual = res.kkt_residual;
  row.converged = res.converged;
  row.seed = ctx.seed;
  row.wall_time_ms =
      ctx.timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;

  if (ds.truth) {
    const TruthSpec& truth = *ds.truth;
    row.s = truth.sparsity();
    const Vector diff = res.beta_hat - truth.beta_star();
    row.l1_error = diff.lpNorm<1>();
    row.l2_error = diff.norm();
    std::size_t selected = 0;
    std::size_t hits = 0;
    for (Eigen::Index j = 0; j < res.beta_hat.size(); ++j) {
      if (std::abs(res.beta_hat[j]) > kSupportThreshold) {
        ++selected;
        if (truth.in_support(static_cast<std::size_t>(j))) ++hits;
      }
    }
    row.support_precision = selected == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(selected);
    row.support_recall =
        truth.sparsity() == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.sparsity());
  } else {
    row.l1_error = row.l2_error = row.support_precision = row.support_recall = kNaN;
  }
  if (beta_out) *beta_out = std::move(res.beta_hat);
  return row;
}

bool FitOutcome::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.converged; });
}

FitOutcome run_fit(const Dataset& ds, const FitRequest& request) {
  HuberConfig cfg;
  if (request.manual) {
    cfg = *request.manual;
  } else {
    const AdaptiveSpec spec{ds.problem.n(), ds.problem.d(), request.delta, request.gamma, request.c_tau,
                            request.c_lambda};
    cfg.tau = select_tau(spec);
    cfg.lambda = select_lambda(spec);
  }
  cfg.validate();
  const RowContext ctx{request.rep, request.delta, request.gamma, request.seed, request.timing};

  FitOutcome out;
  std::vector<Estimator> estimators{Estimator::ahr};
  if (request.with_lasso) estimators.push_back(Estimator::lasso);
  for (Estimator e : estimators) {
    Vector beta;
    out.rows.push_back(fit_row(ds, e, cfg, request.solver, ctx, &beta));
    out.estimates.push_back(std::move(beta));
  }
  return out;
}

namespace {

struct Cell {
  double delta;
  double gamma;
  std::size_t n;
  std::size_t scenario;
};

ResultRow failed_row(const Cell& cell, std::size_t rep, std::size_t d, std::size_t s, Estimator e,
                     const HuberConfig& cfg, std::uint64_t seed) {
  ResultRow row;
  row.rep = rep;
  row.n = cell.n;
  row.d = d;
  row.s = s;
  row.delta = cell.delta;
  row.gamma = cell.gamma;
  row.estimator = e;
  row.tau = e == Estimator::lasso ? kSquaredLoss : cfg.tau;
  row.lambda = cfg.lambda;
  row.l1_error = row.l2_error = row.support_precision = row.support_recall = row.kkt_residual = kNaN;
  row.converged = false;
  row.seed = seed;
  return row;
}

}  // namespace

std::vector<ResultRow> run_sweep(const SweepConfig& cfg, unsigned threads, std::ostream* log) {
  cfg.validate();
  const auto covariates = make_covariates(cfg);

  std::vector<Scenario> scenarios;
  std::vector<Cell> cells;
  for (double delta : cfg.delta_list) {
    for (double gamma : cfg.gamma_list) {
      scenarios.push_back(make_scenario(cfg, gamma, delta, covariates));
      for (std::size_t n : cfg.n_grid) {
        cells.push_back({delta, gamma, n, scenarios.size() - 1});
        const double pre = theorem_precondition(adaptive_spec(cfg, n, delta, gamma), cfg.s);
        if (log && pre > cfg.precondition_threshold) {
          *log << fmt::format("warning: cell n={} delta={} gamma={}: s*sqrt(log d/n_eff) = {:.4f} exceeds {}\n",
                              n, delta, gamma, pre, cfg.precondition_threshold);
        }
      }
    }
  }

  const std::size_t jobs = cells.size() * cfg.replicates;
  if (log) *log << fmt::format("sweep: {} cells x {} replicates\n", cells.size(), cfg.replicates);
  std::vector<std::vector<ResultRow>> slots(jobs);
  std::mutex log_mutex;

  parallel_for(jobs, threads, [&](std::size_t job) {
    const Cell& cell = cells[job / cfg.replicates];
    const std::size_t rep = job % cfg.replicates;
    const Scenario& scn = scenarios[cell.scenario];
    const std::uint64_t seed = dataset_seed(cfg.base_seed, cell.n, rep);
    const AdaptiveSpec spec = adaptive_spec(cfg, cell.n, cell.delta, cell.gamma);
    const HuberConfig hcfg{select_tau(spec), select_lambda(spec)};
    const RowContext ctx{rep, cell.delta, cell.gamma, seed, cfg.timing};

    std::optional<Dataset> ds;
    try {
      ds.emplace(generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, cell.n, seed));
    } catch (const std::exception& e) {
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << fmt::format("error: dataset n={} rep={}: {}\n", cell.n, rep, e.what());
      }
    }
    for (Estimator est : cfg.estimators) {
      if (!ds) {
        slots[job].push_back(failed_row(cell, rep, cfg.d, cfg.s, est, hcfg, seed));
        continue;
      }
      try {
        slots[job].push_back(fit_row(*ds, est, hcfg, cfg.solver, ctx));
      } catch (const std::exception& e) {
        slots[job].push_back(failed_row(cell, rep, cfg.d, cfg.s, est, hcfg, seed));
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << fmt::format("error: fit {} n={} rep={}: {}\n", to_string(est), cell.n, rep, e.what());
        }
      }
    }
  });

  std::vector<ResultRow> rows;
  rows.reserve(jobs * cfg.estimators.size());
  std::size_t unconverged = 0;
  for (auto& slot : slots) {
    for (auto& row : slot) {
      if (!row.converged) ++unconverged;
      rows.push_back(std::move(row));
    }
  }
  if (log && unconverged > 0) *log << fmt::format("warning: {} rows did not converge\n", unconverged);
  return rows;
}

// --- diagnostics harness ------------------------------------------------------

DiagnoseOutput run_diagnose(const SweepConfig& cfg, const std::set<std::string>& which, unsigned threads) {
  cfg.validate();
  for (const auto& k : which) {
    if (!kDiagnosticKinds.count(k)) throw InvalidInput("diagnose: unknown diagnostic '" + k + "'");
  }
  DiagnoseOutput out;
  std::vector<std::string> per_dataset;
  for (const char* k : {"grad", "lre", "cov", "tail"}) {
    if (which.count(k)) per_dataset.emplace_back(k);
  }

  if (!per_dataset.empty()) {
    const auto covariates = make_covariates(cfg);
    std::vector<Scenario> scenarios;
    std::vector<Cell> cells;
    for (double delta : cfg.delta_list) {
      for (double gamma : cfg.gamma_list) {
        scenarios.push_back(make_scenario(cfg, gamma, delta, covariates));
        for (std::size_t n : cfg.n_grid) cells.push_back({delta, gamma, n, scenarios.size() - 1});
      }
    }
    const std::size_t jobs = cells.size() * cfg.replicates;
    std::vector<std::vector<DiagnosticRow>> slots(jobs);
    parallel_for(jobs, threads, [&](std::size_t job) {
      const Cell& cell = cells[job / cfg.replicates];
      const std::size_t rep = job % cfg.replicates;
      const Scenario& scn = scenarios[cell.scenario];
      const std::uint64_t seed = dataset_seed(cfg.base_seed, cell.n, rep);
      const Dataset ds = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, cell.n, seed);
      const AdaptiveSpec spec = adaptive_spec(cfg, cell.n, cell.delta, cell.gamma);
      const double tau = select_tau(spec);
      const double k = 1.0 / effective_sample_factor(cell.gamma);
      const double log_d_over_n = std::log(static_cast<double>(cfg.d)) / static_cast<double>(cell.n);
      for (const auto& kind : per_dataset) {
        DiagnosticRow row{kind, rep, cell.n, cell.delta, cell.gamma, tau, 0.0, kNaN};
        if (kind == "grad") {
          row.value = grad_supnorm_at_truth(ds, tau);
          const double m = effective_moment(cell.delta);
          const double v = std::pow(scn.errors->per_state_scale().maxCoeff(), 1.0 + m) *
                           base_abs_moment(scn.errors->family(), scn.errors->shape(), 1.0 + m);
          row.bound = prop3_bound(cell.n, cfg.d, cell.gamma, tau, cell.delta, scn.covariates->sigma2(), v, 1.0);
        } else if (kind == "lre") {
          LREQuery q;
          q.r = cfg.lre_radius;
          q.num_directions = cfg.lre_directions;
          q.num_centers = cfg.lre_centers;
          q.seed = seed;
          row.value = lre_estimate(ds, tau, q);
        } else if (kind == "cov") {
          row.value = covariance_deviation(ds, *scn.covariates, *scn.chain);
          row.bound = std::sqrt(k * log_d_over_n);
        } else if (kind == "tail") {
          row.value = truncated_tail_sum(ds, *scn.covariates, tau);
          row.bound = lemma2_bound(scn.covariates->sigma2(), tau, cell.delta, scn.errors->v_delta()) +
                      std::sqrt(k * log_d_over_n);
        }
        slots[job].push_back(std::move(row));
      }
    });
    for (auto& slot : slots) {
      for (auto& row : slot) out.rows.push_back(std::move(row));
    }
  }

  if (which.count("bernstein")) {
    Vector f(2);
    f << -1.0, 1.0;
    for (double gamma : cfg.gamma_list) {
      const ChainSpec chain = make_chain_with_gamma(2, gamma);
      for (std::size_t n : cfg.n_grid) {
        out.bernstein.push_back(bernstein_check(chain, f, 1.0, n, cfg.bernstein_replicas, cfg.epsilon_grid,
                                                mix_seed(cfg.base_seed, n), threads));
      }
    }
  }
  return out;
}

void write_diagnostics(const DiagnoseOutput& out, const SweepConfig& cfg, const std::filesystem::path& dir,
                       std::ostream& summary) {
  using text::format_real;
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<const DiagnosticRow*>> by_kind;
  for (const auto& row : out.rows) by_kind[row.kind].push_back(&row);

  for (const auto& [kind, rows] : by_kind) {
    const auto path = dir / ("diagnose_" + kind + ".csv");
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw IoError(path.string(), "cannot open for writing");
    csv << "rep,n,d,s,delta,gamma,tau,value,bound\n";
    // (delta, gamma) -> n -> values
    std::map<std::pair<double, double>, std::map<std::size_t, std::vector<double>>> values;
    std::map<std::pair<double, double>, std::map<std::size_t, std::vector<double>>> bounds;
    for (const DiagnosticRow* r : rows) {
      csv << fmt::format("{},{},{},{},{},{},{},{},{}\n", r->rep, r->n, cfg.d, cfg.s, format_real(r->delta),
                         format_real(r->gamma), format_real(r->tau), format_real(r->value), format_real(r->bound));
      values[{r->delta, r->gamma}][r->n].push_back(r->value);
      bounds[{r->delta, r->gamma}][r->n].push_back(r->bound);
    }
    summary << "[" << kind << "]\n";
    for (const auto& [key, per_n] : values) {
      std::vector<double> lx, ly;
      for (const auto& [n, v] : per_n) {
        const double med = stats::median(v);
        summary << fmt::format("  delta={} gamma={} n={}: median={:.6g} median_bound={:.6g}\n", key.first,
                               key.second, n, med, stats::median(bounds[key][n]));
        if (med > 0.0) {
          lx.push_back(std::log(static_cast<double>(n)));
          ly.push_back(std::log(med));
        }
      }
      if (kind == "grad" && lx.size() >= 3) {
        const auto fit = stats::ols(lx, ly);
        summary << fmt::format("  delta={} gamma={}: slope={:.4f} (theory {:.4f})\n", key.first, key.second,
                               fit.slope, -rate_exponent(key.first));
      }
    }
  }

  if (!out.bernstein.empty()) {
    const auto path = dir / "bernstein.csv";
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw IoError(path.string(), "cannot open for writing");
    csv << "n,gamma,epsilon,empirical_tail,bernstein_bound,standard_error,flagged,replicas\n";
    summary << "[bernstein]\n";
    for (const auto& rep : out.bernstein) {
      std::size_t flagged = 0;
      for (std::size_t k = 0; k < rep.epsilon_grid.size(); ++k) {
        csv << fmt::format("{},{},{},{},{},{},{},{}\n", rep.n, format_real(rep.gamma),
                           format_real(rep.epsilon_grid[k]), format_real(rep.empirical_tail[k]),
                           format_real(rep.bernstein_bound[k]), format_real(rep.standard_error[k]),
                           rep.flagged[k] ? 1 : 0, rep.replicas);
        if (rep.flagged[k]) ++flagged;
      }
      summary << fmt::format("  gamma={} n={}: {} of {} thresholds flagged\n", rep.gamma, rep.n, flagged,
                             rep.epsilon_grid.size());
    }
  }
}

}  // namespace ahr
