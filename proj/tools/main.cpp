// ahr: simulate, fit, sweep, rates, diagnose.
#include "ahr/dataset_io.hpp"
#include "ahr/error.hpp"
#include "ahr/experiments.hpp"
#include "ahr/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
};

ahr::SweepConfig load_config(const Globals& g) {
  ahr::SweepConfig cfg = g.config.empty() ? ahr::SweepConfig{} : ahr::load_sweep_config(g.config);
  if (g.seed) cfg.base_seed = *g.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

std::string cell_name(std::size_t n, double delta, double gamma, std::size_t rep) {
  return fmt::format("dataset_n{}_delta{}_gamma{}_rep{}.csv", n, ahr::text::format_real(delta),
                     ahr::text::format_real(gamma), rep);
}

int cmd_simulate(const Globals& g) {
  const ahr::SweepConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const auto covariates = ahr::make_covariates(cfg);
  std::size_t written = 0;
  for (double delta : cfg.delta_list) {
    for (double gamma : cfg.gamma_list) {
      const ahr::Scenario scn = ahr::make_scenario(cfg, gamma, delta, covariates);
      for (std::size_t n : cfg.n_grid) {
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
          const std::uint64_t seed = ahr::dataset_seed(cfg.base_seed, n, rep);
          const ahr::Dataset ds = ahr::generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, n, seed);
          ahr::Metadata extra{{"rep", std::to_string(rep)}, {"s", std::to_string(cfg.s)}};
          ahr::write_dataset(ds, dir / cell_name(n, delta, gamma, rep), extra);
          ++written;
        }
      }
    }
  }
  std::cerr << fmt::format("simulate: wrote {} datasets to {}\n", written, dir.string());
  return kExitOk;
}

struct FitOptions {
  std::string data;
  std::optional<double> tau;
  std::optional<double> lambda;
  bool adaptive = false;
  bool lasso = false;
  std::optional<double> delta;
  std::optional<double> gamma;
};

double meta_real(const ahr::Metadata& meta, const char* key, double fallback) {
  const auto it = meta.find(key);
  return it == meta.end() ? fallback : ahr::text::parse_real(it->second, key);
}

int cmd_fit(const Globals& g, const FitOptions& o) {
  const ahr::SweepConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);

  std::optional<ahr::Dataset> ds;
  ahr::Metadata meta;
  if (!o.data.empty()) {
    auto loaded = ahr::read_dataset(o.data);
    ds.emplace(std::move(loaded.data));
    meta = std::move(loaded.metadata);
  } else {
    const double delta = o.delta.value_or(cfg.delta_list.front());
    const double gamma = o.gamma.value_or(cfg.gamma_list.front());
    const ahr::Scenario scn = ahr::make_scenario(cfg, gamma, delta);
    const std::size_t n = cfg.n_grid.front();
    const std::uint64_t seed = ahr::dataset_seed(cfg.base_seed, n, 0);
    ds.emplace(ahr::generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, n, seed));
    meta["seed"] = std::to_string(seed);
    meta["delta"] = ahr::text::format_real(delta);
    meta["gamma"] = ahr::text::format_real(gamma);
  }

  ahr::FitRequest req;
  req.delta = o.delta.value_or(meta_real(meta, "delta", cfg.delta_list.front()));
  req.gamma = o.gamma.value_or(meta_real(meta, "gamma", cfg.gamma_list.front()));
  req.c_tau = cfg.c_tau;
  req.c_lambda = cfg.c_lambda;
  req.with_lasso = o.lasso;
  req.solver = cfg.solver;
  req.timing = cfg.timing;
  if (auto it = meta.find("seed"); it != meta.end()) req.seed = ahr::text::parse_uint(it->second, "seed");
  if (auto it = meta.find("replicate"); it != meta.end()) req.rep = ahr::text::parse_uint(it->second, "replicate");

  if (o.tau || o.lambda) {
    if (o.adaptive) throw ahr::InvalidInput("--adaptive cannot be combined with --tau/--lambda");
    if (!o.tau || !o.lambda) throw ahr::InvalidInput("manual fits need both --tau and --lambda");
    req.manual = ahr::HuberConfig{*o.tau, *o.lambda};
  }

  const ahr::FitOutcome outcome = ahr::run_fit(*ds, req);
  ahr::write_results(outcome.rows, dir / "fit_results.csv");
  {
    std::ofstream beta(dir / "beta_hat.csv", std::ios::binary);
    if (!beta) throw ahr::IoError((dir / "beta_hat.csv").string(), "cannot open for writing");
    beta << "j";
    for (const auto& row : outcome.rows) beta << ',' << ahr::to_string(row.estimator);
    beta << '\n';
    for (Eigen::Index j = 0; j < outcome.estimates.front().size(); ++j) {
      beta << j;
      for (const auto& b : outcome.estimates) beta << ',' << ahr::text::format_real(b[j]);
      beta << '\n';
    }
  }
  for (const auto& row : outcome.rows) std::cout << ahr::format_row(row) << '\n';
  if (!outcome.all_converged()) {
    std::cerr << "fit: solver did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_sweep(const Globals& g) {
  const ahr::SweepConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const auto rows = ahr::run_sweep(cfg, g.threads, &std::cerr);
  ahr::write_results(rows, dir / "results.csv");
  ahr::write_metadata(ahr::to_metadata(cfg), dir / "sweep.conf");
  std::cerr << fmt::format("sweep: wrote {} rows to {}\n", rows.size(), (dir / "results.csv").string());
  return kExitOk;
}

struct RatesOptions {
  std::string in;
  std::string x = "n";
  std::string y = "l2_error";
  std::vector<std::string> group{"delta", "gamma", "estimator"};
};

int cmd_rates(const Globals& g, const RatesOptions& o) {
  const fs::path dir = out_dir(g);
  const fs::path in = o.in.empty() ? dir / "results.csv" : fs::path(o.in);
  if (o.y != "l1_error" && o.y != "l2_error") throw ahr::InvalidInput("--y must be l1_error or l2_error");
  const ahr::RateAxis axis = ahr::parse_rate_axis(o.x);
  const auto rows = ahr::read_results(in);
  const auto slopes = ahr::rate_fit(rows, o.group, axis, o.y, &std::cerr);
  ahr::write_slopes(slopes, axis, o.y, dir / "slopes.csv");
  for (const auto& s : slopes) {
    std::string label;
    for (const auto& [k, v] : s.group) label += fmt::format("{}={} ", k, v);
    std::cout << fmt::format("{}slope={:.4f} se={:.4f} points={}\n", label, s.slope, s.slope_stderr, s.points);
  }
  return kExitOk;
}

int cmd_diagnose(const Globals& g, const std::vector<std::string>& which) {
  const ahr::SweepConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  std::set<std::string> kinds(which.begin(), which.end());
  if (kinds.empty()) kinds = ahr::kDiagnosticKinds;
  const auto out = ahr::run_diagnose(cfg, kinds, g.threads);
  ahr::write_diagnostics(out, cfg, dir, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Huber regression under Markov-dependent sampling"};
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Flat key = value config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override base_seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Write one dataset per cell and replicate");
  simulate->fallthrough();

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit one dataset");
  fit->fallthrough();
  fit->add_option("--data", fit_opts.data, "Dataset CSV (default: generate from config)")->check(CLI::ExistingFile);
  fit->add_option("--tau", fit_opts.tau, "Robustification parameter (inf = squared loss)");
  fit->add_option("--lambda", fit_opts.lambda, "l1 penalty level");
  fit->add_flag("--adaptive", fit_opts.adaptive, "Choose tau and lambda by the adaptive rules (default)");
  fit->add_flag("--lasso", fit_opts.lasso, "Also fit the tau = inf baseline at the same lambda");
  fit->add_option("--delta", fit_opts.delta, "Moment index for adaptive selection");
  fit->add_option("--gamma", fit_opts.gamma, "Spectral gap parameter for adaptive selection");

  auto* sweep = app.add_subcommand("sweep", "Run the configured grid and write results.csv");
  sweep->fallthrough();

  RatesOptions rates_opts;
  auto* rates = app.add_subcommand("rates", "Fit log-log error slopes from results.csv");
  rates->fallthrough();
  rates->add_option("--in", rates_opts.in, "Results CSV (default: <out>/results.csv)");
  rates->add_option("--x", rates_opts.x, "n or n_eff")->capture_default_str();
  rates->add_option("--y", rates_opts.y, "l1_error or l2_error")->capture_default_str();
  rates->add_option("--group", rates_opts.group, "Grouping columns")->delimiter(',')->capture_default_str();

  std::vector<std::string> which;
  auto* diagnose = app.add_subcommand("diagnose", "Check the concentration steps numerically");
  diagnose->fallthrough();
  diagnose->add_option("--which", which, "Subset of grad,lre,cov,tail,bernstein")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*simulate) return cmd_simulate(g);
    if (*fit) return cmd_fit(g, fit_opts);
    if (*sweep) return cmd_sweep(g);
    if (*rates) return cmd_rates(g, rates_opts);
    if (*diagnose) return cmd_diagnose(g, which);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
