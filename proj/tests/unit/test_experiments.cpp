#include "ahr/error.hpp"
#include "ahr/experiments.hpp"
#include "ahr/huber.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace ahr;
namespace fs = std::filesystem;

namespace {

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.n_grid = {100, 200};
  cfg.d = 20;
  cfg.s = 3;
  cfg.gamma_list = {0.0, 0.5};
  cfg.replicates = 2;
  cfg.estimators = {Estimator::ahr, Estimator::lasso};
  cfg.base_seed = 5;
  return cfg;
}

}  // namespace

TEST(Sweep, RowCountOrderAndAdaptiveParameters) {
  const SweepConfig cfg = small_config();
  const auto rows = run_sweep(cfg, 2);
  ASSERT_EQ(rows.size(), 2u * 2u * 2u * 2u);
  std::size_t k = 0;
  for (double g : cfg.gamma_list) {
    for (std::size_t n : cfg.n_grid) {
      for (std::size_t rep = 0; rep < 2; ++rep) {
        for (Estimator e : cfg.estimators) {
          const ResultRow& r = rows[k++];
          EXPECT_EQ(r.gamma, g);
          EXPECT_EQ(r.n, n);
          EXPECT_EQ(r.rep, rep);
          EXPECT_EQ(r.estimator, e);
          const AdaptiveSpec spec = adaptive_spec(cfg, n, 1.0, g);
          EXPECT_EQ(r.lambda, select_lambda(spec));
          EXPECT_EQ(r.tau, e == Estimator::lasso ? kSquaredLoss : select_tau(spec));
          EXPECT_TRUE(r.converged);
          EXPECT_LE(r.l2_error, r.l1_error + 1e-15);
          EXPECT_LE(r.l1_error, std::sqrt(20.0) * r.l2_error + 1e-12);
          EXPECT_EQ(r.wall_time_ms, 0.0);
        }
      }
    }
  }
}

TEST(Sweep, CountingExample) {
  SweepConfig cfg;
  cfg.n_grid = {50, 60, 70, 80, 90};
  cfg.d = 5;
  cfg.s = 1;
  cfg.replicates = 50;
  cfg.gamma_list = {0.0, 0.5};
  EXPECT_EQ(run_sweep(cfg).size(), 500u);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  const SweepConfig cfg = small_config();
  std::ostringstream a, b;
  write_results(run_sweep(cfg, 1), a);
  write_results(run_sweep(cfg, 3), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, SingleCellMatchesRunFit) {
  SweepConfig cfg = small_config();
  cfg.n_grid = {150};
  cfg.gamma_list = {0.5};
  cfg.replicates = 1;
  const auto rows = run_sweep(cfg);
  const Scenario scn = make_scenario(cfg, 0.5, 1.0);
  const std::uint64_t seed = dataset_seed(cfg.base_seed, 150, 0);
  const Dataset ds = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 150, seed);
  FitRequest req;
  req.gamma = 0.5;
  req.delta = 1.0;
  req.with_lasso = true;
  req.seed = seed;
  const FitOutcome out = run_fit(ds, req);
  ASSERT_EQ(out.rows.size(), rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_EQ(format_row(out.rows[k]), format_row(rows[k]));
}

TEST(Sweep, PreconditionWarningGoesToLog) {
  SweepConfig cfg = small_config();
  std::ostringstream log;
  run_sweep(cfg, 1, &log);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
}

TEST(RunFit, LambdaAboveMaxGivesZero) {
  SweepConfig cfg = small_config();
  const Scenario scn = make_scenario(cfg, 0.0, 1.0);
  const Dataset ds = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 100, 1);
  FitRequest req;
  req.manual = HuberConfig{2.0, lambda_max(ds.problem, 2.0) * 1.01};
  const FitOutcome out = run_fit(ds, req);
  EXPECT_EQ(out.estimates[0], Vector::Zero(20));
  EXPECT_NEAR(out.rows[0].l2_error, scn.truth.beta_star().norm(), 1e-15);
  EXPECT_EQ(out.rows[0].support_recall, 0.0);
}

TEST(RunFit, NoiselessRecovery) {
  SweepConfig cfg = small_config();
  cfg.scale = 0.0;
  const Scenario scn = make_scenario(cfg, 0.0, 1.0);
  const Dataset ds = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 200, 2);
  FitRequest req;
  req.manual = HuberConfig{1.0, 1e-9};
  req.solver.tol = 1e-12;
  const FitOutcome out = run_fit(ds, req);
  EXPECT_LE(out.rows[0].l2_error, 1e-6);
  EXPECT_EQ(out.rows[0].support_recall, 1.0);
}

TEST(RunFit, LassoEqualsInfiniteTau) {
  SweepConfig cfg = small_config();
  const Scenario scn = make_scenario(cfg, 0.5, 1.0);
  const Dataset ds = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 150, 3);
  const double lambda = 0.1;
  const auto lasso = fit_row(ds, Estimator::lasso, {3.0, lambda}, {}, {});
  Vector b1, b2;
  fit_row(ds, Estimator::lasso, {3.0, lambda}, {}, {}, &b1);
  fit_row(ds, Estimator::ahr, {kSquaredLoss, lambda}, {}, {}, &b2);
  const double f1 = loss_value(b1, ds.problem, kSquaredLoss) + lambda * b1.lpNorm<1>();
  const double f2 = loss_value(b2, ds.problem, kSquaredLoss) + lambda * b2.lpNorm<1>();
  EXPECT_NEAR(f1, f2, 1e-10);
  EXPECT_EQ(lasso.tau, kSquaredLoss);
}

TEST(RunFit, DeterministicRow) {
  SweepConfig cfg = small_config();
  const Scenario scn = make_scenario(cfg, 0.5, 1.0);
  const Dataset a = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 150, 4);
  const Dataset b = generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 150, 4);
  FitRequest req;
  EXPECT_EQ(format_row(run_fit(a, req).rows[0]), format_row(run_fit(b, req).rows[0]));
}

TEST(Results, CsvRoundTrip) {
  const auto rows = run_sweep(small_config());
  const fs::path p = fs::temp_directory_path() / "ahr_unit_results.csv";
  write_results(rows, p);
  const auto back = read_results(p);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_EQ(format_row(back[k]), format_row(rows[k]));
  std::ostringstream s;
  write_results({}, s);
  EXPECT_EQ(s.str(), std::string(kResultsHeader) + "\n");
}

namespace {

std::vector<ResultRow> power_law(double c, double exponent, double gamma = 0.0) {
  std::vector<ResultRow> rows;
  for (std::size_t n : {100, 400, 1600, 6400}) {
    for (std::size_t rep = 0; rep < 3; ++rep) {
      ResultRow r;
      r.n = n;
      r.d = 50;
      r.rep = rep;
      r.gamma = gamma;
      r.l2_error = c * std::pow(static_cast<double>(n), exponent);
      r.l1_error = 2 * r.l2_error;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace

TEST(RateFit, ExactPowerLaw) {
  const auto slopes = rate_fit(power_law(3.0, -0.5), {"delta"}, RateAxis::n, "l2_error");
  ASSERT_EQ(slopes.size(), 1u);
  EXPECT_NEAR(slopes[0].slope, -0.5, 1e-12);
  EXPECT_EQ(slopes[0].points, 4u);
  EXPECT_NEAR(slopes[0].slope_stderr, 0.0, 1e-12);
  const auto flat = rate_fit(power_law(3.0, 0.0), {}, RateAxis::n, "l1_error");
  EXPECT_NEAR(flat[0].slope, 0.0, 1e-12);
}

TEST(RateFit, EffectiveSampleAxisCollapsesGamma) {
  auto rows = power_law(1.0, -0.5, 0.5);
  for (auto& r : rows) r.l2_error = std::pow(r.n * effective_sample_factor(0.5), -0.5);
  const auto s = rate_fit(rows, {"gamma"}, RateAxis::n_eff, "l2_error");
  EXPECT_NEAR(s[0].slope, -0.5, 1e-12);
  EXPECT_NEAR(s[0].intercept, 0.0, 1e-12);
}

TEST(RateFit, SkipsShortGroupsAndGroupsByKeys) {
  auto rows = power_law(1.0, -0.5);
  auto other = power_law(1.0, -0.25, 0.9);
  rows.insert(rows.end(), other.begin(), other.end());
  ResultRow lone;
  lone.n = 100;
  lone.d = 50;
  lone.gamma = 0.3;
  lone.l2_error = 1.0;
  rows.push_back(lone);
  std::ostringstream log;
  const auto s = rate_fit(rows, {"gamma"}, RateAxis::n, "l2_error", &log);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].slope, -0.5, 1e-12);
  EXPECT_NEAR(s[1].slope, -0.25, 1e-12);
  EXPECT_NE(log.str().find("skipped"), std::string::npos);
  EXPECT_THROW(rate_fit(rows, {"bogus"}, RateAxis::n, "l2_error"), InvalidInput);
  EXPECT_THROW(parse_rate_axis("time"), InvalidInput);
}

TEST(Diagnose, CovIsZeroForSingleState) {
  SweepConfig cfg;
  cfg.design = DesignKind::constant;
  cfg.d = 4;
  cfg.s = 1;
  cfg.n_grid = {50, 100};
  cfg.replicates = 3;
  const auto out = run_diagnose(cfg, {"cov"});
  ASSERT_EQ(out.rows.size(), 6u);
  for (const auto& r : out.rows) EXPECT_EQ(r.value, 0.0);
  EXPECT_THROW(run_diagnose(cfg, {"nope"}), InvalidInput);
}

TEST(Diagnose, BernsteinIidWithinBound) {
  SweepConfig cfg;
  cfg.n_grid = {1000};
  cfg.gamma_list = {0.0};
  cfg.bernstein_replicas = 2000;
  const auto out = run_diagnose(cfg, {"bernstein"});
  ASSERT_EQ(out.bernstein.size(), 1u);
  EXPECT_FALSE(out.bernstein[0].any_flagged());
  const fs::path dir = fs::temp_directory_path() / "ahr_unit_diag";
  std::ostringstream summary;
  write_diagnostics(out, cfg, dir, summary);
  EXPECT_TRUE(fs::exists(dir / "bernstein.csv"));
}

TEST(Diagnose, AllKindsRunAndWrite) {
  SweepConfig cfg;
  cfg.d = 10;
  cfg.s = 2;
  cfg.n_grid = {100, 200, 400};
  cfg.replicates = 2;
  cfg.lre_directions = 10;
  cfg.bernstein_replicas = 200;
  const auto out = run_diagnose(cfg, kDiagnosticKinds);
  EXPECT_EQ(out.rows.size(), 4u * 3u * 2u);
  const fs::path dir = fs::temp_directory_path() / "ahr_unit_diag_all";
  std::ostringstream summary;
  write_diagnostics(out, cfg, dir, summary);
  for (const char* f : {"diagnose_grad.csv", "diagnose_lre.csv", "diagnose_cov.csv", "diagnose_tail.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_NE(summary.str().find("slope"), std::string::npos);
}
