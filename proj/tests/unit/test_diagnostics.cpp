#include "ahr/diagnostics.hpp"
#include "ahr/error.hpp"
#include "ahr/huber.hpp"
#include "ahr/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ahr;

namespace {

Dataset make(std::shared_ptr<const ChainSpec> chain, std::shared_ptr<const CovariateMap> cov,
             std::shared_ptr<const ErrorModel> err, const Vector& beta, std::size_t n, std::uint64_t seed) {
  return generate_dataset(std::move(chain), std::move(cov), std::move(err), TruthSpec(beta), n, seed);
}

Dataset manual(Matrix X, Vector eps, Vector beta) {
  Dataset ds{StateSequence(static_cast<std::size_t>(X.rows()), 0), Problem(X, X * beta + eps), eps,
             TruthSpec(beta), std::nullopt};
  return ds;
}

}  // namespace

TEST(GradSupnorm, Examples) {
  const Dataset zero = manual(Matrix::Random(10, 3), Vector::Zero(10), Vector::Ones(3));
  EXPECT_EQ(grad_supnorm_at_truth(zero, 0.7), 0.0);
  const Dataset one = manual(Matrix::Ones(1, 1), Vector::Constant(1, 2.0), Vector::Ones(1));
  EXPECT_EQ(grad_supnorm_at_truth(one, 1.0), 1.0);
  Dataset no_truth = zero;
  no_truth.truth.reset();
  EXPECT_THROW(grad_supnorm_at_truth(no_truth, 1.0), InvalidInput);
}

TEST(GradSupnorm, ClippingShrinksSingleSignResiduals) {
  const Matrix X = Matrix::Random(40, 5).cwiseAbs();
  const Vector eps = Vector::Random(40).cwiseAbs() * 5;
  const Dataset ds = manual(X, eps, Vector::Zero(5));
  const double unclipped = grad_supnorm_at_truth(ds, kSquaredLoss);
  for (double tau : {0.1, 1.0, 3.0}) EXPECT_LE(grad_supnorm_at_truth(ds, tau), unclipped);
}

TEST(Prop3, Example) {
  const double tau = 14.736;
  const auto t = prop3_terms(1000, 100, 0.0, tau, 1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(t.variance, std::sqrt(2 * std::log(100.0) / 1000), 1e-12);
  EXPECT_NEAR(t.variance, 0.09597, 1e-5);
  EXPECT_NEAR(t.deviation, 20 * tau * std::log(100.0) / 1000, 1e-12);
  EXPECT_NEAR(t.deviation, 1.3573, 1e-4);
  EXPECT_NEAR(t.bias, 1 / tau, 1e-15);
  EXPECT_NEAR(prop3_bound(1000, 100, 0.0, tau, 1.0, 1.0, 1.0, 1.0), 1.5211, 1e-3);
}

TEST(Prop3, TermsInIsolation) {
  const std::size_t n = 700, d = 40;
  const double g = 0.4, tau = 3.0, delta = 0.6, s2 = 2.0, v = 1.7, C = 0.9;
  const double k = (1 + g) / (1 - g);
  const double m = 0.6;
  const auto only_bias = prop3_terms(n, d, g, tau, delta, 0.0, v, C);
  EXPECT_EQ(only_bias.variance, 0.0);
  const auto no_bias = prop3_terms(n, d, g, tau, delta, s2, v, 0.0);
  EXPECT_EQ(no_bias.bias, 0.0);
  const auto t = prop3_terms(n, d, g, tau, delta, s2, v, C);
  EXPECT_NEAR(t.variance, std::sqrt(k * 2 * s2 * v * std::pow(tau, 1 - m) * std::log(40.0) / n), 1e-14);
  EXPECT_NEAR(t.deviation, k * 20 * tau * std::log(40.0) / n, 1e-14);
  EXPECT_NEAR(t.bias, C * std::pow(tau, -m), 1e-14);
  EXPECT_EQ(prop3_bound(n, d, g, tau, delta, s2, v, C), t.variance + t.deviation + t.bias);
  EXPECT_EQ(t.total(), t.variance + t.deviation + t.bias);
  const auto iid = prop3_terms(n, d, 0.0, tau, delta, s2, v, C);
  EXPECT_NEAR(t.deviation / iid.deviation, k, 1e-12);
}

TEST(Prop3, IncreasingInTauForLargeTau) {
  double prev = 0.0;
  for (double tau = 50; tau < 1000; tau *= 1.5) {
    const double b = prop3_bound(1000, 100, 0.0, tau, 1.0, 1.0, 1.0, 1.0);
    EXPECT_GT(b, prev);
    prev = b;
  }
}

TEST(Lre, IndicatorDesignCoordinateDirections) {
  const std::size_t d = 6;
  Vector scales(d);
  scales << 1.0, 0.5, 2.0, 1.5, 0.8, 1.2;
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(d, 0.0));
  auto cov = std::make_shared<const CovariateMap>(indicator_covariates(scales, chain->pi));
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::gaussian, 0.0, Vector::Ones(d), 1.0);
  Vector beta = Vector::Zero(d);
  beta[0] = 1;
  beta[1] = -1;
  beta[3] = 2;
  const Dataset ds = make(chain, cov, err, beta, 5000, 3);
  LREQuery q;
  q.coordinate_only = true;
  q.num_centers = 3;
  const double est = lre_estimate(ds, kSquaredLoss, q);
  const Matrix S = ds.problem.X().transpose() * ds.problem.X() / 5000.0;
  const double expected = std::min({S(0, 0), S(1, 1), S(3, 3)});
  EXPECT_NEAR(est, expected, 1e-12);
  // Population value min_j pi_j f(j,j)^2 over the support.
  EXPECT_NEAR(est, 0.25 / 6, 0.01);
}

TEST(Lre, ZeroWhenAllResidualsClipped) {
  const Dataset ds = manual(Matrix::Random(30, 4), Vector::Constant(30, 100.0), Vector::Ones(4));
  LREQuery q;
  q.num_directions = 20;
  q.r = 0.1;
  EXPECT_EQ(lre_estimate(ds, 1.0, q), 0.0);
}

TEST(Lre, NonincreasingInRadius) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(50, 0.3));
  auto cov = std::make_shared<const CovariateMap>(gaussian_covariates(50, 10, chain->pi, 5));
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::student_t, 3.0, Vector::Ones(50), 1.0);
  Vector beta = Vector::Zero(10);
  beta.head(3) << 1, -1, 1;
  const Dataset ds = make(chain, cov, err, beta, 400, 6);
  LREQuery q;
  q.num_directions = 50;
  q.seed = 4;
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    q.r = r;
    const double est = lre_estimate(ds, 1.5, q);
    EXPECT_LE(est, prev);
    EXPECT_GE(est, 0.0);
    prev = est;
  }
  EXPECT_EQ(lre_estimate(ds, 1.5, q), lre_estimate(ds, 1.5, q));
}

TEST(Lre, Validation) {
  const Dataset ds = manual(Matrix::Random(10, 3), Vector::Zero(10), Vector::Zero(3));
  EXPECT_THROW(lre_estimate(ds, 1.0, LREQuery{}), InvalidInput);
  const Dataset ok = manual(Matrix::Random(10, 3), Vector::Zero(10), Vector::Ones(3));
  LREQuery q;
  q.r = 0.0;
  EXPECT_THROW(lre_estimate(ok, 1.0, q), InvalidInput);
  q = {};
  q.cone_constant = 0.5;
  EXPECT_THROW(lre_estimate(ok, 1.0, q), InvalidInput);
}

TEST(CovarianceDeviation, ConstantDesignIsZero) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(1, 0.0));
  auto cov = std::make_shared<const CovariateMap>(Matrix::Constant(1, 4, 0.7), chain->pi);
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::gaussian, 0.0, Vector::Ones(1), 1.0);
  const Dataset ds = make(chain, cov, err, Vector::Ones(4), 100, 1);
  EXPECT_EQ(covariance_deviation(ds, *cov, *chain), 0.0);
}

TEST(CovarianceDeviation, RejectsTimeVarying) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(2, 0.0));
  auto cov = std::make_shared<const CovariateMap>(std::vector<Matrix>{Matrix::Ones(2, 2), Matrix::Zero(2, 2)},
                                                  chain->pi);
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::gaussian, 0.0, Vector::Ones(2), 1.0);
  const Dataset ds = make(chain, cov, err, Vector::Ones(2), 10, 1);
  EXPECT_THROW(covariance_deviation(ds, *cov, *chain), Unsupported);
}

TEST(CovarianceDeviation, RateInN) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(20, 0.5));
  auto cov = std::make_shared<const CovariateMap>(gaussian_covariates(20, 5, chain->pi, 3));
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::gaussian, 0.0, Vector::Ones(20), 1.0);
  std::vector<double> lx, ly;
  for (std::size_t n : {500, 2000, 8000, 32000}) {
    std::vector<double> vals;
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
      const Dataset ds = make(chain, cov, err, Vector::Ones(5), n, 100 + rep);
      vals.push_back(covariance_deviation(ds, *cov, *chain));
    }
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(stats::median(vals)));
  }
  EXPECT_NEAR(stats::ols(lx, ly).slope, -0.5, 0.1);
}

TEST(TruncatedTail, Limits) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(4, 0.2));
  Vector scales(4);
  scales << 1, 2, 3, 4;
  auto cov = std::make_shared<const CovariateMap>(indicator_covariates(scales, chain->pi));
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::student_t, 5.0, Vector::Ones(4), 1.0);
  const Dataset ds = make(chain, cov, err, Vector::Ones(4), 1000, 2);
  EXPECT_EQ(truncated_tail_sum(ds, *cov, 1e9), 0.0);
  double all = 0;
  for (auto z : ds.Z) all += scales[z] * scales[z];
  EXPECT_NEAR(truncated_tail_sum(ds, *cov, 1e-300), all / 1000, 1e-12);
}

TEST(TruncatedTail, MedianBelowBound) {
  auto chain = std::make_shared<const ChainSpec>(make_chain_with_gamma(10, 0.0));
  auto cov = std::make_shared<const CovariateMap>(gaussian_covariates(10, 20, chain->pi, 9));
  auto err = std::make_shared<const ErrorModel>(ErrorFamily::symmetric_pareto, 2.5, Vector::Ones(10), 1.0);
  const std::size_t n = 1000;
  const double tau = 6.0;
  std::vector<double> vals;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    vals.push_back(truncated_tail_sum(make(chain, cov, err, Vector::Ones(20), n, rep), *cov, tau));
  }
  const double bound = lemma2_bound(cov->sigma2(), tau, 1.0, err->v_delta()) + 3 * std::sqrt(std::log(20.0) / n);
  EXPECT_LE(stats::median(vals), bound);
}

TEST(Lemma2, Formula) {
  EXPECT_NEAR(lemma2_bound(2.0, 4.0, 1.0, 3.0), 2.0 * 0.25 * 3.0, 1e-15);
  EXPECT_NEAR(lemma2_bound(1.0, 2.0, 0.5, 1.0), 1.0, 1e-15);
}

TEST(Bernstein, BoundArithmetic) {
  EXPECT_NEAR(bernstein_bound(1000, 0.2, 0.0, 1.0, 1.0), 2 * std::exp(-1000 * 0.04 / 3.0), 1e-18);
  EXPECT_NEAR(bernstein_bound(1000, 0.2, 0.0, 1.0, 1.0), 3.2e-6, 1e-7);
  EXPECT_NEAR(bernstein_bound(100, 0.3, 0.5, 1.0, 1.0), 2 * std::exp(-100 * 0.09 / (3.0 + 3.0)), 1e-15);
  EXPECT_EQ(bernstein_bound(10, 0.01, 0.9, 1.0, 1.0), 1.0);
}

TEST(Bernstein, ConstantFunctionHasNoTail) {
  const auto chain = make_chain_with_gamma(3, 0.5);
  const auto rep = bernstein_check(chain, Vector::Constant(3, 0.4), 1.0, 200, 500, {0.01, 0.1}, 1);
  for (double p : rep.empirical_tail) EXPECT_EQ(p, 0.0);
  EXPECT_FALSE(rep.any_flagged());
  EXPECT_THROW(bernstein_check(chain, Vector::Constant(3, 2.0), 1.0, 10, 10, {0.1}, 1), InvalidInput);
}

TEST(Bernstein, IidRademacher) {
  const auto chain = make_chain_with_gamma(2, 0.0);
  Vector f(2);
  f << -1, 1;
  const auto rep = bernstein_check(chain, f, 1.0, 1000, 10000, {0.2}, 7);
  EXPECT_EQ(rep.empirical_tail[0], 0.0);
  EXPECT_NEAR(rep.bernstein_bound[0], 2 * std::exp(-1000 * 0.04 / 3.0), 1e-18);
  EXPECT_NEAR(rep.mean, 0.0, 1e-15);
  EXPECT_NEAR(rep.variance, 1.0, 1e-15);
}

TEST(Bernstein, TailsGrowWithGamma) {
  Vector f(2);
  f << -1, 1;
  const std::vector<double> grid{0.05, 0.1, 0.15, 0.2};
  std::vector<std::vector<double>> tails;
  for (double g : {0.0, 0.5, 0.9}) {
    tails.push_back(bernstein_check(make_chain_with_gamma(2, g), f, 1.0, 200, 2000, grid, 3).empirical_tail);
  }
  int ordered = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (tails[0][k] <= tails[1][k] && tails[1][k] <= tails[2][k]) ++ordered;
  }
  EXPECT_GT(ordered, static_cast<int>(grid.size()) / 2);
}

TEST(Bernstein, ThreadCountDoesNotChangeResult) {
  Vector f(2);
  f << -1, 1;
  const auto chain = make_chain_with_gamma(2, 0.5);
  const auto a = bernstein_check(chain, f, 1.0, 100, 3000, {0.1, 0.2}, 5, 1);
  const auto b = bernstein_check(chain, f, 1.0, 100, 3000, {0.1, 0.2}, 5, 4);
  EXPECT_EQ(a.empirical_tail, b.empirical_tail);
}
