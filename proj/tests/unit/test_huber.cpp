#include "ahr/error.hpp"
#include "ahr/huber.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ahr;

namespace {

Problem single(double x, double y) { return Problem(Matrix::Constant(1, 1, x), Vector::Constant(1, y)); }

Problem pair_problem() {
  Matrix X(2, 1);
  X << 1, 1;
  Vector y(2);
  y << 1, -1;
  return Problem(X, y);
}

}  // namespace

TEST(HuberValue, Examples) {
  EXPECT_EQ(huber_value(0.0, 1.0), 0.0);
  EXPECT_EQ(huber_value(0.5, 1.0), 0.125);
  EXPECT_EQ(huber_value(2.0, 1.0), 1.5);
  EXPECT_EQ(huber_value(-2.0, 1.0), 1.5);
  EXPECT_EQ(huber_value(1e6, kSquaredLoss), 0.5e12);
}

TEST(HuberValue, RejectsBadInput) {
  EXPECT_THROW(huber_value(std::nan(""), 1.0), InvalidInput);
  EXPECT_THROW(huber_value(INFINITY, 1.0), InvalidInput);
  EXPECT_THROW(huber_value(1.0, 0.0), InvalidInput);
  EXPECT_THROW(huber_value(1.0, -1.0), InvalidInput);
  EXPECT_THROW(huber_value(1.0, std::nan("")), InvalidInput);
}

TEST(HuberValue, MonotoneInAbsWAndTau) {
  for (double tau : {0.1, 1.0, 3.0}) {
    double prev = 0.0;
    for (double w = 0.0; w < 10.0; w += 0.01) {
      const double v = huber_value(w, tau);
      EXPECT_GE(v, prev);
      EXPECT_EQ(v, huber_value(-w, tau));
      prev = v;
    }
  }
  for (double w : {-4.0, -0.3, 0.0, 0.7, 5.0}) {
    double prev = huber_value(w, 0.01);
    for (double tau = 0.02; tau < 10.0; tau += 0.01) {
      const double v = huber_value(w, tau);
      EXPECT_GE(v, prev);
      prev = v;
    }
    EXPECT_LE(prev, huber_value(w, kSquaredLoss));
  }
}

TEST(HuberValue, ContinuousAtKink) {
  for (double tau : {0.5, 1.0, 7.0}) {
    EXPECT_NEAR(huber_value(std::nextafter(tau, 0.0), tau), huber_value(std::nextafter(tau, 100.0), tau), 1e-12);
  }
}

TEST(Truncate, Examples) {
  EXPECT_EQ(truncate(0.3, 1.0), 0.3);
  EXPECT_EQ(truncate(5.0, 1.0), 1.0);
  EXPECT_EQ(truncate(-5.0, 1.0), -1.0);
  EXPECT_EQ(truncate(-5.0, kSquaredLoss), -5.0);
  EXPECT_THROW(truncate(std::nan(""), 1.0), InvalidInput);
}

TEST(HuberDeriv, Examples) {
  EXPECT_EQ(huber_deriv(0.5, 1.0), 0.5);
  EXPECT_EQ(huber_deriv(2.0, 1.0), 1.0);
  EXPECT_EQ(huber_deriv(-3.0, 1.0), -1.0);
  EXPECT_EQ(huber_deriv(1.0, 1.0), 1.0);
  EXPECT_EQ(huber_deriv(-1.0, 1.0), -1.0);
}

TEST(HuberDeriv, EqualsTruncateOnGrid) {
  for (double tau : {0.25, 1.0, 4.0}) {
    for (int k = 0; k < 10000; ++k) {
      const double w = -10.0 + 20.0 * k / 9999.0;
      EXPECT_EQ(huber_deriv(w, tau), truncate(w, tau));
    }
  }
}

TEST(HuberDeriv, MatchesFiniteDifferenceAwayFromKink) {
  const double tau = 1.3;
  const double h = 1e-6;
  for (double w = -5.0; w <= 5.0; w += 0.0371) {
    if (std::abs(std::abs(w) - tau) < 1e-3) continue;
    const double fd = (huber_value(w + h, tau) - huber_value(w - h, tau)) / (2 * h);
    EXPECT_NEAR(fd, huber_deriv(w, tau), 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(LossValue, Examples) {
  Problem zero(Matrix::Random(4, 3), Vector::Zero(4));
  EXPECT_EQ(loss_value(Vector::Zero(3), zero, 1.0), 0.0);
  EXPECT_EQ(loss_value(Vector::Zero(1), single(1, 2), 1.0), 1.5);
  EXPECT_EQ(loss_value(Vector::Zero(1), pair_problem(), 10.0), 0.5);
}

TEST(LossValue, DimensionMismatchThrows) {
  EXPECT_THROW(loss_value(Vector::Zero(2), single(1, 2), 1.0), InvalidInput);
  EXPECT_THROW(loss_gradient(Vector::Zero(2), single(1, 2), 1.0), InvalidInput);
  EXPECT_THROW(hessian_quadratic_form(Vector::Zero(1), single(1, 2), 1.0, Vector::Zero(2)), InvalidInput);
}

TEST(LossValue, SquaredLossLimitIsExact) {
  std::mt19937_64 gen(3);
  oracle::Mat X;
  oracle::Vec y;
  oracle::random_instance(gen, 40, 6, X, y);
  const Problem p(X, y);
  const Vector beta = Vector::LinSpaced(6, -1, 1);
  const double expected = (y - X * beta).squaredNorm() / (2.0 * 40);
  EXPECT_NEAR(loss_value(beta, p, kSquaredLoss), expected, 1e-15 * expected);
}

TEST(LossValue, ConvexAlongRandomChords) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  oracle::Mat X;
  oracle::Vec y;
  oracle::random_instance(gen, 30, 5, X, y);
  const Problem p(X, y);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector b1 = 3 * Vector::Random(5);
    const Vector b2 = 3 * Vector::Random(5);
    const double th = u(gen);
    const double lhs = loss_value(th * b1 + (1 - th) * b2, p, 0.8);
    const double rhs = th * loss_value(b1, p, 0.8) + (1 - th) * loss_value(b2, p, 0.8);
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(LossValue, AgreesWithOracle) {
  std::mt19937_64 gen(5);
  oracle::Mat X;
  oracle::Vec y;
  oracle::random_instance(gen, 25, 4, X, y);
  const Problem p(X, y);
  const Vector beta = Vector::Random(4);
  for (double tau : {0.3, 1.0, kSquaredLoss}) {
    EXPECT_NEAR(loss_value(beta, p, tau), oracle::objective(X, y, beta, tau, 0.0), 1e-13);
  }
}

TEST(LossGradient, Examples) {
  Problem zero(Matrix::Random(4, 3), Vector::Zero(4));
  EXPECT_EQ(loss_gradient(Vector::Zero(3), zero, 1.0), Vector::Zero(3));
  EXPECT_EQ(loss_gradient(Vector::Zero(1), single(1, 2), 1.0)[0], -1.0);
  EXPECT_EQ(loss_gradient(Vector::Zero(1), pair_problem(), 10.0)[0], 0.0);
}

TEST(LossGradient, MatchesCentralDifferences) {
  std::mt19937_64 gen(17);
  for (int inst = 0; inst < 20; ++inst) {
    oracle::Mat X;
    oracle::Vec y;
    oracle::random_instance(gen, 50, 10, X, y);
    const Problem p(X, y);
    const Vector beta = Vector::Random(10);
    for (double tau : {0.5, 2.0, kSquaredLoss}) {
      const Vector g = loss_gradient(beta, p, tau);
      const Vector fd = oracle::fd_gradient(X, y, beta, tau);
      EXPECT_LE((g - fd).lpNorm<Eigen::Infinity>() / std::max(g.lpNorm<Eigen::Infinity>(), 1e-8), 1e-6)
          << "instance " << inst << " tau " << tau;
    }
  }
}

TEST(LossGradient, CompensatedPathMatchesPlainSum) {
  // n above the compensated-summation threshold.
  const Eigen::Index n = 20000;
  Matrix X = Matrix::Random(n, 3);
  Vector y = Vector::Random(n);
  const Problem p(X, y);
  const Vector beta = Vector::Random(3);
  const Vector g = loss_gradient(beta, p, 0.4);
  const Vector r = y - X * beta;
  Vector expected = Vector::Zero(3);
  for (Eigen::Index i = 0; i < n; ++i) expected -= oracle::clamp(r[i], 0.4) * X.row(i).transpose();
  expected /= static_cast<double>(n);
  EXPECT_LE((g - expected).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(HessianForm, Examples) {
  Matrix X(2, 1);
  X << 1, 1;
  const Problem p(X, Vector::Zero(2));
  EXPECT_EQ(hessian_quadratic_form(Vector::Zero(1), p, 1.0, Vector::Zero(1)), 0.0);
  EXPECT_EQ(hessian_quadratic_form(Vector::Zero(1), p, 1.0, Vector::Ones(1)), 1.0);
  const Problem far(X, Vector::Constant(2, 10.0));
  EXPECT_EQ(hessian_quadratic_form(Vector::Zero(1), far, 1.0, Vector::Ones(1)), 0.0);
}

TEST(HessianForm, SquaredLossIsEmpiricalCovariance) {
  Matrix X = Matrix::Random(30, 4);
  const Problem p(X, Vector::Random(30));
  const Vector u = Vector::Random(4);
  const Matrix S = X.transpose() * X / 30.0;
  EXPECT_NEAR(hessian_quadratic_form(Vector::Random(4), p, kSquaredLoss, u), u.dot(S * u), 1e-13);
}

TEST(ProblemTypes, Validation) {
  EXPECT_THROW(Problem(Matrix(0, 2), Vector(0)), InvalidInput);
  EXPECT_THROW(Problem(Matrix::Zero(3, 2), Vector::Zero(2)), InvalidInput);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(Problem(bad, Vector::Zero(2)), InvalidInput);

  Vector b = Vector::Zero(5);
  b[1] = 2.0;
  b[4] = -1.0;
  const TruthSpec t(b);
  EXPECT_EQ(t.sparsity(), 2u);
  EXPECT_EQ(t.support(), (std::vector<std::size_t>{1, 4}));
  EXPECT_TRUE(t.in_support(4));
  EXPECT_FALSE(t.in_support(0));

  EXPECT_THROW((HuberConfig{0.0, 0.1}.validate()), InvalidInput);
  EXPECT_THROW((HuberConfig{1.0, -0.1}.validate()), InvalidInput);
  EXPECT_NO_THROW((HuberConfig{kSquaredLoss, 0.0}.validate()));
}
