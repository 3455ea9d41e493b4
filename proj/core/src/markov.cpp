#include "ahr/markov.hpp"

#include "ahr/error.hpp"
#include "ahr/rng.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

namespace ahr {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kBalanceTol = 1e-10;

void check_stochastic(const Matrix& P) {
  if (P.rows() < 1 || P.rows() != P.cols()) {
    throw InvalidChain("transition matrix must be square and nonempty");
  }
  if (!P.allFinite()) throw InvalidChain("transition matrix must be finite");
  if ((P.array() < 0.0).any()) throw InvalidChain("transition matrix has negative entries");
  for (Eigen::Index a = 0; a < P.rows(); ++a) {
    if (std::abs(P.row(a).sum() - 1.0) > kRowSumTol) {
      throw InvalidChain("row " + std::to_string(a) + " of the transition matrix does not sum to 1");
    }
  }
}

// Every state reachable from state 0 along positive entries of M.
bool all_reachable(const Matrix& M) {
  const auto m = M.rows();
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index count = 1;
  while (!frontier.empty()) {
    const auto a = frontier.front();
    frontier.pop();
    for (Eigen::Index b = 0; b < m; ++b) {
      if (M(a, b) > 0.0 && !seen[static_cast<std::size_t>(b)]) {
        seen[static_cast<std::size_t>(b)] = true;
        ++count;
        frontier.push(b);
      }
    }
  }
  return count == m;
}

void check_distribution(const Vector& pi, std::size_t m) {
  if (static_cast<std::size_t>(pi.size()) != m) {
    throw InvalidInput("distribution has length " + std::to_string(pi.size()) + ", expected " +
                       std::to_string(m));
  }
  if (!pi.allFinite() || (pi.array() <= 0.0).any()) {
    throw InvalidInput("distribution entries must be finite and > 0");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-12) throw InvalidInput("distribution must sum to 1");
}

}  // namespace

Vector stationary_distribution(const Matrix& P) {
  check_stochastic(P);
  if (!all_reachable(P) || !all_reachable(P.transpose())) {
    throw InvalidChain("transition matrix is reducible");
  }
  const auto m = P.rows();
  // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Matrix A = P.transpose() - Matrix::Identity(m, m);
  A.row(m - 1).setOnes();
  Vector b = Vector::Zero(m);
  b[m - 1] = 1.0;
  const Eigen::FullPivLU<Matrix> lu(A);
  Vector pi = lu.solve(b);
  // One step of iterative refinement.
  pi += lu.solve(b - A * pi);
  pi /= pi.sum();
  if (!pi.allFinite() || (pi.array() <= 0.0).any()) {
    throw InvalidChain("stationary distribution is not strictly positive");
  }
  return pi;
}

bool satisfies_detailed_balance(const Matrix& P, const Vector& pi, double tol) {
  const Matrix flow = pi.asDiagonal() * P;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double spectral_gamma(const Matrix& P, const Vector& pi) {
  check_stochastic(P);
  check_distribution(pi, static_cast<std::size_t>(P.rows()));
  if (!satisfies_detailed_balance(P, pi, kBalanceTol)) {
    throw UnsupportedChain("spectral_gamma: chain is not reversible");
  }
  const Vector root = pi.cwiseSqrt();
  Matrix S = root.asDiagonal() * P * root.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  S -= root * root.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalFailure("spectral_gamma: eigensolver failed");
  return std::clamp(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.0, 1.0);
}

double spectral_gamma(const ChainSpec& chain) { return spectral_gamma(chain.P, chain.pi); }

ChainSpec ChainSpec::from_transition(Matrix P) {
  ChainSpec chain;
  chain.pi = stationary_distribution(P);
  if (!satisfies_detailed_balance(P, chain.pi, kBalanceTol)) {
    throw UnsupportedChain("chain is not reversible (detailed balance fails)");
  }
  chain.gamma = spectral_gamma(P, chain.pi);
  if (!(chain.gamma < 1.0 - 1e-12)) {
    throw InvalidChain("chain has no spectral gap (periodic or degenerate)");
  }
  chain.m = static_cast<std::size_t>(P.rows());
  chain.P = std::move(P);
  return chain;
}

ChainSpec make_chain_with_gamma(std::size_t m, double target_gamma, const std::optional<Vector>& pi) {
  if (m < 1) throw InvalidInput("make_chain_with_gamma: m must be >= 1");
  if (!(target_gamma >= 0.0 && target_gamma < 1.0)) {
    throw InvalidInput("make_chain_with_gamma: target gamma must lie in [0, 1)");
  }
  const auto mi = static_cast<Eigen::Index>(m);
  Vector law = pi ? *pi : Vector::Constant(mi, 1.0 / static_cast<double>(m));
  check_distribution(law, m);

  ChainSpec chain;
  chain.m = m;
  chain.P = (1.0 - target_gamma) * Vector::Ones(mi) * law.transpose();
  chain.P.diagonal().array() += target_gamma;
  chain.pi = std::move(law);
  // On pi-mean-zero functions the rank-one part vanishes and gamma*I remains.
  chain.gamma = m == 1 ? 0.0 : target_gamma;
  return chain;
}

ChainSpec make_two_state_chain(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) {
    throw InvalidInput("make_two_state_chain: p and q must lie in [0, 1]");
  }
  Matrix P(2, 2);
  P << 1.0 - p, p, q, 1.0 - q;
  return ChainSpec::from_transition(std::move(P));
}

StateSequence simulate_chain(const ChainSpec& chain, std::size_t n, std::uint64_t seed,
                             std::uint32_t replicate) {
  const std::size_t m = chain.m;
  if (m < 1 || static_cast<std::size_t>(chain.P.rows()) != m ||
      static_cast<std::size_t>(chain.pi.size()) != m) {
    throw InvalidInput("simulate_chain: inconsistent chain");
  }
  StateSequence Z(n);
  if (n == 0) return Z;
  if (m == 1) return Z;

  // Row-major cumulative sums; row m holds the cumulative stationary law.
  std::vector<double> cum((m + 1) * m);
  for (std::size_t a = 0; a <= m; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      acc += a < m ? chain.P(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))
                   : chain.pi[static_cast<Eigen::Index>(b)];
      cum[a * m + b] = acc;
    }
  }
  RandomStream rng(seed, StreamComponent::chain, replicate);
  auto draw = [&](std::size_t row) {
    const double u = rng.uniform() * cum[row * m + m - 1];
    const double* begin = cum.data() + row * m;
    const auto idx = static_cast<std::size_t>(std::upper_bound(begin, begin + m, u) - begin);
    return static_cast<std::uint32_t>(std::min(idx, m - 1));
  };
  Z[0] = draw(m);
  for (std::size_t i = 1; i < n; ++i) Z[i] = draw(Z[i - 1]);
  return Z;
}

// --- covariates -------------------------------------------------------------

CovariateMap::CovariateMap(Matrix table, const Vector& pi)
    : CovariateMap(std::vector<Matrix>{std::move(table)}, pi) {}

CovariateMap::CovariateMap(std::vector<Matrix> tables, const Vector& pi) : tables_(std::move(tables)) {
  if (tables_.empty()) throw InvalidInput("CovariateMap: at least one table required");
  const auto m = tables_.front().rows();
  const auto d = tables_.front().cols();
  if (m < 1 || d < 1) throw InvalidInput("CovariateMap: table must be nonempty");
  envelope_ = Vector::Zero(m);
  for (const Matrix& t : tables_) {
    if (t.rows() != m || t.cols() != d) throw InvalidInput("CovariateMap: table shapes differ");
    if (!t.allFinite()) throw InvalidInput("CovariateMap: table must be finite");
    envelope_ = envelope_.cwiseMax(t.cwiseAbs().rowwise().maxCoeff());
  }
  check_distribution(pi, static_cast<std::size_t>(m));
  sigma4_ = pi.dot(envelope_.array().pow(4.0).matrix());
}

const Matrix& CovariateMap::table() const {
  if (time_varying()) throw Unsupported("CovariateMap: map is time-varying");
  return tables_.front();
}

double CovariateMap::sigma2() const noexcept { return std::sqrt(sigma4_); }

Matrix CovariateMap::population_covariance(const Vector& pi) const {
  const Matrix& f = table();
  return f.transpose() * pi.asDiagonal() * f;
}

CovariateMap gaussian_covariates(std::size_t m, std::size_t d, const Vector& pi, std::uint64_t seed) {
  RandomStream rng(seed, StreamComponent::covariates);
  Matrix f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index a = 0; a < f.rows(); ++a) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) f(a, j) = rng.normal();
  }
  return CovariateMap(std::move(f), pi);
}

CovariateMap indicator_covariates(const Vector& scales, const Vector& pi) {
  return CovariateMap(Matrix(scales.asDiagonal()), pi);
}

// --- errors -----------------------------------------------------------------

std::string to_string(ErrorFamily family) {
  switch (family) {
    case ErrorFamily::symmetric_pareto: return "symmetric-pareto";
    case ErrorFamily::student_t: return "student-t";
    case ErrorFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

ErrorFamily parse_error_family(const std::string& name) {
  if (name == "symmetric-pareto" || name == "pareto") return ErrorFamily::symmetric_pareto;
  if (name == "student-t" || name == "t") return ErrorFamily::student_t;
  if (name == "gaussian" || name == "normal") return ErrorFamily::gaussian;
  throw InvalidInput("unknown error family '" + name + "'");
}

double base_abs_moment(ErrorFamily family, double shape, double p) {
  if (!(p > 0.0)) throw InvalidInput("base_abs_moment: p must be > 0");
  switch (family) {
    case ErrorFamily::symmetric_pareto:
      if (!(shape > p)) {
        throw InvalidModel("symmetric-pareto(alpha=" + std::to_string(shape) +
                           ") has no finite moment of order " + std::to_string(p));
      }
      return shape / (shape - p);
    case ErrorFamily::student_t: {
      if (!(shape > p)) {
        throw InvalidModel("student-t(nu=" + std::to_string(shape) +
                           ") has no finite moment of order " + std::to_string(p));
      }
      const double nu = shape;
      const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                           0.5 * std::log(nu * std::numbers::pi);
      const auto integrand = [=](double x) {
        if (x <= 0.0) return 0.0;
        return std::exp(log_c + p * std::log(x) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
      };
      boost::math::quadrature::exp_sinh<double> integrator;
      return 2.0 * integrator.integrate(integrand, 1e-14);
    }
    case ErrorFamily::gaussian: {
      const double log_c = -0.5 * std::log(2.0 * std::numbers::pi);
      const auto integrand = [=](double x) {
        if (x <= 0.0) return 0.0;
        return std::exp(log_c + p * std::log(x) - 0.5 * x * x);
      };
      boost::math::quadrature::exp_sinh<double> integrator;
      return 2.0 * integrator.integrate(integrand, 1e-14);
    }
  }
  throw InvalidModel("unknown error family");
}

ErrorModel::ErrorModel(ErrorFamily family, double shape, Vector per_state_scale, double delta)
    : family_(family), shape_(shape), scale_(std::move(per_state_scale)), delta_(delta), v_delta_(0.0) {
  if (!(delta_ > 0.0) || !std::isfinite(delta_)) throw InvalidModel("ErrorModel: delta must be > 0");
  if (family_ != ErrorFamily::gaussian && (!(shape_ > 0.0) || !std::isfinite(shape_))) {
    throw InvalidModel("ErrorModel: shape parameter must be finite and > 0");
  }
  if (family_ == ErrorFamily::gaussian) shape_ = 0.0;
  if (scale_.size() < 1) throw InvalidModel("ErrorModel: per-state scale must be nonempty");
  if (!scale_.allFinite() || (scale_.array() < 0.0).any()) {
    throw InvalidModel("ErrorModel: per-state scales must be finite and >= 0");
  }
  v_delta_ = moment_vdelta(*this);
}

double ErrorModel::draw_base(RandomStream& rng) const {
  switch (family_) {
    case ErrorFamily::symmetric_pareto: return rng.symmetric_pareto(shape_);
    case ErrorFamily::student_t: return rng.student_t(shape_);
    case ErrorFamily::gaussian: return rng.normal();
  }
  return 0.0;
}

double moment_vdelta(const ErrorModel& model) {
  const double p = 1.0 + model.delta();
  const double base = base_abs_moment(model.family(), model.shape(), p);
  const double top = model.per_state_scale().maxCoeff();
  return top == 0.0 ? 0.0 : std::pow(top, p) * base;
}

Vector sample_errors(const StateSequence& Z, const ErrorModel& model, std::uint64_t seed,
                     std::uint32_t replicate) {
  const Vector& scale = model.per_state_scale();
  RandomStream rng(seed, StreamComponent::errors, replicate);
  Vector eps(static_cast<Eigen::Index>(Z.size()));
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (Z[i] >= static_cast<std::size_t>(scale.size())) {
      throw InvalidInput("sample_errors: state " + std::to_string(Z[i]) + " out of range");
    }
    const double base = model.draw_base(rng);
    const double s = scale[Z[i]];
    eps[static_cast<Eigen::Index>(i)] = s == 0.0 ? 0.0 : s * base;
  }
  return eps;
}

// --- datasets ---------------------------------------------------------------

const TruthSpec& Dataset::require_truth(const char* what) const {
  if (!truth) throw InvalidInput(std::string(what) + ": dataset carries no ground truth");
  return *truth;
}

Dataset generate_dataset(std::shared_ptr<const ChainSpec> chain,
                         std::shared_ptr<const CovariateMap> covariates,
                         std::shared_ptr<const ErrorModel> errors, const TruthSpec& truth,
                         std::size_t n, std::uint64_t seed, std::uint32_t replicate) {
  if (!chain || !covariates || !errors) throw InvalidInput("generate_dataset: null specification");
  if (n < 1) throw InvalidInput("generate_dataset: n must be >= 1");
  if (covariates->m() != chain->m) {
    throw InvalidInput("generate_dataset: covariate map has " + std::to_string(covariates->m()) +
                       " states, chain has " + std::to_string(chain->m));
  }
  if (static_cast<std::size_t>(errors->per_state_scale().size()) != chain->m) {
    throw InvalidInput("generate_dataset: error scales do not match the chain's state count");
  }
  if (truth.d() != covariates->d()) {
    throw InvalidInput("generate_dataset: beta_star has length " + std::to_string(truth.d()) +
                       ", covariates have d = " + std::to_string(covariates->d()));
  }

  StateSequence Z = simulate_chain(*chain, n, seed, replicate);
  Vector eps = sample_errors(Z, *errors, seed, replicate);

  const auto d = static_cast<Eigen::Index>(covariates->d());
  Matrix X(static_cast<Eigen::Index>(n), d);
  Vector y(static_cast<Eigen::Index>(n));
  const Vector& beta = truth.beta_star();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    X.row(row) = covariates->table_at(i).row(Z[i]);
    y[row] = X.row(row).dot(beta) + eps[row];
  }

  Provenance prov{std::move(chain), std::move(covariates), std::move(errors), seed, replicate};
  return Dataset{std::move(Z), Problem(std::move(X), std::move(y)), std::move(eps), truth,
                 std::move(prov)};
}

}  // namespace ahr
