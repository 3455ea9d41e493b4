#pragma once

#include "ahr/rng.hpp"
#include "ahr/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ahr {

using StateSequence = std::vector<std::uint32_t>;

/// Finite, irreducible, reversible chain with a non-zero spectral gap.
///
/// Construct through from_transition() or the factories below; the
/// constructor path computes pi and gamma and rejects anything else.
struct ChainSpec {
  std::size_t m = 0;
  Matrix P;
  Vector pi;
  /// Norm of P on pi-mean-zero functions; 1 - gamma is the spectral gap.
  double gamma = 0.0;

  /// Throws InvalidChain (not stochastic, reducible, gamma == 1) or
  /// UnsupportedChain (detailed balance fails).
  static ChainSpec from_transition(Matrix P);
};

/// pi with pi P = pi, sum 1, pi > 0. Throws InvalidChain for non-stochastic
/// or reducible P.
Vector stationary_distribution(const Matrix& P);

/// max_{a,b} |pi_a P_ab - pi_b P_ba| <= tol.
bool satisfies_detailed_balance(const Matrix& P, const Vector& pi, double tol = 1e-10);

/// Second-largest absolute eigenvalue of D^{1/2} P D^{-1/2}, D = diag(pi), i.e.
/// the largest one after projecting out sqrt(pi). Throws UnsupportedChain for
/// non-reversible P.
double spectral_gamma(const Matrix& P, const Vector& pi);
double spectral_gamma(const ChainSpec& chain);

/// P = (1 - gamma) 1 pi' + gamma I (pi uniform unless given): the lazy version
/// of the i.i.d. chain, whose spectral gamma is exactly target_gamma.
ChainSpec make_chain_with_gamma(std::size_t m, double target_gamma,
                                const std::optional<Vector>& pi = std::nullopt);

/// [[1-p, p], [q, 1-q]].
ChainSpec make_two_state_chain(double p, double q);

/// Z_1 ~ pi, Z_{i+1} | Z_i ~ P[Z_i, .]. Stream (seed, chain, replicate).
StateSequence simulate_chain(const ChainSpec& chain, std::size_t n, std::uint64_t seed,
                             std::uint32_t replicate = 0);

/// State a -> covariate vector f(a), with envelope M(a) >= max_j |f(a, j)| and
/// sigma4 = sum_a pi_a M(a)^4. An optional cyclic list of tables makes the map
/// time-varying: x_i = tables[i mod T](Z_i).
class CovariateMap {
 public:
  CovariateMap(Matrix table, const Vector& pi);
  CovariateMap(std::vector<Matrix> tables, const Vector& pi);

  std::size_t m() const noexcept { return static_cast<std::size_t>(tables_.front().rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(tables_.front().cols()); }
  bool time_varying() const noexcept { return tables_.size() > 1; }

  /// The time-invariant table; throws Unsupported for time-varying maps.
  const Matrix& table() const;
  const Matrix& table_at(std::size_t i) const { return tables_[i % tables_.size()]; }
  const Vector& envelope() const noexcept { return envelope_; }
  double sigma4() const noexcept { return sigma4_; }
  /// sqrt(sigma4), the bound on E[M^2].
  double sigma2() const noexcept;

  /// Sigma = sum_a pi_a f(a) f(a)' for a time-invariant map.
  Matrix population_covariance(const Vector& pi) const;

 private:
  std::vector<Matrix> tables_;
  Vector envelope_;
  double sigma4_ = 0.0;
};

/// m states with i.i.d. N(0,1) covariate rows (stream covariates).
CovariateMap gaussian_covariates(std::size_t m, std::size_t d, const Vector& pi,
                                 std::uint64_t seed);
/// m = d states, f(a) = scale_a e_a.
CovariateMap indicator_covariates(const Vector& scales, const Vector& pi);

enum class ErrorFamily { symmetric_pareto, student_t, gaussian };

std::string to_string(ErrorFamily family);
ErrorFamily parse_error_family(const std::string& name);

/// Conditional error law: eps_i = scale[Z_i] * base_i with base_i i.i.d. from
/// a symmetric family (so E[eps | Z] = 0).
class ErrorModel {
 public:
  /// shape is alpha (symmetric_pareto) or nu (student_t); ignored for gaussian.
  /// Throws InvalidModel when E|base|^{1+delta} is infinite.
  ErrorModel(ErrorFamily family, double shape, Vector per_state_scale, double delta);

  ErrorFamily family() const noexcept { return family_; }
  double shape() const noexcept { return shape_; }
  const Vector& per_state_scale() const noexcept { return scale_; }
  double delta() const noexcept { return delta_; }
  double v_delta() const noexcept { return v_delta_; }

  double draw_base(RandomStream& rng) const;

 private:
  ErrorFamily family_;
  double shape_;
  Vector scale_;
  double delta_;
  double v_delta_;
};

/// E|base|^p for a family. Pareto uses alpha/(alpha - p); student-t and
/// gaussian integrate the density numerically. Throws InvalidModel if infinite.
double base_abs_moment(ErrorFamily family, double shape, double p);

/// sup_a scale_a^{1+delta} E|base|^{1+delta}.
double moment_vdelta(const ErrorModel& model);

/// Stream (seed, errors, replicate).
Vector sample_errors(const StateSequence& Z, const ErrorModel& model, std::uint64_t seed,
                     std::uint32_t replicate = 0);

struct Provenance {
  std::shared_ptr<const ChainSpec> chain;
  std::shared_ptr<const CovariateMap> covariates;
  std::shared_ptr<const ErrorModel> errors;
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
};

/// Simulated data with y = X beta_star + eps and X[i,.] = f(Z_i).
/// Imported datasets may lack truth, eps, and provenance.
struct Dataset {
  StateSequence Z;
  Problem problem;
  Vector eps;
  std::optional<TruthSpec> truth;
  std::optional<Provenance> provenance;

  const TruthSpec& require_truth(const char* what) const;
};

Dataset generate_dataset(std::shared_ptr<const ChainSpec> chain,
                         std::shared_ptr<const CovariateMap> covariates,
                         std::shared_ptr<const ErrorModel> errors, const TruthSpec& truth,
                         std::size_t n, std::uint64_t seed, std::uint32_t replicate = 0);

}  // namespace ahr
