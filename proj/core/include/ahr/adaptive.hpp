#pragma once

#include <cstddef>

namespace ahr {

/// Inputs to the adaptive tau/lambda rules. gamma is the norm of the Markov
/// operator on mean-zero functions; delta the conditional moment exponent.
struct AdaptiveSpec {
  std::size_t n = 1;
  std::size_t d = 2;
  double delta = 1.0;
  double gamma = 0.0;
  double c_tau = 1.0;
  double c_lambda = 1.0;

  void validate() const;
};

/// min{delta, 1}: moments beyond the second do not improve the rate.
double effective_moment(double delta);

/// min{delta,1} / (1 + min{delta,1}), the error-rate exponent in n.
double rate_exponent(double delta);

/// (1 - gamma) / (1 + gamma). Throws InvalidInput unless 0 <= gamma < 1.
double effective_sample_factor(double gamma);

/// c_tau * (factor * n / log d)^(1 / (1 + min{delta,1})).
double select_tau(const AdaptiveSpec& spec);

/// c_lambda * (log d / (factor * n))^(min{delta,1} / (1 + min{delta,1})).
double select_lambda(const AdaptiveSpec& spec);

/// s * sqrt(log d / (factor * n)); must be small for the error rates to apply.
double theorem_precondition(const AdaptiveSpec& spec, std::size_t s);

struct ErrorBounds {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Deterministic l1/l2 error bounds (48 s lambda / kappa, 12 sqrt(s) lambda / kappa)
/// for an l1-penalized M-estimator whose loss gradient at the truth is at most
/// lambda/2 and whose Hessian has localized restricted eigenvalue kappa.
ErrorBounds prop1_bounds(std::size_t s, double lambda, double kappa);

}  // namespace ahr
