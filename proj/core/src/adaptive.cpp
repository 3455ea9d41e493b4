#include "ahr/adaptive.hpp"

#include "ahr/error.hpp"

#include <algorithm>
#include <cmath>

namespace ahr {

void AdaptiveSpec::validate() const {
  if (n < 1) throw InvalidInput("AdaptiveSpec: n must be >= 1");
  if (d < 2) throw InvalidInput("AdaptiveSpec: d must be >= 2 so that log d > 0");
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidInput("AdaptiveSpec: delta must be finite and > 0");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("AdaptiveSpec: gamma must lie in [0, 1)");
  if (!(c_tau > 0.0) || !std::isfinite(c_tau)) throw InvalidInput("AdaptiveSpec: c_tau must be > 0");
  if (!(c_lambda > 0.0) || !std::isfinite(c_lambda)) {
    throw InvalidInput("AdaptiveSpec: c_lambda must be > 0");
  }
}

double effective_moment(double delta) {
  if (!(delta > 0.0)) throw InvalidInput("delta must be > 0");
  return std::min(delta, 1.0);
}

double rate_exponent(double delta) {
  const double m = effective_moment(delta);
  return m / (1.0 + m);
}

double effective_sample_factor(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InvalidInput("effective_sample_factor: gamma must lie in [0, 1) (non-zero spectral gap)");
  }
  return (1.0 - gamma) / (1.0 + gamma);
}

namespace {

// n_eff / log d, the base of both adaptive rules.
double effective_ratio(const AdaptiveSpec& spec) {
  return effective_sample_factor(spec.gamma) * static_cast<double>(spec.n) /
         std::log(static_cast<double>(spec.d));
}

}  // namespace

double select_tau(const AdaptiveSpec& spec) {
  spec.validate();
  const double m = effective_moment(spec.delta);
  return spec.c_tau * std::pow(effective_ratio(spec), 1.0 / (1.0 + m));
}

double select_lambda(const AdaptiveSpec& spec) {
  spec.validate();
  const double m = effective_moment(spec.delta);
  return spec.c_lambda * std::pow(1.0 / effective_ratio(spec), m / (1.0 + m));
}

double theorem_precondition(const AdaptiveSpec& spec, std::size_t s) {
  spec.validate();
  if (s < 1) throw InvalidInput("theorem_precondition: s must be >= 1");
  return static_cast<double>(s) * std::sqrt(1.0 / effective_ratio(spec));
}

ErrorBounds prop1_bounds(std::size_t s, double lambda, double kappa) {
  if (!(kappa > 0.0)) throw InvalidInput("prop1_bounds: kappa must be > 0");
  if (!(lambda >= 0.0)) throw InvalidInput("prop1_bounds: lambda must be >= 0");
  if (s < 1) throw InvalidInput("prop1_bounds: s must be >= 1");
  const auto sd = static_cast<double>(s);
  return {48.0 * sd * lambda / kappa, 12.0 * std::sqrt(sd) * lambda / kappa};
}

}  // namespace ahr
