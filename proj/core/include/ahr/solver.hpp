#pragma once

#include "ahr/types.hpp"

#include <optional>
#include <vector>

namespace ahr {

/// Proximal-gradient settings. step_init <= 0 selects d / trace(X'X/n);
/// an unset acceleration flag enables Nesterov momentum when n*d >= 1e5.
struct SolverConfig {
  int max_iter = 100000;
  double tol = 1e-8;
  double step_init = 0.0;
  double backtrack_factor = 0.5;
  std::optional<bool> acceleration;

  void validate() const;
};

struct SolverResult {
  Vector beta_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after the starting point and after each accepted iterate.
  std::vector<double> objective_trace;
};

/// sign(v) * max(|v| - kappa, 0).
double soft_threshold(double v, double kappa);

/// Sup-norm violation of the subgradient optimality condition for
/// H_tau(beta) + lambda*||beta||_1. Zero exactly at global minimizers.
double kkt_residual(const Vector& beta, const Problem& problem, const HuberConfig& cfg);

/// ||grad H_tau(0)||_inf: the smallest lambda whose solution is beta = 0.
double lambda_max(const Problem& problem, double tau);

/// Minimizes H_tau(beta) + lambda*||beta||_1.
///
/// Runs proximal gradient with backtracking (optionally accelerated with an
/// objective-based restart, so the recorded objective never increases) until
/// the KKT residual drops to cfg.tol. When lambda >= lambda_max the exact zero
/// vector is returned without iterating. Hitting max_iter is not an error; the
/// result reports converged = false. Throws NumericalFailure if an iterate
/// becomes non-finite.
SolverResult fit(const Problem& problem, const HuberConfig& cfg, const SolverConfig& scfg = {},
                 const std::optional<Vector>& warm_start = std::nullopt);

namespace detail {
double kkt_from_gradient(const Vector& beta, const Vector& grad, double lambda);
}

}  // namespace ahr
