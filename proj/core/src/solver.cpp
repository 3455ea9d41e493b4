#include "ahr/solver.hpp"

#include "ahr/error.hpp"
#include "ahr/huber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ahr {

void SolverConfig::validate() const {
  if (max_iter < 1) throw InvalidInput("SolverConfig: max_iter must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("SolverConfig: tol must be > 0");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw InvalidInput("SolverConfig: backtrack_factor must lie in (0, 1)");
  }
  if (!std::isfinite(step_init)) throw InvalidInput("SolverConfig: step_init must be finite");
}

double soft_threshold(double v, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidInput("soft_threshold: kappa must be >= 0");
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

namespace detail {

double kkt_from_gradient(const Vector& beta, const Vector& grad, double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double v;
    if (beta[j] > 0.0) {
      v = std::abs(grad[j] + lambda);
    } else if (beta[j] < 0.0) {
      v = std::abs(grad[j] - lambda);
    } else {
      v = std::max(std::abs(grad[j]) - lambda, 0.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace detail

double kkt_residual(const Vector& beta, const Problem& problem, const HuberConfig& cfg) {
  cfg.validate();
  const Vector g = loss_gradient(beta, problem, cfg.tau);
  return detail::kkt_from_gradient(beta, g, cfg.lambda);
}

double lambda_max(const Problem& problem, double tau) {
  detail::check_tau(tau);
  const Vector g = detail::gradient_from_residuals(problem, problem.y(), tau);
  return g.lpNorm<Eigen::Infinity>();
}

namespace {

// h(r + delta) - h(r) - h'(r) delta, evaluated without cancellation.
double huber_bregman(double r, double delta, double tau) {
  if (!std::isfinite(tau)) return 0.5 * delta * delta;
  if (delta < 0.0) {
    r = -r;
    delta = -delta;
  }
  // Along [r, r + delta] the derivative rises with slope 1 over a stretch of
  // length `ramp`, then stays flat for `flat`.
  const double ramp = std::max(0.0, std::min(delta, tau - r) - std::max(0.0, -tau - r));
  const double flat = ramp > 0.0 ? std::max(0.0, delta - std::max(tau - r, 0.0)) : 0.0;
  return ramp * (0.5 * ramp + flat);
}

struct Iterate {
  Vector beta;
  Vector r;     // y - X beta
  double loss;  // H_tau(beta)
  double objective;
};

class ProximalGradient {
 public:
  ProximalGradient(const Problem& problem, const HuberConfig& cfg, const SolverConfig& scfg)
      : problem_(problem), cfg_(cfg), scfg_(scfg) {}

  Iterate make_iterate(Vector beta) const {
    Iterate it;
    it.r = detail::residuals(problem_, beta);
    it.loss = detail::loss_from_residuals(it.r, cfg_.tau);
    it.objective = it.loss + cfg_.lambda * beta.lpNorm<1>();
    it.beta = std::move(beta);
    return it;
  }

  // One backtracked proximal step from `point` with gradient `grad`.
  Iterate prox_step(const Iterate& point, const Vector& grad, double& step) const {
    const double n = static_cast<double>(problem_.n());
    while (true) {
      Vector cand = point.beta - step * grad;
      const double kappa = step * cfg_.lambda;
      for (Eigen::Index j = 0; j < cand.size(); ++j) cand[j] = soft_threshold(cand[j], kappa);
      if (!cand.allFinite()) throw NumericalFailure("fit: non-finite iterate");

      Iterate next = make_iterate(std::move(cand));
      if (!std::isfinite(next.loss)) throw NumericalFailure("fit: non-finite objective");
      // Sufficient decrease in Bregman form: comparing losses directly drowns
      // in rounding once the iterates are close to the optimum.
      const Vector diff = next.beta - point.beta;
      const Vector delta = -(problem_.X() * diff);
      double divergence = 0.0;
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        divergence += huber_bregman(point.r[i], delta[i], cfg_.tau);
      }
      divergence /= n;
      if (divergence <= (1.0 + 1e-12) * diff.squaredNorm() / (2.0 * step)) return next;

      step *= scfg_.backtrack_factor;
      if (step < std::numeric_limits<double>::min()) {
        throw NumericalFailure("fit: backtracking step underflow");
      }
    }
  }

 private:
  const Problem& problem_;
  const HuberConfig& cfg_;
  const SolverConfig& scfg_;
};

double default_step(const Problem& problem) {
  const double trace = problem.X().squaredNorm() / static_cast<double>(problem.n());
  if (!(trace > 0.0)) return 1.0;
  return static_cast<double>(problem.d()) / trace;
}

}  // namespace

SolverResult fit(const Problem& problem, const HuberConfig& cfg, const SolverConfig& scfg,
                 const std::optional<Vector>& warm_start) {
  cfg.validate();
  scfg.validate();
  const auto d = static_cast<Eigen::Index>(problem.d());
  if (warm_start && warm_start->size() != d) {
    throw InvalidInput("fit: warm_start has length " + std::to_string(warm_start->size()) +
                       ", expected d = " + std::to_string(d));
  }
  if (warm_start && !warm_start->allFinite()) throw InvalidInput("fit: warm_start must be finite");

  const ProximalGradient pg(problem, cfg, scfg);
  SolverResult result;

  if (cfg.lambda >= lambda_max(problem, cfg.tau)) {
    Iterate zero = pg.make_iterate(Vector::Zero(d));
    const Vector g = detail::gradient_from_residuals(problem, zero.r, cfg.tau);
    result.kkt_residual = detail::kkt_from_gradient(zero.beta, g, cfg.lambda);
    result.objective = zero.objective;
    result.objective_trace.push_back(zero.objective);
    result.beta_hat = std::move(zero.beta);
    result.converged = result.kkt_residual <= scfg.tol;
    return result;
  }

  bool accelerate = scfg.acceleration.value_or(
      static_cast<double>(problem.n()) * static_cast<double>(problem.d()) >= 1e5);
  double step = scfg.step_init > 0.0 ? scfg.step_init : default_step(problem);
  const double step_cap = 1e6 * step;

  Iterate x = pg.make_iterate(warm_start ? *warm_start : Vector::Zero(d));
  Vector gx = detail::gradient_from_residuals(problem, x.r, cfg.tau);
  double kkt = detail::kkt_from_gradient(x.beta, gx, cfg.lambda);
  result.objective_trace.push_back(x.objective);

  Vector x_prev = x.beta;
  double momentum = 1.0;
  int iter = 0;
  while (kkt > scfg.tol && iter < scfg.max_iter) {
    ++iter;
    // Let the step recover after backtracks triggered by rounding near the optimum.
    if (iter > 1) step = std::min(step / scfg.backtrack_factor, step_cap);
    Iterate next;
    bool have_next = false;
    const double floor_slack = 1e-13 * std::max(1.0, std::abs(x.objective));
    if (accelerate && momentum > 1.0) {
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double w = (momentum - 1.0) / next_momentum;
      Iterate y = pg.make_iterate(x.beta + w * (x.beta - x_prev));
      const Vector gy = detail::gradient_from_residuals(problem, y.r, cfg.tau);
      next = pg.prox_step(y, gy, step);
      if (next.objective < x.objective - floor_slack) {
        momentum = next_momentum;
        have_next = true;
      } else if (next.objective <= x.objective + floor_slack) {
        // Objective is at rounding level; momentum only adds jitter from here on.
        accelerate = false;
      }
    }
    if (!have_next) {
      // Plain step; also the restart path when momentum overshot.
      next = pg.prox_step(x, gx, step);
      momentum = accelerate ? 0.5 * (1.0 + std::sqrt(5.0)) : 1.0;
      if (next.objective > x.objective + floor_slack) break;  // stagnated at rounding level
    }
    x_prev = std::move(x.beta);
    x = std::move(next);
    gx = detail::gradient_from_residuals(problem, x.r, cfg.tau);
    if (!gx.allFinite()) throw NumericalFailure("fit: non-finite gradient");
    kkt = detail::kkt_from_gradient(x.beta, gx, cfg.lambda);
    result.objective_trace.push_back(x.objective);
  }

  result.iterations = iter;
  result.kkt_residual = kkt;
  result.converged = kkt <= scfg.tol;
  result.objective = loss_value(x.beta, problem, cfg.tau) + cfg.lambda * x.beta.lpNorm<1>();
  result.beta_hat = std::move(x.beta);
  return result;
}

}  // namespace ahr
