#include "ahr/huber.hpp"

#include "ahr/error.hpp"
#include "ahr/summation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ahr {

Problem::Problem(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() < 1 || X_.cols() < 1) {
    throw InvalidInput("Problem: X must have at least one row and one column");
  }
  if (y_.size() != X_.rows()) {
    throw InvalidInput("Problem: y has length " + std::to_string(y_.size()) + " but X has " +
                       std::to_string(X_.rows()) + " rows");
  }
  if (!X_.allFinite() || !y_.allFinite()) {
    throw InvalidInput("Problem: X and y must be finite");
  }
}

TruthSpec::TruthSpec(Vector beta_star) : beta_star_(std::move(beta_star)) {
  if (beta_star_.size() < 1) throw InvalidInput("TruthSpec: beta_star must be nonempty");
  if (!beta_star_.allFinite()) throw InvalidInput("TruthSpec: beta_star must be finite");
  for (Eigen::Index j = 0; j < beta_star_.size(); ++j) {
    if (beta_star_[j] != 0.0) support_.push_back(static_cast<std::size_t>(j));
  }
}

bool TruthSpec::in_support(std::size_t j) const {
  return std::binary_search(support_.begin(), support_.end(), j);
}

void HuberConfig::validate() const {
  detail::check_tau(tau);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("HuberConfig: lambda must be finite and >= 0");
  }
}

namespace detail {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be > 0 (or +infinity)");
}

namespace {

void check_beta(const Vector& beta, const Problem& problem, const char* what) {
  if (static_cast<std::size_t>(beta.size()) != problem.d()) {
    throw InvalidInput(std::string(what) + ": vector has length " + std::to_string(beta.size()) +
                       ", expected d = " + std::to_string(problem.d()));
  }
  if (!beta.allFinite()) throw InvalidInput(std::string(what) + ": vector must be finite");
}

}  // namespace

Vector residuals(const Problem& problem, const Vector& beta) {
  return problem.y() - problem.X() * beta;
}

double loss_from_residuals(const Vector& r, double tau) {
  const auto n = static_cast<std::size_t>(r.size());
  double total;
  if (std::isinf(tau)) {
    total = accumulate_terms(n, [&](std::size_t i) { return 0.5 * r[i] * r[i]; });
  } else {
    total = accumulate_terms(n, [&](std::size_t i) {
      const double a = std::abs(r[i]);
      return a <= tau ? 0.5 * r[i] * r[i] : tau * a - 0.5 * tau * tau;
    });
  }
  return total / static_cast<double>(n);
}

Vector gradient_from_residuals(const Problem& problem, const Vector& r, double tau) {
  const auto n = problem.n();
  const Matrix& X = problem.X();
  Vector psi = r;
  if (!std::isinf(tau)) {
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = std::clamp(psi[i], -tau, tau);
  }
  const double scale = -1.0 / static_cast<double>(n);
  if (n < kCompensatedSumThreshold) {
    return scale * (X.transpose() * psi);
  }
  Vector g(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto col = X.col(j);
    g[j] = scale * accumulate_terms(n, [&](std::size_t i) { return psi[i] * col[i]; });
  }
  return g;
}

}  // namespace detail

double huber_value(double w, double tau) {
  detail::check_tau(tau);
  if (!std::isfinite(w)) throw InvalidInput("huber_value: w must be finite");
  const double a = std::abs(w);
  if (a <= tau) return 0.5 * w * w;
  return tau * a - 0.5 * tau * tau;
}

double truncate(double w, double t) {
  if (!(t > 0.0)) throw InvalidInput("truncate: threshold must be > 0");
  if (!std::isfinite(w)) throw InvalidInput("truncate: w must be finite");
  return std::clamp(w, -t, t);
}

double huber_deriv(double w, double tau) {
  detail::check_tau(tau);
  return truncate(w, tau);
}

double loss_value(const Vector& beta, const Problem& problem, double tau) {
  detail::check_tau(tau);
  detail::check_beta(beta, problem, "loss_value");
  return detail::loss_from_residuals(detail::residuals(problem, beta), tau);
}

Vector loss_gradient(const Vector& beta, const Problem& problem, double tau) {
  detail::check_tau(tau);
  detail::check_beta(beta, problem, "loss_gradient");
  return detail::gradient_from_residuals(problem, detail::residuals(problem, beta), tau);
}

double hessian_quadratic_form(const Vector& beta, const Problem& problem, double tau,
                              const Vector& u) {
  detail::check_tau(tau);
  detail::check_beta(beta, problem, "hessian_quadratic_form");
  detail::check_beta(u, problem, "hessian_quadratic_form");
  const Vector r = detail::residuals(problem, beta);
  const Vector xu = problem.X() * u;
  const double total = accumulate_terms(problem.n(), [&](std::size_t i) {
    return std::abs(r[i]) <= tau ? xu[i] * xu[i] : 0.0;
  });
  return total / static_cast<double>(problem.n());
}

}  // namespace ahr
