#pragma once

#include "ahr/types.hpp"

namespace ahr {

// Scalar kernel. tau may be kSquaredLoss (+infinity).

/// w^2/2 on |w| <= tau, tau|w| - tau^2/2 beyond.
double huber_value(double w, double tau);

/// Clamp of w to [-t, t].
double truncate(double w, double t);

/// First derivative of huber_value in w; identical to truncate(w, tau),
/// including at the kink |w| == tau.
double huber_deriv(double w, double tau);

// Empirical objective H_tau(beta) = (1/n) sum_i huber_value(y_i - x_i'beta, tau)
// and its derivatives. Each validates dimensions and throws InvalidInput.

double loss_value(const Vector& beta, const Problem& problem, double tau);

/// -(1/n) sum_i truncate(r_i, tau) x_i with r = y - X beta.
Vector loss_gradient(const Vector& beta, const Problem& problem, double tau);

/// (1/n) sum_i (x_i'u)^2 1{|r_i| <= tau}: the Hessian quadratic form of H_tau
/// wherever no residual sits exactly on the kink.
double hessian_quadratic_form(const Vector& beta, const Problem& problem, double tau,
                              const Vector& u);

namespace detail {

// Unchecked residual-space helpers shared with the solver and diagnostics.
Vector residuals(const Problem& problem, const Vector& beta);
double loss_from_residuals(const Vector& r, double tau);
Vector gradient_from_residuals(const Problem& problem, const Vector& r, double tau);
void check_tau(double tau);

}  // namespace detail

}  // namespace ahr
