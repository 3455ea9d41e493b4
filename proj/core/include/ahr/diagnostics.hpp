#pragma once

#include "ahr/markov.hpp"

#include <cstdint>
#include <vector>

namespace ahr {

/// ||grad H_tau(beta_star)||_inf. Throws InvalidInput without truth.
double grad_supnorm_at_truth(const Dataset& ds, double tau);

/// The three terms of the high-probability bound on ||grad H_tau(beta_star)||_inf
/// with m = min{delta, 1} and k = (1+gamma)/(1-gamma):
///   variance  = sqrt(k * 2 sigma2 v tau^(1-m) log d / n)
///   deviation = k * 20 tau log d / n
///   bias      = C tau^(-m)
/// C is an unknown constant; callers treat it as a calibration input.
struct Prop3Terms {
  double variance = 0.0;
  double deviation = 0.0;
  double bias = 0.0;

  double total() const noexcept { return variance + deviation + bias; }
};

Prop3Terms prop3_terms(std::size_t n, std::size_t d, double gamma, double tau, double delta,
                       double sigma2, double v, double C);
double prop3_bound(std::size_t n, std::size_t d, double gamma, double tau, double delta,
                   double sigma2, double v, double C);

/// Search settings for the localized restricted eigenvalue
///   inf { u' grad^2 H_tau(beta) u : ||u||_2 = 1, u in cone, ||beta - beta*||_1 <= r }
/// where cone = { ||u_{S^c}||_1 <= cone_constant * ||u_S||_1 }.
struct LREQuery {
  double r = 1.0;
  double cone_constant = 3.0;
  std::size_t num_directions = 1000;
  std::size_t num_centers = 10;
  std::size_t refine_steps = 10;
  /// Search only the coordinate directions e_j, j in S.
  bool coordinate_only = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Upper bound on the localized restricted eigenvalue.
///
/// Directions are sampled in the cone (random off-support pattern and signs)
/// and refined by projected descent on the sphere at beta*. Centers lie on
/// segments beta* + rho v_k, rho in [0, r], ||v_k||_1 = 1; the minimum over each
/// whole segment is found exactly by sweeping the points where residuals cross
/// +-tau. The candidate set grows with r, so the estimate is nonincreasing in r.
double lre_estimate(const Dataset& ds, double tau, const LREQuery& query);

/// max_{j,k} |(1/n) sum_i x_ij x_ik - Sigma[j,k]| with Sigma = sum_a pi_a f(a) f(a)'.
/// Throws Unsupported for time-varying maps.
double covariance_deviation(const Dataset& ds, const CovariateMap& cov, const ChainSpec& chain);

/// (1/n) sum_i M(Z_i)^2 1{|eps_i| > tau/2}.
double truncated_tail_sum(const Dataset& ds, const CovariateMap& cov, double tau);

/// sigma2 (2/tau)^(1+delta) v_delta: the population mean of truncated_tail_sum
/// is at most this.
double lemma2_bound(double sigma2, double tau, double delta, double v_delta);

/// min(1, 2 exp(-n eps^2 / (k V + 10 t eps))), k = (1+gamma)/(1-gamma): tail
/// bound for the deviation of an n-sample mean of a function of the chain
/// bounded by t with stationary variance V.
double bernstein_bound(std::size_t n, double epsilon, double gamma, double variance, double t);

struct ConcentrationReport {
  std::vector<double> epsilon_grid;
  std::vector<double> empirical_tail;
  std::vector<double> bernstein_bound;
  /// Binomial standard error of each empirical tail estimate.
  std::vector<double> standard_error;
  /// empirical > bound + 3 standard errors.
  std::vector<bool> flagged;
  std::size_t replicas = 0;
  std::size_t n = 0;
  double gamma = 0.0;
  double mean = 0.0;
  double variance = 0.0;

  bool any_flagged() const;
};

/// Monte Carlo tail probabilities P(|(1/n) sum f(Z_i) - E_pi f| > eps) over
/// `replicas` stationary runs (replicate k uses chain stream k), compared with
/// bernstein_bound at t = b. Throws InvalidInput if some |f(a)| > b.
ConcentrationReport bernstein_check(const ChainSpec& chain, const Vector& f, double b, std::size_t n,
                                    std::size_t replicas, const std::vector<double>& epsilon_grid,
                                    std::uint64_t seed, unsigned threads = 1);

}  // namespace ahr
