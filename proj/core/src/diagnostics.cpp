#include "ahr/diagnostics.hpp"

#include "ahr/adaptive.hpp"
#include "ahr/error.hpp"
#include "ahr/huber.hpp"
#include "ahr/parallel.hpp"
#include "ahr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ahr {

double grad_supnorm_at_truth(const Dataset& ds, double tau) {
  const TruthSpec& truth = ds.require_truth("grad_supnorm_at_truth");
  return loss_gradient(truth.beta_star(), ds.problem, tau).lpNorm<Eigen::Infinity>();
}

Prop3Terms prop3_terms(std::size_t n, std::size_t d, double gamma, double tau, double delta,
                       double sigma2, double v, double C) {
  if (n < 1 || d < 2) throw InvalidInput("prop3_bound: need n >= 1 and d >= 2");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("prop3_bound: tau must be finite and > 0");
  if (!(sigma2 >= 0.0) || !(v >= 0.0) || !(C >= 0.0)) {
    throw InvalidInput("prop3_bound: sigma2, v and C must be >= 0");
  }
  const double k = 1.0 / effective_sample_factor(gamma);
  const double m = effective_moment(delta);
  const double log_d_over_n = std::log(static_cast<double>(d)) / static_cast<double>(n);
  Prop3Terms terms;
  terms.variance = std::sqrt(k * 2.0 * sigma2 * v * std::pow(tau, 1.0 - m) * log_d_over_n);
  terms.deviation = k * 20.0 * tau * log_d_over_n;
  terms.bias = C * std::pow(tau, -m);
  return terms;
}

double prop3_bound(std::size_t n, std::size_t d, double gamma, double tau, double delta,
                   double sigma2, double v, double C) {
  return prop3_terms(n, d, gamma, tau, delta, sigma2, v, C).total();
}

// --- localized restricted eigenvalue ----------------------------------------

void LREQuery::validate() const {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("LREQuery: r must be finite and > 0");
  if (!(cone_constant >= 1.0)) throw InvalidInput("LREQuery: cone_constant must be >= 1");
  if (!coordinate_only && num_directions < 1) {
    throw InvalidInput("LREQuery: num_directions must be >= 1");
  }
}

namespace {

// Shrinks the off-support part until ||u_Sc||_1 <= c ||u_S||_1, then normalizes.
void project_to_cone(Vector& u, const std::vector<bool>& on_support, double c) {
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    (on_support[static_cast<std::size_t>(j)] ? on : off) += std::abs(u[j]);
  }
  if (off > c * on) {
    const double shrink = off > 0.0 ? c * on / off : 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (!on_support[static_cast<std::size_t>(j)]) u[j] *= shrink;
    }
  }
  const double norm = u.norm();
  if (norm > 0.0) u /= norm;
}

Vector sample_cone_direction(RandomStream& rng, const std::vector<std::size_t>& support,
                             const std::vector<std::size_t>& off_support,
                             const std::vector<bool>& on_support, double c, Eigen::Index d) {
  Vector u = Vector::Zero(d);
  for (std::size_t j : support) u[static_cast<Eigen::Index>(j)] = rng.normal();
  const std::size_t max_off = std::min(off_support.size(), 2 * support.size());
  const auto k = static_cast<std::size_t>(rng.below(max_off + 1));
  std::vector<std::size_t> pool = off_support;
  for (std::size_t t = 0; t < k; ++t) {
    const auto pick = t + static_cast<std::size_t>(rng.below(pool.size() - t));
    std::swap(pool[t], pool[pick]);
    u[static_cast<Eigen::Index>(pool[t])] = rng.normal();
  }
  project_to_cone(u, on_support, c);
  return u;
}

// (1/n) sum_i w_i (x_i'u)^2
double weighted_form(const Matrix& X, const Vector& w, const Vector& u) {
  const Vector xu = X * u;
  return (w.array() * xu.array().square()).sum() / static_cast<double>(X.rows());
}

// Projected descent on the sphere intersected with the cone; only accepts
// steps that decrease the quadratic form.
Vector refine_direction(const Matrix& X, const Vector& w, Vector u, const std::vector<bool>& on_support,
                        double c, std::size_t steps, double step0) {
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  double q = weighted_form(X, w, u);
  double step = step0;
  for (std::size_t s = 0; s < steps; ++s) {
    const Vector xu = X * u;
    const Vector hu = inv_n * (X.transpose() * (w.array() * xu.array()).matrix());
    Vector cand = u - step * (hu - q * u);
    project_to_cone(cand, on_support, c);
    if (cand.norm() == 0.0) break;
    const double qc = weighted_form(X, w, cand);
    if (qc < q) {
      u = std::move(cand);
      q = qc;
    } else {
      step *= 0.5;
    }
  }
  return u;
}

struct Interval {
  double position;
  double weight_sign;  // +1 entering, -1 leaving
  Eigen::Index row;
};

}  // namespace

double lre_estimate(const Dataset& ds, double tau, const LREQuery& query) {
  query.validate();
  detail::check_tau(tau);
  const TruthSpec& truth = ds.require_truth("lre_estimate");
  if (truth.support().empty()) throw InvalidInput("lre_estimate: support of beta_star is empty");
  const Matrix& X = ds.problem.X();
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<bool> on_support(static_cast<std::size_t>(d), false);
  for (std::size_t j : truth.support()) on_support[j] = true;
  std::vector<std::size_t> off_support;
  for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
    if (!on_support[j]) off_support.push_back(j);
  }

  const Vector r_star = detail::residuals(ds.problem, truth.beta_star());
  Vector w_star(n);
  for (Eigen::Index i = 0; i < n; ++i) w_star[i] = std::abs(r_star[i]) <= tau ? 1.0 : 0.0;

  // Directions.
  RandomStream rng(query.seed, StreamComponent::lre, 0);
  std::vector<Vector> directions;
  if (query.coordinate_only) {
    for (std::size_t j : truth.support()) directions.push_back(Vector::Unit(d, static_cast<Eigen::Index>(j)));
  } else {
    const Vector diag = inv_n * (w_star.asDiagonal() * X.cwiseAbs2()).colwise().sum().transpose();
    const double top = diag.maxCoeff();
    const double step0 = top > 0.0 ? 0.5 / top : 1.0;
    directions.reserve(query.num_directions);
    for (std::size_t k = 0; k < query.num_directions; ++k) {
      Vector u = sample_cone_direction(rng, truth.support(), off_support, on_support,
                                       query.cone_constant, d);
      directions.push_back(refine_direction(X, w_star, std::move(u), on_support, query.cone_constant,
                                            query.refine_steps, step0));
    }
  }
  Matrix XU(n, static_cast<Eigen::Index>(directions.size()));
  for (std::size_t k = 0; k < directions.size(); ++k) XU.col(static_cast<Eigen::Index>(k)) = X * directions[k];
  const Matrix Q = XU.array().square().matrix();

  // Value at beta* itself.
  double best = ((w_star.transpose() * Q).minCoeff()) * inv_n;

  // Segment centers beta* + rho v_k, rho in [0, r].
  for (std::size_t k = 0; k < query.num_centers; ++k) {
    Vector v = Vector::Zero(d);
    for (std::size_t j : truth.support()) v[static_cast<Eigen::Index>(j)] = rng.normal();
    for (std::size_t t = 0; t < std::min<std::size_t>(2 * truth.sparsity(), off_support.size()); ++t) {
      v[static_cast<Eigen::Index>(off_support[static_cast<std::size_t>(rng.below(off_support.size()))])] =
          rng.normal();
    }
    const double l1 = v.lpNorm<1>();
    if (l1 == 0.0) continue;
    v /= l1;
    const Vector c = X * v;

    // Residual i is within tau on rho in [lo_i, hi_i].
    Vector always(n);
    std::vector<Interval> events;
    events.reserve(static_cast<std::size_t>(2 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
      always[i] = 0.0;
      if (c[i] == 0.0) {
        always[i] = std::abs(r_star[i]) <= tau ? 1.0 : 0.0;
        continue;
      }
      double lo = (r_star[i] - tau) / c[i];
      double hi = (r_star[i] + tau) / c[i];
      if (lo > hi) std::swap(lo, hi);
      events.push_back({lo, +1.0, i});
      events.push_back({hi, -1.0, i});
    }
    std::sort(events.begin(), events.end(), [](const Interval& a, const Interval& b) {
      return a.position < b.position;
    });

    // Evaluate at rho = r directly, then sweep the open gaps between events.
    Vector w_end(n);
    const Vector r_end = r_star - query.r * c;
    for (Eigen::Index i = 0; i < n; ++i) w_end[i] = std::abs(r_end[i]) <= tau ? 1.0 : 0.0;
    best = std::min(best, (w_end.transpose() * Q).minCoeff() * inv_n);

    Eigen::RowVectorXd active = always.transpose() * Q;
    std::size_t e = 0;
    double left = -std::numeric_limits<double>::infinity();
    while (true) {
      const double right = e < events.size() ? events[e].position : std::numeric_limits<double>::infinity();
      // Gap (left, right) touches (0, r): the indicator sum is constant on it.
      if (right > 0.0 && left < query.r && right > left) {
        best = std::min(best, std::max(0.0, active.minCoeff()) * inv_n);
      }
      if (e >= events.size() || right >= query.r) break;
      // Apply every event at this position.
      const double pos = right;
      while (e < events.size() && events[e].position == pos) {
        active += events[e].weight_sign * Q.row(events[e].row);
        ++e;
      }
      left = pos;
    }
  }
  return best;
}

// --- covariance and tail sums -----------------------------------------------

double covariance_deviation(const Dataset& ds, const CovariateMap& cov, const ChainSpec& chain) {
  if (cov.time_varying()) throw Unsupported("covariance_deviation: time-varying covariate maps");
  if (cov.m() != chain.m) throw InvalidInput("covariance_deviation: state counts differ");
  if (cov.d() != ds.problem.d()) throw InvalidInput("covariance_deviation: dimension mismatch");
  if (ds.Z.size() != ds.problem.n()) throw InvalidInput("covariance_deviation: dataset must carry Z");
  // x_i = f(Z_i), so the empirical second moment is sum_a phat_a f(a) f(a)'.
  Vector weight = Vector::Zero(static_cast<Eigen::Index>(cov.m()));
  for (auto z : ds.Z) {
    if (z >= cov.m()) throw InvalidInput("covariance_deviation: state out of range");
    weight[z] += 1.0;
  }
  weight = weight / static_cast<double>(ds.Z.size()) - chain.pi;
  const Matrix& f = cov.table();
  const Matrix diff = f.transpose() * weight.asDiagonal() * f;
  return diff.cwiseAbs().maxCoeff();
}

double truncated_tail_sum(const Dataset& ds, const CovariateMap& cov, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("truncated_tail_sum: tau must be > 0");
  if (ds.eps.size() != static_cast<Eigen::Index>(ds.Z.size())) {
    throw InvalidInput("truncated_tail_sum: dataset must carry Z and eps");
  }
  const Vector& M = cov.envelope();
  double total = 0.0;
  for (std::size_t i = 0; i < ds.Z.size(); ++i) {
    if (ds.Z[i] >= static_cast<std::size_t>(M.size())) {
      throw InvalidInput("truncated_tail_sum: state out of range");
    }
    if (std::abs(ds.eps[static_cast<Eigen::Index>(i)]) > 0.5 * tau) {
      const double m = M[ds.Z[i]];
      total += m * m;
    }
  }
  return total / static_cast<double>(ds.Z.size());
}

double lemma2_bound(double sigma2, double tau, double delta, double v_delta) {
  if (!(tau > 0.0) || !(delta > 0.0)) throw InvalidInput("lemma2_bound: tau, delta must be > 0");
  return sigma2 * std::pow(2.0 / tau, 1.0 + delta) * v_delta;
}

// --- Bernstein check --------------------------------------------------------

double bernstein_bound(std::size_t n, double epsilon, double gamma, double variance, double t) {
  if (!(epsilon > 0.0)) throw InvalidInput("bernstein_bound: epsilon must be > 0");
  if (!(variance >= 0.0) || !(t > 0.0)) throw InvalidInput("bernstein_bound: need V >= 0, t > 0");
  const double k = 1.0 / effective_sample_factor(gamma);
  const double exponent =
      static_cast<double>(n) * epsilon * epsilon / (k * variance + 10.0 * t * epsilon);
  return std::min(1.0, 2.0 * std::exp(-exponent));
}

bool ConcentrationReport::any_flagged() const {
  return std::any_of(flagged.begin(), flagged.end(), [](bool f) { return f; });
}

ConcentrationReport bernstein_check(const ChainSpec& chain, const Vector& f, double b, std::size_t n,
                                    std::size_t replicas, const std::vector<double>& epsilon_grid,
                                    std::uint64_t seed, unsigned threads) {
  if (static_cast<std::size_t>(f.size()) != chain.m) {
    throw InvalidInput("bernstein_check: f must have one value per state");
  }
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidInput("bernstein_check: bound b must be finite and > 0");
  if (!f.allFinite() || f.cwiseAbs().maxCoeff() > b) {
    throw InvalidInput("bernstein_check: f is not bounded by b");
  }
  if (n < 1 || replicas < 1) throw InvalidInput("bernstein_check: n and replicas must be >= 1");
  for (double eps : epsilon_grid) {
    if (!(eps > 0.0)) throw InvalidInput("bernstein_check: epsilon grid must be positive");
  }

  ConcentrationReport report;
  report.epsilon_grid = epsilon_grid;
  report.replicas = replicas;
  report.n = n;
  report.gamma = chain.gamma;
  report.mean = chain.pi.dot(f);
  report.variance = chain.pi.dot((f.array() - report.mean).square().matrix());

  std::vector<double> deviation(replicas);
  parallel_for(replicas, threads, [&](std::size_t rep) {
    const StateSequence Z = simulate_chain(chain, n, seed, static_cast<std::uint32_t>(rep));
    double sum = 0.0;
    for (std::uint32_t z : Z) sum += f[z];
    deviation[rep] = std::abs(sum / static_cast<double>(n) - report.mean);
  });

  const auto R = static_cast<double>(replicas);
  for (double eps : epsilon_grid) {
    const auto exceed = std::count_if(deviation.begin(), deviation.end(), [&](double v) { return v > eps; });
    const double p = static_cast<double>(exceed) / R;
    const double bound = bernstein_bound(n, eps, chain.gamma, report.variance, b);
    const double se = std::sqrt(p * (1.0 - p) / R);
    report.empirical_tail.push_back(p);
    report.bernstein_bound.push_back(bound);
    report.standard_error.push_back(se);
    report.flagged.push_back(p > bound + 3.0 * se);
  }
  return report;
}

}  // namespace ahr
