#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace ahr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// tau value selecting the squared-loss limit of the Huber loss.
inline constexpr double kSquaredLoss = std::numeric_limits<double>::infinity();

/// Regression data: n x d design X and response y. All entries finite.
class Problem {
 public:
  Problem(Matrix X, Vector y);

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(X_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(X_.cols()); }

 private:
  Matrix X_;
  Vector y_;
};

/// Sparse ground truth; the support is derived from the nonzero entries.
class TruthSpec {
 public:
  explicit TruthSpec(Vector beta_star);

  const Vector& beta_star() const noexcept { return beta_star_; }
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  std::size_t sparsity() const noexcept { return support_.size(); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(beta_star_.size()); }
  bool in_support(std::size_t j) const;

 private:
  Vector beta_star_;
  std::vector<std::size_t> support_;
};

/// Robustification parameter tau (may be kSquaredLoss) and l1 penalty lambda.
struct HuberConfig {
  double tau = kSquaredLoss;
  double lambda = 0.0;

  void validate() const;
};

}  // namespace ahr
