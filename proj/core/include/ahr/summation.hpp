#pragma once

#include <cmath>
#include <cstddef>

namespace ahr {

/// Sample counts at or above this use compensated accumulation.
inline constexpr std::size_t kCompensatedSumThreshold = 10000;

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Sums term(0..n-1), switching to compensated accumulation for large n.
template <class Term>
double accumulate_terms(std::size_t n, Term&& term) {
  if (n >= kCompensatedSumThreshold) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(term(i));
    return acc.value();
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += term(i);
  return acc;
}

}  // namespace ahr
