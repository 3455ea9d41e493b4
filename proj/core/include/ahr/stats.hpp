#pragma once

#include <vector>

namespace ahr::stats {

/// Median of the finite entries; NaN if none.
double median(std::vector<double> values);

/// Linear-interpolation quantile (R type 7) of the finite entries.
double quantile(std::vector<double> values, double p);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope; 0 for an exact fit or fewer than 3 points.
  double slope_stderr = 0.0;
};

/// Ordinary least squares y = intercept + slope x. Needs >= 2 distinct x.
LineFit ols(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ahr::stats
