#pragma once

#include <span>
#include <vector>

namespace svlab::stats {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double quantile(std::vector<double> values, double prob);
double median(std::vector<double> values);
double mean(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// 95% confidence half-width of the slope (Student t, n-2 dof); 0 for an exact fit.
  double slope_half_width = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x; needs >= 2 distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace svlab::stats
