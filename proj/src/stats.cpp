#include "svlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "svlab/error.hpp"

namespace svlab::stats {

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::invalid_input, "quantile of an empty set");
  if (!(prob >= 0.0 && prob <= 1.0)) throw Error(ErrorCode::invalid_parameter, "quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::invalid_input, "mean of an empty set");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::invalid_input, "least squares needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::invalid_input, "least squares needs distinct abscissae");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    const double se = std::sqrt(rss / (n - 2.0) / sxx);
    boost::math::students_t dist(n - 2.0);
    fit.slope_half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  }
  return fit;
}

}  // namespace svlab::stats
