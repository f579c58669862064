#include "svlab/quadrature.hpp"

#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace svlab::quad {

double finite(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b, tol);
}

double half_line(const std::function<double(double)>& f, double a, double tol) {
  static thread_local boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, a, std::numeric_limits<double>::infinity(), tol);
}

double piecewise_half_line(const std::function<double(double)>& f,
                           std::span<const double> breakpoints, double tol) {
  double lo = 0.0;
  double total = 0.0;
  for (double b : breakpoints) {
    if (b <= lo) continue;
    total += finite(f, lo, b, tol);
    lo = b;
  }
  return total + half_line(f, lo, tol);
}

}  // namespace svlab::quad
