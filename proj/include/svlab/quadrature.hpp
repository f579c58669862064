#pragma once

#include <functional>
#include <span>

namespace svlab::quad {

/// Integral over [a, b]; tolerates integrable endpoint singularities.
double finite(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

/// Integral over [a, inf) for integrands with algebraic or faster decay.
double half_line(const std::function<double(double)>& f, double a, double tol = 1e-13);

/// Integral over [0, inf) split at the given ascending breakpoints, so that
/// each piece is smooth.
double piecewise_half_line(const std::function<double(double)>& f,
                           std::span<const double> breakpoints, double tol = 1e-13);

}  // namespace svlab::quad
