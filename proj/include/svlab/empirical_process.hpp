#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svlab/distributions.hpp"

namespace svlab {

/// phi_u(t): 0 below u, (t/u) - 1 on [u, 2u], 1 from 2u on.
double truncation_phi(double u, double t);

struct MomentIdentity {
  double lhs = 0.0;  // P_N f^2
  double rhs = 0.0;  // 2 int_0^inf u P_N{|f| > u} du
  double gap = 0.0;  // |lhs - rhs|
};

/// Both sides of P_N f^2 = 2 int_0^inf u P_N{|f| > u} du; the right side is
/// the layered integral evaluated piecewise over the sorted |values|.
MomentIdentity second_moment_identity(std::span<const double> values);

/// A scalar tail u -> P{|f| > u} together with its algebraic decay exponent
/// (infinity for faster-than-polynomial decay).
struct MarginalTail {
  std::function<double(double)> prob;
  double decay = 0.0;
  std::string label;
};

MarginalTail pareto_tail(double L, double eta);
MarginalTail gaussian_tail();
/// Coordinate marginal of a family with an analytic tail.
MarginalTail family_tail(const DistributionSpec& spec);

struct TailIntegral {
  double value = 0.0;
  bool divergent = false;
};

/// 2 int_A^inf u P{|f| > u} du by quadrature; divergent once decay <= 2.
TailIntegral tail_integral(const MarginalTail& tail, double a_trunc);

/// Truncation level and dyadic level bounds for the almost-isometric argument.
struct DyadicDecomposition {
  double eta = 0.0;
  double L = 1.0;
  double delta = 0.0;
  /// A = max{(L / (eta delta))^(1/eta), 1}.
  double a_trunc = 1.0;
  /// Smallest integer with 2^j0 >= A.
  int j0 = 0;
  /// sigma_bounds[j - 1] = L 2^(-j(2+eta)) bounds sigma_j^2 for j = 1..j0.
  std::vector<double> sigma_bounds;
};

DyadicDecomposition dyadic_decomposition(double eta, double L, double delta);

/// Reference probability P{|<X,t>| > u}.
using ReferenceTail = std::function<double(const Eigen::VectorXd& t, double u)>;

struct Reference {
  ReferenceTail tail;
  std::string kind;  // "analytic" or "empirical"
};

/// Closed-form reference; rotation-invariant families answer any direction,
/// others only coordinate directions.
Reference analytic_reference(const DistributionSpec& spec);
/// Fraction of an independent reference sample exceeding u.
Reference empirical_reference(RowMatrix reference_samples);

struct DeviationEstimate {
  double value = 0.0;
  std::size_t direction_index = 0;
  double u = 0.0;
  std::string reference_kind;
  /// Always true: a net and a u-grid are subsets of the level class, so the
  /// value can only underestimate the class supremum.
  bool lower_estimate = true;
};

/// Thresholds probed at dyadic level j: [2^j, 2^(j+1)] for j >= 1 and (0, 1]
/// for j = 0, `grid_points` equally spaced points.
std::vector<double> level_grid(int level, std::size_t grid_points);

/// max over the net and the level grid of |P_N{|<X,t>| > u} - P{|<X,t>| > u}|.
DeviationEstimate dyadic_sup_dev(const RowMatrix& samples, int level, const std::vector<Eigen::VectorXd>& net,
                                 const Reference& reference, std::size_t grid_points = 64);

/// kappa (sigma sqrt(d/N log(e/sigma)) + d/N log(e/sigma) + sigma sqrt(t/N) + t/N).
double vc_deviation_bound(double sigma, double d, double N, double t, double kappa);

}  // namespace svlab
