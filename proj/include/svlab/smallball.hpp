#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "svlab/distributions.hpp"

namespace svlab {

/// alpha = inf_t ||<X,t>||_L1, beta_p = sup_t ||<X,t>||_Lp / ||<X,t>||_L1.
struct MomentRatios {
  double alpha = 0.0;
  double beta_p = 1.0;
  double p = 2.0;
  /// Set when some searched direction has zero L1 norm (alpha reported as 0).
  bool degenerate = false;
};

struct DirectionEstimate {
  double estimate = 1.0;
  Eigen::VectorXd direction;
  /// Position of the direction in the evaluated search set.
  std::size_t index = 0;
};

struct SmallBallCurve {
  std::vector<double> u_grid;
  std::vector<double> upper;
  std::vector<double> lower;
  std::vector<bool> lower_vacuous;
  std::vector<std::size_t> argmin_index;
  /// Common direction pool; argmin_index points into it.
  std::vector<Eigen::VectorXd> directions;
  std::size_t sample_size = 0;

  double stderr_at(std::size_t k) const;
};

/// Fraction of rows with |<X_i, t>| >= u.
double q_direction(const RowMatrix& samples, std::span<const double> t, double u);
double q_direction(const RowMatrix& samples, const Eigen::VectorXd& t, double u);

/// Minimum of q_direction over a fixed set; ties go to the lowest index.
DirectionEstimate q_inf_over(const RowMatrix& samples, const std::vector<Eigen::VectorXd>& directions, double u);

/// The non-adaptive part of the search: floor(0.8 budget) uniform random
/// directions followed by the 2n signed coordinate directions. A budget of 1
/// yields one random direction and nothing else.
std::vector<Eigen::VectorXd> base_directions(int n, std::size_t budget, std::uint64_t seed);

/// Upper estimate of Q(u) = inf_t P{|<X,t>| >= u}: minimum over the base
/// directions, then (budget - floor(0.8 budget)) greedy refinement steps that
/// perturb the incumbent by Gaussian noise of geometrically decaying scale.
DirectionEstimate q_inf_search(const RowMatrix& samples, double u, std::size_t budget, std::uint64_t seed);

struct PaleyZygmundBound {
  double value = 0.0;
  bool vacuous = false;
};

/// (1 - u/alpha)^q (1/beta_p)^q with q = p/(p-1); vacuous (value 0) once u >= alpha.
PaleyZygmundBound paley_zygmund_lower(const MomentRatios& ratios, double u);

/// Direction search on empirical L1 / Lp norms. The beta search runs over a
/// superset of the alpha search set, so the alpha minimizer is always a
/// candidate for beta.
MomentRatios moment_ratios(const RowMatrix& samples, double p, std::size_t budget, std::uint64_t seed);

/// Closed/quadrature form for rotation-invariant families.
MomentRatios moment_ratios(const DistributionSpec& spec, double p);

struct CurveOptions {
  std::size_t budget = 200;
  std::uint64_t seed = 1;
  double p = 2.0;
};

/// Sandwich of Q over u_grid. Upper values are minima over one common
/// direction pool (base directions plus the refined incumbent found at each
/// grid point), hence nonincreasing in u.
SmallBallCurve small_ball_curve(const RowMatrix& samples, std::vector<double> u_grid,
                                const MomentRatios& ratios, const CurveOptions& opts = {});

/// Columns u,q_upper,q_lower,dir_index,stderr.
void write_curve_csv(std::ostream& os, const SmallBallCurve& curve);

}  // namespace svlab
