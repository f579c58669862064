#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svlab/rng.hpp"

namespace svlab {

/// Row-major dense matrix; the storage layout of sample blocks and of Γ.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Family {
  gaussian_iid,
  heavy_iid,
  heavy_radial,
  rademacher_vec,
  atomic_mixture,
  uniform_cube,
};

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// Marginal tail P{|<X,t>| > u} <= L / u^(2+eta).
struct TailProfile {
  double eta = 0.0;
  double L = 1.0;
};

/// Which quantities of a family have closed or quadrature forms.
struct AnalyticFlags {
  bool marginal_tail = false;       // coordinate-direction tail
  bool rotation_invariant = false;  // tail independent of direction
  bool sphere_band = false;         // sup-over-sphere L2/L1 constant
  bool certified_tail = false;      // declared TailProfile holds uniformly over the sphere
};

struct DistributionSpec {
  Family family = Family::gaussian_iid;
  int n = 1;
  /// Only meaningful for heavy_iid / heavy_radial.
  std::optional<TailProfile> tail;
  double mixture_p = 0.0;
  std::uint64_t seed = 0;

  AnalyticFlags analytic() const;
  /// Throws invalid_parameter on a malformed spec.
  void validate() const;
};

/// 0 < a <= ||<X,t>||_L2 <= A and ||<X,t>||_L2 <= B ||<X,t>||_L1.
struct CovarianceBand {
  double a = 1.0;
  double A = 1.0;
  double B = 1.0;
};

// --- construction helpers -------------------------------------------------

DistributionSpec gaussian_spec(int n);
/// Tail constant L is filled with the family's computed value.
DistributionSpec heavy_iid_spec(int n, double eta);
DistributionSpec heavy_radial_spec(int n, double eta);
DistributionSpec rademacher_spec(int n);
DistributionSpec atomic_mixture_spec(int n, double p);
DistributionSpec uniform_cube_spec(int n);

// --- operations -----------------------------------------------------------

/// Scale u0 of the unit-variance truncated Pareto law
/// P{|xi| > u} = min(1, (u/u0)^-(2+eta)); u0 = sqrt(eta / (eta + 2)).
double pareto_threshold(double eta);

/// Smallest L >= 1 for which the family's marginal tail is bounded by
/// L/u^(2+eta). For heavy_iid this is the coordinate-direction constant only.
double computed_tail_constant(const DistributionSpec& spec);

/// One draw of X.
void sample_vector(const DistributionSpec& spec, Rng& rng, std::span<double> out);
std::vector<double> sample_vector(const DistributionSpec& spec, Rng& rng);

/// M independent draws as rows. Rows are produced in fixed blocks, block b
/// using the stream derive_seed(seed, b), so the result does not depend on
/// the number of threads.
RowMatrix draw_samples(const DistributionSpec& spec, std::size_t M, std::uint64_t seed);

/// P{|<X,e1>| >= u}. Exact or closed-form special functions.
double theoretical_tail(const DistributionSpec& spec, double u);
/// P{|<X,t>| >= u} for a unit direction t; non-rotation-invariant families
/// only answer for signed coordinate directions.
double theoretical_tail(const DistributionSpec& spec, std::span<const double> t, double u);

/// E|<X,e1>|^p by quadrature of the coordinate tail.
double marginal_moment(const DistributionSpec& spec, double p);

/// Band over the whole sphere.
CovarianceBand analytic_band(const DistributionSpec& spec);
/// Band of the single coordinate marginal <X,e_coordinate>.
CovarianceBand marginal_band(const DistributionSpec& spec, int coordinate = 0);

// --- config section -------------------------------------------------------

using ConfigSection = std::map<std::string, std::string>;

/// Keys: family, n, eta, L, mixture_p, seed. Unknown keys are rejected.
DistributionSpec spec_from_section(const ConfigSection& section);
ConfigSection spec_to_section(const DistributionSpec& spec);

}  // namespace svlab
