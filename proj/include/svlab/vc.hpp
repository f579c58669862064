#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace svlab {

enum class SetClass {
  halfspaces,     // {x : <w,x> > b}
  abs_threshold,  // {x : |<t,x>| > u}, u > 0
};
std::string_view to_string(SetClass cls);

inline constexpr std::size_t kVcMaxPoints = 25;
inline constexpr int kVcMaxDimension = 3;

/// Whether the labelling (points[i] inside iff inside[i]) is cut out by some
/// member of the class. Exact: a linear feasibility problem with unit margins
/// decided by Fourier-Motzkin elimination; the abs-threshold class tries
/// every split of the inside points between the two opposite half-slabs.
bool realizable(std::span<const Eigen::VectorXd> points, const std::vector<bool>& inside, SetClass cls);

struct VcResult {
  /// Largest subset size shattered by the class.
  int shattered = 0;
  /// Indices of one shattered subset of that size.
  std::vector<std::size_t> witness;
  std::size_t dichotomies_checked = 0;
};

/// Brute force: subsets of growing size, every dichotomy tested with
/// realizable(). Shattering is hereditary, so the search stops at the first
/// size with no shattered subset. At most 25 points in dimension <= 3;
/// larger inputs throw budget_exceeded.
VcResult vc_bruteforce(const std::vector<Eigen::VectorXd>& points, SetClass cls);

}  // namespace svlab
