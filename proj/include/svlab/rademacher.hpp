#pragma once

#include <cstdint>

#include "svlab/distributions.hpp"

namespace svlab {

/// Estimate of R_N(F) for F = linear functionals on the unit sphere, where
/// the supremum collapses to E || (1/N) sum_j eps_j X_j ||_2.
struct RademacherEstimate {
  double value = 0.0;
  double stderr = 0.0;
  std::size_t draws = 0;
  bool exact = false;
};

enum class RademacherMode { automatic, exact, monte_carlo };

inline constexpr std::size_t kExactRademacherMaxN = 14;
inline constexpr std::size_t kDefaultRademacherDraws = 2000;

/// `raw` holds the draws X_j as rows. Automatic mode enumerates all 2^N sign
/// vectors when N <= 14 and samples `draws` sign vectors otherwise. Monte
/// Carlo draw d uses the stream derive_seed(seed, d).
RademacherEstimate rademacher_linear(const RowMatrix& raw, std::size_t draws = kDefaultRademacherDraws,
                                     std::uint64_t seed = 0, RademacherMode mode = RademacherMode::automatic);

/// Serial reference for the exact path: every sign vector summed from scratch.
double rademacher_exact_reference(const RowMatrix& raw);

/// A sqrt(n/N), the Jensen bound for classes with E<X,t>^2 <= A^2.
double rademacher_upper(double A, int n, std::size_t N);

}  // namespace svlab
