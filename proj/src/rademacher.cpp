#include "svlab/rademacher.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rng.hpp"

namespace svlab {

namespace {

// Exact average over sign vectors with eps_0 = +1 (the norm is even in eps).
// Within each chunk the signed sum is updated along a Gray code.
double exact_average(const RowMatrix& raw) {
  const auto N = static_cast<std::size_t>(raw.rows());
  const auto n = raw.cols();
  const std::size_t free_bits = N - 1;
  const std::uint64_t patterns = 1ULL << free_bits;
  const double total = parallel::chunked_sum<double>(patterns, [&](std::size_t b, std::size_t e) {
    if (b == e) return 0.0;
    // Sign of row j+1 is -1 when bit j of gray(k) is set.
    auto gray = [](std::uint64_t k) { return k ^ (k >> 1); };
    Eigen::VectorXd acc = raw.row(0).transpose();
    const std::uint64_t g0 = gray(b);
    for (std::size_t j = 0; j < free_bits; ++j)
      acc += ((g0 >> j) & 1ULL ? -1.0 : 1.0) * raw.row(static_cast<Eigen::Index>(j + 1)).transpose();
    double s = acc.norm();
    for (std::uint64_t k = b + 1; k < e; ++k) {
      const auto flipped = static_cast<std::size_t>(std::countr_zero(k));
      const bool now_negative = (gray(k) >> flipped) & 1ULL;
      acc += (now_negative ? -2.0 : 2.0) * raw.row(static_cast<Eigen::Index>(flipped + 1)).transpose();
      s += acc.norm();
    }
    (void)n;
    return s;
  });
  return total / static_cast<double>(patterns) / static_cast<double>(N);
}

}  // namespace

RademacherEstimate rademacher_linear(const RowMatrix& raw, std::size_t draws, std::uint64_t seed,
                                     RademacherMode mode) {
  const auto N = static_cast<std::size_t>(raw.rows());
  if (N == 0 || raw.cols() == 0) throw Error(ErrorCode::invalid_input, "empty sample");
  if (!raw.allFinite()) throw Error(ErrorCode::invalid_input, "sample has non-finite entries");
  const bool exact = mode == RademacherMode::exact || (mode == RademacherMode::automatic && N <= kExactRademacherMaxN);
  if (exact) {
    if (N > 30) throw Error(ErrorCode::budget_exceeded, fmt::format("exact enumeration over 2^{} sign vectors", N));
    return {exact_average(raw), 0.0, std::size_t{1} << N, true};
  }
  if (draws < 1) throw Error(ErrorCode::invalid_parameter, "draws must be >= 1");

  struct Moments {
    double s = 0.0, s2 = 0.0;
    Moments& operator+=(const Moments& o) {
      s += o.s;
      s2 += o.s2;
      return *this;
    }
  };
  const auto m = parallel::chunked_sum<Moments>(draws, [&](std::size_t b, std::size_t e) {
    Moments acc;
    Eigen::VectorXd sum(raw.cols());
    for (std::size_t d = b; d < e; ++d) {
      Rng rng(derive_seed(seed, d));
      sum.setZero();
      for (std::size_t j = 0; j < N; ++j) sum += rng.sign() * raw.row(static_cast<Eigen::Index>(j)).transpose();
      const double v = sum.norm() / static_cast<double>(N);
      acc.s += v;
      acc.s2 += v * v;
    }
    return acc;
  });
  const double k = static_cast<double>(draws);
  const double mean = m.s / k;
  const double var = draws > 1 ? std::max(0.0, (m.s2 - k * mean * mean) / (k - 1.0)) : 0.0;
  return {mean, std::sqrt(var / k), draws, false};
}

double rademacher_exact_reference(const RowMatrix& raw) {
  const auto N = static_cast<std::size_t>(raw.rows());
  const std::uint64_t patterns = 1ULL << N;
  double total = 0.0;
  for (std::uint64_t k = 0; k < patterns; ++k) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(raw.cols());
    for (std::size_t j = 0; j < N; ++j)
      sum += ((k >> j) & 1ULL ? -1.0 : 1.0) * raw.row(static_cast<Eigen::Index>(j)).transpose();
    total += sum.norm();
  }
  return total / static_cast<double>(patterns) / static_cast<double>(N);
}

double rademacher_upper(double A, int n, std::size_t N) {
  if (!(A > 0.0) || n < 1 || N < 1) throw Error(ErrorCode::invalid_parameter, "need A > 0, n >= 1, N >= 1");
  return A * std::sqrt(static_cast<double>(n) / static_cast<double>(N));
}

}  // namespace svlab
