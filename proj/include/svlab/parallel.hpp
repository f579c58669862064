#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <omp.h>

namespace svlab::parallel {

/// Threads used by the OpenMP kernels (0 = runtime default).
void set_threads(int threads);
int threads();

/// Number of fixed work chunks used by reductions. Independent of the thread
/// count so that floating-point sums come out bit-identical for any team size.
inline constexpr std::size_t kReductionChunks = 64;

struct ChunkRange {
  std::size_t begin;
  std::size_t end;
};

inline ChunkRange chunk_range(std::size_t total, std::size_t chunks, std::size_t c) {
  const std::size_t base = total / chunks;
  const std::size_t extra = total % chunks;
  const std::size_t begin = c * base + (c < extra ? c : extra);
  return {begin, begin + base + (c < extra ? 1 : 0)};
}

/// Deterministic parallel sum: body(begin, end) returns the partial sum of a
/// contiguous index range; partials are combined in chunk order.
template <typename T, typename Body>
T chunked_sum(std::size_t total, Body&& body, T zero = T{}) {
  const std::size_t chunks = total < kReductionChunks ? (total == 0 ? 1 : total) : kReductionChunks;
  std::vector<T> partial(chunks, zero);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const auto r = chunk_range(total, chunks, static_cast<std::size_t>(c));
    partial[static_cast<std::size_t>(c)] = body(r.begin, r.end);
  }
  T acc = zero;
  for (auto& p : partial) acc += p;
  return acc;
}

}  // namespace svlab::parallel
