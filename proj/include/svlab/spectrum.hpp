#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include <Eigen/Dense>

#include "svlab/distributions.hpp"

namespace svlab {

/// Where a sample matrix came from: the stream seed and a caller-defined
/// stream index (trial number in sweeps).
struct SeedRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Γ: N rows X_i / sqrt(N), n columns.
struct SampleMatrix {
  RowMatrix values;
  SeedRecord seed;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// The raw draws X_i (rows times sqrt(N)).
  RowMatrix raw_rows() const;
};

enum class SpectralMethod { sym_eig, inverse_power };
std::string_view to_string(SpectralMethod method);

struct SpectralResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  SpectralMethod method = SpectralMethod::sym_eig;
  /// Largest eigen-residual ||G v - mu v|| of the two extreme Gram eigenpairs.
  double residual = 0.0;
};

/// Rows drawn by draw_samples(spec, N, seed), scaled by 1/sqrt(N).
SampleMatrix assemble(const DistributionSpec& spec, std::size_t N, std::uint64_t seed,
                      std::uint64_t stream = 0);

/// Γ from raw draws X_i (scales by 1/sqrt(N)).
SampleMatrix from_raw_rows(const RowMatrix& raw, SeedRecord seed = {});

/// Γ^T Γ. Rows are split into fixed chunks whose partial Gram matrices are
/// formed in parallel and summed in chunk order; the result is exactly
/// symmetric and independent of the thread count.
Eigen::MatrixXd gram(const SampleMatrix& m);

/// Plain triple loop, kept as the serial reference for gram().
Eigen::MatrixXd gram_reference(const SampleMatrix& m);

/// Extreme singular values via the symmetric eigenproblem of the Gram matrix.
/// N < n reports lambda_min = 0 exactly. Throws invalid_input on non-finite entries.
SpectralResult lambda_extremes(const SampleMatrix& m);

struct PowerOptions {
  double shift = 0.0;
  double tol = 1e-13;
  int max_iterations = 20000;
  std::uint64_t start_seed = 0x5eed;
};

struct PowerResult {
  double eigenvalue = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Inverse power iteration on (G - shift I); converges to the eigenvalue of G
/// closest to the shift, i.e. the smallest one when shift lies below it.
/// Throws invalid_input when G - shift I is singular and no_convergence when
/// the iteration cap is hit.
PowerResult lambda_min_power(const Eigen::MatrixXd& gram, const PowerOptions& opts = {});
PowerResult lambda_min_power(const SampleMatrix& m, const PowerOptions& opts = {});

// Binary file: "SVLABMAT", u32 version, u32 reserved, u64 N, u64 n,
// u64 seed, u64 stream, then N*n row-major f64. All little-endian.
inline constexpr std::uint32_t kMatrixFileVersion = 1;
void write_matrix(const std::filesystem::path& path, const SampleMatrix& m);
SampleMatrix read_matrix(const std::filesystem::path& path);

}  // namespace svlab
