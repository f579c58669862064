#include "svlab/spectrum.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/parallel.hpp"

namespace svlab {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'V', 'L', 'A', 'B', 'M', 'A', 'T'};
constexpr std::size_t kRowsPerGramChunk = 256;

void check_finite(const SampleMatrix& m) {
  if (!m.values.allFinite()) throw Error(ErrorCode::invalid_input, "sample matrix has non-finite entries");
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 4);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw Error(ErrorCode::io_error, "truncated matrix file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  if (!is) throw Error(ErrorCode::io_error, "truncated matrix file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

std::string_view to_string(SpectralMethod method) {
  return method == SpectralMethod::sym_eig ? "sym-eig" : "inverse-power";
}

RowMatrix SampleMatrix::raw_rows() const {
  return values * std::sqrt(static_cast<double>(values.rows()));
}

SampleMatrix assemble(const DistributionSpec& spec, std::size_t N, std::uint64_t seed, std::uint64_t stream) {
  if (N < 1) throw Error(ErrorCode::invalid_parameter, "N must be >= 1");
  SampleMatrix m;
  m.values = draw_samples(spec, N, seed);
  m.values /= std::sqrt(static_cast<double>(N));
  m.seed = {seed, stream};
  return m;
}

SampleMatrix from_raw_rows(const RowMatrix& raw, SeedRecord seed) {
  if (raw.rows() < 1 || raw.cols() < 1) throw Error(ErrorCode::invalid_input, "empty sample");
  SampleMatrix m;
  m.values = raw / std::sqrt(static_cast<double>(raw.rows()));
  m.seed = seed;
  return m;
}

Eigen::MatrixXd gram(const SampleMatrix& m) {
  const auto N = static_cast<std::size_t>(m.rows());
  const auto n = m.cols();
  const std::size_t chunks =
      std::clamp<std::size_t>((N + kRowsPerGramChunk - 1) / kRowsPerGramChunk, 1, parallel::kReductionChunks);
  std::vector<Eigen::MatrixXd> partial(chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const auto r = parallel::chunk_range(N, chunks, static_cast<std::size_t>(c));
    auto& g = partial[static_cast<std::size_t>(c)];
    g = Eigen::MatrixXd::Zero(n, n);
    const auto block = m.values.middleRows(static_cast<Eigen::Index>(r.begin),
                                           static_cast<Eigen::Index>(r.end - r.begin));
    g.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  }
  Eigen::MatrixXd g = std::move(partial[0]);
  for (std::size_t c = 1; c < chunks; ++c) g += partial[c];
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

Eigen::MatrixXd gram_reference(const SampleMatrix& m) {
  const auto N = m.rows();
  const auto n = m.cols();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < N; ++k) s += m.values(k, i) * m.values(k, j);
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

SpectralResult lambda_extremes(const SampleMatrix& m) {
  check_finite(m);
  const Eigen::MatrixXd g = gram(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::no_convergence, "symmetric eigensolver failed");
  const auto& mu = solver.eigenvalues();
  const auto& v = solver.eigenvectors();
  const Eigen::Index last = mu.size() - 1;

  SpectralResult out;
  out.method = SpectralMethod::sym_eig;
  out.lambda_max = std::sqrt(std::max(0.0, mu(last)));
  out.lambda_min = m.rows() < m.cols() ? 0.0 : std::sqrt(std::max(0.0, mu(0)));
  out.residual = std::max((g * v.col(0) - mu(0) * v.col(0)).norm(),
                          (g * v.col(last) - mu(last) * v.col(last)).norm());
  return out;
}

PowerResult lambda_min_power(const Eigen::MatrixXd& g, const PowerOptions& opts) {
  const Eigen::Index n = g.rows();
  if (n == 0 || g.cols() != n) throw Error(ErrorCode::invalid_input, "gram matrix must be square and nonempty");
  if (!g.allFinite()) throw Error(ErrorCode::invalid_input, "gram matrix has non-finite entries");

  const Eigen::MatrixXd shifted = g - opts.shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  const double pivot_floor = 1e-14 * scale * static_cast<double>(n);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= pivot_floor)
    throw Error(ErrorCode::invalid_input, "gram - shift*I is singular");

  Rng rng(opts.start_seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  v.normalize();

  PowerResult out;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    v = ldlt.solve(v);
    v.normalize();
    const Eigen::VectorXd gv = g * v;
    const double mu = v.dot(gv);
    out.eigenvalue = mu;
    out.iterations = it;
    out.residual = (gv - mu * v).norm();
    if (out.residual <= opts.tol * scale ||
        (std::abs(mu - previous) <= opts.tol * std::max(std::abs(mu), 1e-300) && out.residual <= 1e-6 * scale))
      return out;
    previous = mu;
  }
  throw Error(ErrorCode::no_convergence,
              fmt::format("inverse power iteration: {} iterations, last estimate {:.17g}, residual {:.3e}",
                          out.iterations, out.eigenvalue, out.residual));
}

PowerResult lambda_min_power(const SampleMatrix& m, const PowerOptions& opts) {
  check_finite(m);
  return lambda_min_power(gram(m), opts);
}

void write_matrix(const std::filesystem::path& path, const SampleMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, fmt::format("cannot open '{}' for writing", path.string()));
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kMatrixFileVersion);
  put_u32(os, 0);
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  put_u64(os, m.seed.seed);
  put_u64(os, m.seed.stream);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(os, std::bit_cast<std::uint64_t>(m.values(i, j)));
  if (!os) throw Error(ErrorCode::io_error, fmt::format("write to '{}' failed", path.string()));
}

SampleMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io_error, fmt::format("cannot open '{}'", path.string()));
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw Error(ErrorCode::io_error, "not a sample matrix file (bad magic)");
  const auto version = get_u32(is);
  if (version != kMatrixFileVersion)
    throw Error(ErrorCode::io_error, fmt::format("unsupported matrix file version {}", version));
  get_u32(is);
  const auto N = get_u64(is);
  const auto n = get_u64(is);
  if (N == 0 || n == 0 || N > (1ULL << 32) || n > (1ULL << 20))
    throw Error(ErrorCode::io_error, "matrix file has implausible dimensions");
  SampleMatrix m;
  m.seed.seed = get_u64(is);
  m.seed.stream = get_u64(is);
  m.values.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.values(i, j) = std::bit_cast<double>(get_u64(is));
  return m;
}

}  // namespace svlab
