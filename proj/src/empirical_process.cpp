#include "svlab/empirical_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/quadrature.hpp"

namespace svlab {

double truncation_phi(double u, double t) {
  if (!(u > 0.0)) throw Error(ErrorCode::invalid_parameter, "phi_u needs u > 0");
  if (t < 0.0) throw Error(ErrorCode::invalid_parameter, "phi_u is defined for t >= 0");
  if (t >= 2.0 * u) return 1.0;
  if (t >= u) return t / u - 1.0;
  return 0.0;
}

MomentIdentity second_moment_identity(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::invalid_input, "no values");
  std::vector<long double> mags;
  mags.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "non-finite value");
    mags.push_back(std::abs(static_cast<long double>(v)));
  }
  const auto N = static_cast<long double>(mags.size());

  long double lhs = 0.0L;
  for (auto m : mags) lhs += m * m;
  lhs /= N;

  // P_N{|f| > u} = (N - k)/N for u in [a_(k), a_(k+1)), so the layered
  // integral is sum_k (N - k)/N (a_(k+1)^2 - a_(k)^2) with a_(0) = 0.
  std::sort(mags.begin(), mags.end());
  long double rhs = 0.0L;
  long double prev = 0.0L;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    rhs += static_cast<long double>(mags.size() - k) * (mags[k] - prev) * (mags[k] + prev);
    prev = mags[k];
  }
  rhs /= N;

  MomentIdentity out;
  out.lhs = static_cast<double>(lhs);
  out.rhs = static_cast<double>(rhs);
  out.gap = static_cast<double>(std::abs(lhs - rhs));
  return out;
}

MarginalTail pareto_tail(double L, double eta) {
  if (!(L > 0.0)) throw Error(ErrorCode::invalid_parameter, "L must be > 0");
  if (eta < 0.0) throw Error(ErrorCode::invalid_parameter, "eta must be >= 0");
  const double q = 2.0 + eta;
  return {[L, q](double u) { return L * std::pow(u, -q); }, q, fmt::format("pareto(L={}, eta={})", L, eta)};
}

MarginalTail gaussian_tail() {
  return {[](double u) { return std::erfc(u / std::numbers::sqrt2); }, std::numeric_limits<double>::infinity(),
          "gaussian"};
}

MarginalTail family_tail(const DistributionSpec& spec) {
  spec.validate();
  const double decay = spec.tail && (spec.family == Family::heavy_iid || spec.family == Family::heavy_radial)
                           ? 2.0 + spec.tail->eta
                           : std::numeric_limits<double>::infinity();
  return {[spec](double u) { return theoretical_tail(spec, u); }, decay, std::string(to_string(spec.family))};
}

TailIntegral tail_integral(const MarginalTail& tail, double a_trunc) {
  if (!(a_trunc > 0.0)) throw Error(ErrorCode::invalid_parameter, "truncation level must be > 0");
  if (tail.decay <= 2.0) return {std::numeric_limits<double>::infinity(), true};
  const double value = quad::half_line([&](double u) { return 2.0 * u * tail.prob(u); }, a_trunc);
  return {value, false};
}

DyadicDecomposition dyadic_decomposition(double eta, double L, double delta) {
  if (!(eta > 0.0) || !(L >= 1.0) || !(delta > 0.0))
    throw Error(ErrorCode::invalid_parameter, "need eta > 0, L >= 1, delta > 0");
  DyadicDecomposition d;
  d.eta = eta;
  d.L = L;
  d.delta = delta;
  d.a_trunc = std::max(std::pow(L / (eta * delta), 1.0 / eta), 1.0);
  d.j0 = 0;
  while (std::ldexp(1.0, d.j0) < d.a_trunc) ++d.j0;
  for (int j = 1; j <= d.j0; ++j) d.sigma_bounds.push_back(L * std::pow(2.0, -j * (2.0 + eta)));
  return d;
}

Reference analytic_reference(const DistributionSpec& spec) {
  spec.validate();
  if (spec.family == Family::rademacher_vec && spec.n == 1)
    return {[](const Eigen::VectorXd&, double u) { return u < 1.0 ? 1.0 : 0.0; }, "analytic"};
  return {[spec](const Eigen::VectorXd& t, double u) {
            return theoretical_tail(spec, std::span<const double>(t.data(), static_cast<std::size_t>(t.size())), u);
          },
          "analytic"};
}

Reference empirical_reference(RowMatrix reference_samples) {
  if (reference_samples.rows() == 0) throw Error(ErrorCode::invalid_input, "empty reference sample");
  auto shared = std::make_shared<RowMatrix>(std::move(reference_samples));
  return {[shared](const Eigen::VectorXd& t, double u) {
            const Eigen::VectorXd proj = ((*shared) * t).cwiseAbs();
            return static_cast<double>((proj.array() > u).count()) / static_cast<double>(proj.size());
          },
          "empirical"};
}

std::vector<double> level_grid(int level, std::size_t grid_points) {
  if (level < 0) throw Error(ErrorCode::invalid_parameter, "level must be >= 0");
  if (grid_points < 2) throw Error(ErrorCode::invalid_parameter, "need at least 2 grid points");
  std::vector<double> grid(grid_points);
  const double k = static_cast<double>(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double s = static_cast<double>(i);
    grid[i] = level == 0 ? (s + 1.0) / k : std::ldexp(1.0, level) * (1.0 + s / (k - 1.0));
  }
  return grid;
}

DeviationEstimate dyadic_sup_dev(const RowMatrix& samples, int level, const std::vector<Eigen::VectorXd>& net,
                                 const Reference& reference, std::size_t grid_points) {
  if (samples.rows() == 0) throw Error(ErrorCode::invalid_input, "no samples");
  if (net.empty()) throw Error(ErrorCode::invalid_parameter, "empty direction net");
  const auto grid = level_grid(level, grid_points);
  const double M = static_cast<double>(samples.rows());

  std::vector<DeviationEstimate> per_dir(net.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t d = 0; d < static_cast<std::int64_t>(net.size()); ++d) {
    const auto& t = net[static_cast<std::size_t>(d)];
    const Eigen::VectorXd proj = (samples * t).cwiseAbs();
    std::vector<double> sorted(proj.data(), proj.data() + proj.size());
    std::sort(sorted.begin(), sorted.end());
    DeviationEstimate best;
    best.direction_index = static_cast<std::size_t>(d);
    best.value = -1.0;
    for (double u : grid) {
      const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), u));
      const double dev = std::abs(above / M - reference.tail(t, u));
      if (dev > best.value) {
        best.value = dev;
        best.u = u;
      }
    }
    per_dir[static_cast<std::size_t>(d)] = best;
  }
  DeviationEstimate out = per_dir.front();
  for (const auto& e : per_dir)
    if (e.value > out.value) out = e;
  out.reference_kind = reference.kind;
  out.lower_estimate = true;
  return out;
}

double vc_deviation_bound(double sigma, double d, double N, double t, double kappa) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw Error(ErrorCode::invalid_parameter, "sigma must lie in (0, 1]");
  if (!(d >= 1.0) || !(N >= 1.0) || !(t > 0.0) || !(kappa > 0.0))
    throw Error(ErrorCode::invalid_parameter, "need d >= 1, N >= 1, t > 0, kappa > 0");
  const double log_term = std::log(std::numbers::e / sigma);
  return kappa * (sigma * std::sqrt(d / N * log_term) + d / N * log_term + sigma * std::sqrt(t / N) + t / N);
}

}  // namespace svlab
