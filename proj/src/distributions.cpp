#include "svlab/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/quadrature.hpp"

namespace svlab {

namespace {

constexpr std::size_t kSampleBlock = 1024;

double sqrt3() { return std::sqrt(3.0); }

bool is_heavy(Family f) { return f == Family::heavy_iid || f == Family::heavy_radial; }

double tail_exponent(const DistributionSpec& spec) { return 2.0 + spec.tail->eta; }

// Truncated Pareto: |xi| = u0 * U^(-1/q), U uniform on (0, 1].
double draw_pareto(double u0, double q, Rng& rng) {
  return rng.sign() * u0 * std::pow(rng.uniform_open0(), -1.0 / q);
}

// Law of G = sqrt(n) * theta_1 for theta uniform on the sphere: G^2/n ~ Beta(1/2, (n-1)/2).
// Returns E|G|^p restricted to |G| < x (x = +inf gives the full moment).
double radial_coordinate_partial_moment(int n, double p, double x) {
  if (n == 1) return x > 1.0 ? 1.0 : 0.0;
  const double a = 0.5;
  const double b = 0.5 * (n - 1);
  const double ratio = std::exp(std::lgamma(a + 0.5 * p) - std::lgamma(a + b + 0.5 * p) -
                                std::lgamma(a) + std::lgamma(a + b));
  const double full = std::pow(static_cast<double>(n), 0.5 * p) * ratio;
  const double z = x * x / n;
  if (z >= 1.0) return full;
  return full * boost::math::ibeta(a + 0.5 * p, b, z);
}

// P{|G| >= x}.
double radial_coordinate_tail(int n, double x) {
  if (n == 1) return x <= 1.0 ? 1.0 : 0.0;
  const double z = x * x / n;
  if (z >= 1.0) return 0.0;
  return boost::math::ibetac(0.5, 0.5 * (n - 1), z);
}

double coordinate_tail(const DistributionSpec& spec, double u) {
  if (u <= 0.0) return 1.0;
  switch (spec.family) {
    case Family::gaussian_iid:
      return std::erfc(u / std::numbers::sqrt2);
    case Family::heavy_iid: {
      const double u0 = pareto_threshold(spec.tail->eta);
      return u <= u0 ? 1.0 : std::pow(u / u0, -tail_exponent(spec));
    }
    case Family::heavy_radial: {
      // P{|rho G| >= u} = E min(1, (u0 |G| / u)^q), rho and G independent.
      const double u0 = pareto_threshold(spec.tail->eta);
      const double q = tail_exponent(spec);
      const double kink = u / u0;
      const double partial = radial_coordinate_partial_moment(spec.n, q, kink);
      // log form: near u = 0 the prefactor overflows while the partial moment underflows
      const double near = partial > 0.0 ? std::exp(q * std::log(u0 / u) + std::log(partial)) : 0.0;
      return std::min(1.0, near + radial_coordinate_tail(spec.n, kink));
    }
    case Family::rademacher_vec:
      return u <= 1.0 ? 1.0 : 0.0;
    case Family::atomic_mixture: {
      const double keep = 1.0 - spec.mixture_p;
      return keep * std::erfc(u * std::sqrt(keep) / std::numbers::sqrt2);
    }
    case Family::uniform_cube:
      return std::max(0.0, 1.0 - u / sqrt3());
  }
  return 0.0;
}

// Points where the coordinate tail is not smooth.
std::vector<double> tail_breakpoints(const DistributionSpec& spec) {
  switch (spec.family) {
    case Family::heavy_iid:
      return {pareto_threshold(spec.tail->eta)};
    case Family::heavy_radial: {
      const double u0 = pareto_threshold(spec.tail->eta);
      return {u0, u0 * std::sqrt(static_cast<double>(spec.n))};
    }
    case Family::rademacher_vec:
      return {1.0};
    case Family::uniform_cube:
      return {sqrt3()};
    default:
      return {};
  }
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw Error(ErrorCode::invalid_parameter, fmt::format("key '{}': not a number: '{}'", key, value));
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw Error(ErrorCode::invalid_parameter, fmt::format("key '{}': not an unsigned integer: '{}'", key, value));
  return out;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::gaussian_iid: return "gaussian-iid";
    case Family::heavy_iid: return "heavy-iid";
    case Family::heavy_radial: return "heavy-radial";
    case Family::rademacher_vec: return "rademacher-vec";
    case Family::atomic_mixture: return "atomic-mixture";
    case Family::uniform_cube: return "uniform-cube";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  for (auto f : {Family::gaussian_iid, Family::heavy_iid, Family::heavy_radial,
                 Family::rademacher_vec, Family::atomic_mixture, Family::uniform_cube}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::invalid_parameter, fmt::format("unknown family '{}'", name));
}

AnalyticFlags DistributionSpec::analytic() const {
  AnalyticFlags flags;
  flags.marginal_tail = true;
  flags.rotation_invariant = family == Family::gaussian_iid || family == Family::heavy_radial ||
                             family == Family::atomic_mixture ||
                             (family == Family::rademacher_vec && n == 1);
  flags.sphere_band = flags.rotation_invariant || family == Family::rademacher_vec;
  // heavy_iid is flagged "empirical-L": its coordinate constant is exact but a
  // uniform-over-sphere bound is only checked by Monte Carlo.
  flags.certified_tail = family == Family::heavy_radial;
  return flags;
}

void DistributionSpec::validate() const {
  if (n < 1) throw Error(ErrorCode::invalid_parameter, "dimension n must be >= 1");
  if (is_heavy(family)) {
    if (!tail) throw Error(ErrorCode::invalid_parameter, "heavy family requires a tail profile");
    if (!(tail->eta > 0.0)) throw Error(ErrorCode::invalid_parameter, "heavy family requires eta > 0");
    if (!(tail->L >= 1.0)) throw Error(ErrorCode::invalid_parameter, "tail constant L must be >= 1");
  } else if (tail && (tail->eta < 0.0 || tail->L < 1.0)) {
    throw Error(ErrorCode::invalid_parameter, "tail profile needs eta >= 0 and L >= 1");
  }
  if (family == Family::atomic_mixture && !(mixture_p >= 0.0 && mixture_p < 1.0))
    throw Error(ErrorCode::invalid_parameter, "mixture_p must lie in [0, 1)");
}

DistributionSpec gaussian_spec(int n) {
  DistributionSpec s;
  s.family = Family::gaussian_iid;
  s.n = n;
  return s;
}

DistributionSpec heavy_iid_spec(int n, double eta) {
  DistributionSpec s;
  s.family = Family::heavy_iid;
  s.n = n;
  s.tail = TailProfile{eta, 1.0};
  s.tail->L = computed_tail_constant(s);
  return s;
}

DistributionSpec heavy_radial_spec(int n, double eta) {
  DistributionSpec s;
  s.family = Family::heavy_radial;
  s.n = n;
  s.tail = TailProfile{eta, 1.0};
  s.tail->L = computed_tail_constant(s);
  return s;
}

DistributionSpec rademacher_spec(int n) {
  DistributionSpec s;
  s.family = Family::rademacher_vec;
  s.n = n;
  return s;
}

DistributionSpec atomic_mixture_spec(int n, double p) {
  DistributionSpec s;
  s.family = Family::atomic_mixture;
  s.n = n;
  s.mixture_p = p;
  return s;
}

DistributionSpec uniform_cube_spec(int n) {
  DistributionSpec s;
  s.family = Family::uniform_cube;
  s.n = n;
  return s;
}

double pareto_threshold(double eta) {
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_parameter, "pareto_threshold needs eta > 0");
  if (std::isinf(eta)) return 1.0;
  return std::sqrt(eta / (eta + 2.0));
}

double computed_tail_constant(const DistributionSpec& spec) {
  if (!spec.tail) throw Error(ErrorCode::unsupported_query, "family carries no tail profile");
  const double eta = spec.tail->eta;
  const double q = 2.0 + eta;
  const double u0 = pareto_threshold(eta);
  switch (spec.family) {
    case Family::heavy_iid:
      return std::max(1.0, std::pow(u0, q));
    case Family::heavy_radial:
      // sup_u u^q E min(1, (u0|G|/u)^q) = u0^q E|G|^q.
      return std::max(1.0, std::pow(u0, q) *
                               radial_coordinate_partial_moment(spec.n, q, std::numeric_limits<double>::infinity()));
    default:
      throw Error(ErrorCode::unsupported_query, "family carries no tail profile");
  }
}

void sample_vector(const DistributionSpec& spec, Rng& rng, std::span<double> out) {
  const auto n = static_cast<std::size_t>(spec.n);
  if (out.size() != n) throw Error(ErrorCode::invalid_input, "output span has the wrong length");
  switch (spec.family) {
    case Family::gaussian_iid:
      for (auto& x : out) x = rng.normal();
      break;
    case Family::heavy_iid: {
      const double u0 = pareto_threshold(spec.tail->eta);
      const double q = tail_exponent(spec);
      for (auto& x : out) x = draw_pareto(u0, q, rng);
      break;
    }
    case Family::heavy_radial: {
      double norm2 = 0.0;
      for (auto& x : out) {
        x = rng.normal();
        norm2 += x * x;
      }
      const double u0 = pareto_threshold(spec.tail->eta);
      const double radius = std::sqrt(static_cast<double>(n)) * std::abs(draw_pareto(u0, tail_exponent(spec), rng));
      const double scale = radius / std::sqrt(norm2);
      for (auto& x : out) x *= scale;
      break;
    }
    case Family::rademacher_vec:
      for (auto& x : out) x = rng.sign();
      break;
    case Family::atomic_mixture: {
      const bool atom = rng.uniform() < spec.mixture_p;
      const double scale = 1.0 / std::sqrt(1.0 - spec.mixture_p);
      for (auto& x : out) x = scale * rng.normal();
      if (atom) std::fill(out.begin(), out.end(), 0.0);
      break;
    }
    case Family::uniform_cube:
      for (auto& x : out) x = sqrt3() * (2.0 * rng.uniform() - 1.0);
      break;
  }
}

std::vector<double> sample_vector(const DistributionSpec& spec, Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(spec.n));
  sample_vector(spec, rng, out);
  return out;
}

RowMatrix draw_samples(const DistributionSpec& spec, std::size_t M, std::uint64_t seed) {
  spec.validate();
  RowMatrix out(static_cast<Eigen::Index>(M), spec.n);
  const std::size_t blocks = (M + kSampleBlock - 1) / kSampleBlock;
  const auto n = static_cast<std::size_t>(spec.n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const std::size_t begin = static_cast<std::size_t>(b) * kSampleBlock;
    const std::size_t end = std::min(M, begin + kSampleBlock);
    for (std::size_t i = begin; i < end; ++i)
      sample_vector(spec, rng, std::span<double>(out.data() + i * n, n));
  }
  return out;
}

double theoretical_tail(const DistributionSpec& spec, double u) {
  spec.validate();
  if (u < 0.0) throw Error(ErrorCode::invalid_parameter, "threshold u must be >= 0");
  return coordinate_tail(spec, u);
}

double theoretical_tail(const DistributionSpec& spec, std::span<const double> t, double u) {
  if (t.size() != static_cast<std::size_t>(spec.n))
    throw Error(ErrorCode::invalid_input, "direction has the wrong length");
  if (spec.analytic().rotation_invariant) return theoretical_tail(spec, u);
  int nonzero = 0;
  for (double x : t) {
    if (std::abs(std::abs(x) - 1.0) <= 1e-12) ++nonzero;
    else if (std::abs(x) > 1e-12) nonzero = 2;
  }
  if (nonzero != 1)
    throw Error(ErrorCode::unsupported_query,
                fmt::format("{} has an analytic tail only along coordinate directions", to_string(spec.family)));
  return theoretical_tail(spec, u);
}

double marginal_moment(const DistributionSpec& spec, double p) {
  spec.validate();
  if (!(p > 0.0)) throw Error(ErrorCode::invalid_parameter, "moment order must be > 0");
  if (is_heavy(spec.family) && p >= tail_exponent(spec)) return std::numeric_limits<double>::infinity();
  const auto breaks = tail_breakpoints(spec);
  if (spec.family == Family::rademacher_vec) return 1.0;
  if (spec.family == Family::uniform_cube)
    return quad::finite([&](double u) { return p * std::pow(u, p - 1.0) * coordinate_tail(spec, u); }, 0.0, sqrt3());
  return quad::piecewise_half_line(
      [&](double u) { return u == 0.0 ? (p == 1.0 ? 1.0 : 0.0) : p * std::pow(u, p - 1.0) * coordinate_tail(spec, u); },
      breaks);
}

CovarianceBand marginal_band(const DistributionSpec& spec, int coordinate) {
  spec.validate();
  if (coordinate < 0 || coordinate >= spec.n)
    throw Error(ErrorCode::invalid_parameter, "coordinate out of range");
  CovarianceBand band;
  band.B = std::sqrt(marginal_moment(spec, 2.0)) / marginal_moment(spec, 1.0);
  return band;
}

CovarianceBand analytic_band(const DistributionSpec& spec) {
  spec.validate();
  const auto flags = spec.analytic();
  if (!flags.sphere_band)
    throw Error(ErrorCode::unsupported_query,
                fmt::format("no sphere-wide L2/L1 constant for {}", to_string(spec.family)));
  if (flags.rotation_invariant) return marginal_band(spec, 0);
  // Rademacher sums: E|sum a_i eps_i| >= ||a||_2 / sqrt(2) with equality at
  // a = (e1 + e2)/sqrt(2) (Szarek's sharp Khintchine constant).
  CovarianceBand band;
  band.B = std::numbers::sqrt2;
  return band;
}

DistributionSpec spec_from_section(const ConfigSection& section) {
  DistributionSpec spec;
  std::optional<double> eta, L;
  bool have_family = false;
  for (const auto& [key, value] : section) {
    if (key == "family") {
      spec.family = family_from_string(value);
      have_family = true;
    } else if (key == "n") {
      spec.n = static_cast<int>(parse_u64(key, value));
    } else if (key == "eta") {
      eta = parse_double(key, value);
    } else if (key == "L") {
      L = parse_double(key, value);
    } else if (key == "mixture_p") {
      spec.mixture_p = parse_double(key, value);
    } else if (key == "seed") {
      spec.seed = parse_u64(key, value);
    } else {
      throw Error(ErrorCode::invalid_parameter, fmt::format("unknown distribution key '{}'", key));
    }
  }
  if (!have_family) throw Error(ErrorCode::invalid_parameter, "distribution section needs 'family'");
  if (is_heavy(spec.family)) {
    if (!eta) throw Error(ErrorCode::invalid_parameter, "heavy family needs 'eta'");
    spec.tail = TailProfile{*eta, 1.0};
    spec.tail->L = L ? *L : computed_tail_constant(spec);
  } else if (eta || L) {
    spec.tail = TailProfile{eta.value_or(0.0), L.value_or(1.0)};
  }
  spec.validate();
  return spec;
}

ConfigSection spec_to_section(const DistributionSpec& spec) {
  ConfigSection out;
  out["family"] = std::string(to_string(spec.family));
  out["n"] = std::to_string(spec.n);
  if (spec.tail) {
    out["eta"] = fmt::format("{}", spec.tail->eta);
    out["L"] = fmt::format("{}", spec.tail->L);
  }
  if (spec.family == Family::atomic_mixture) out["mixture_p"] = fmt::format("{}", spec.mixture_p);
  out["seed"] = std::to_string(spec.seed);
  return out;
}

}  // namespace svlab
