#include <doctest.h>

#include <cmath>
#include <numbers>

#include "svlab/empirical_process.hpp"
#include "svlab/error.hpp"
#include "svlab/smallball.hpp"
#include "svlab/stats.hpp"

using namespace svlab;

TEST_CASE("truncation function values") {
  CHECK(truncation_phi(1.0, 3.0) == 1.0);
  CHECK(truncation_phi(1.0, 1.5) == 0.5);
  CHECK(truncation_phi(1.0, 0.99) == 0.0);
  CHECK(truncation_phi(2.0, 4.0) == 1.0);
  CHECK(truncation_phi(2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(truncation_phi(0.0, 1.0), Error);
  CHECK_THROWS_AS(truncation_phi(-1.0, 1.0), Error);
}

TEST_CASE("indicator sandwich and Lipschitz bound on a grid") {
  for (int i = 1; i <= 100; ++i) {
    const double u = 0.03 * i;
    for (int k = 0; k < 100; ++k) {
      const double t = 0.07 * k;
      const double v = truncation_phi(u, t);
      CHECK((t >= u ? 1.0 : 0.0) >= v);
      CHECK(v >= (t >= 2 * u ? 1.0 : 0.0));
      for (int m = 0; m < 100; m += 7) {
        const double s = 0.07 * m;
        CHECK(std::abs(v - truncation_phi(u, s)) <= std::abs(t - s) / u * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("second moment identity") {
  const double ones[3] = {1, 1, 1};
  auto r = second_moment_identity(ones);
  CHECK(r.lhs == 1.0);
  CHECK(r.rhs == 1.0);
  const double pair[2] = {0, 2};
  r = second_moment_identity(pair);
  CHECK(r.lhs == 2.0);
  CHECK(r.rhs == 2.0);
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(1 + rng() % 300);
    for (auto& x : v) x = rng.normal() * std::exp(4 * rng.normal());
    r = second_moment_identity(v);
    CHECK(r.gap <= 1e-12 * r.lhs);
  }
}

TEST_CASE("tail integral closed forms") {
  const auto a = tail_integral(pareto_tail(1.0, 1.0), 2.0);
  CHECK(!a.divergent);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-8));
  // with A = (L/(eta delta))^{1/eta} the pure Pareto tail integrates to exactly 2 delta
  for (double eta : {0.5, 1.0, 3.0}) {
    for (double delta : {0.1, 0.01}) {
      const double L = 1.7;
      const auto d = dyadic_decomposition(eta, L, delta);
      if (d.a_trunc > 1.0) {
        const auto v = tail_integral(pareto_tail(L, eta), d.a_trunc);
        CHECK(v.value == doctest::Approx(2.0 * delta).epsilon(1e-8));
      }
    }
  }
  // Gaussian: 2 int_A^inf u P{|g| > u} du = (1 - A^2) P(A) + 2 A phi(A)
  for (double A : {0.5, 2.0, 5.0}) {
    const double P = std::erfc(A / std::numbers::sqrt2);
    const double phi = std::exp(-A * A / 2) / std::sqrt(2 * std::numbers::pi);
    const auto g = tail_integral(gaussian_tail(), A);
    CHECK(g.value == doctest::Approx((1 - A * A) * P + 2 * A * phi).epsilon(1e-8));
  }
  CHECK(tail_integral(gaussian_tail(), 5.0).value <= 1e-5);
  CHECK(tail_integral(pareto_tail(1.0, 0.0), 3.0).divergent);
  // family tail of the heavy-radial law
  const auto spec = heavy_radial_spec(6, 3.0);
  const auto h = tail_integral(family_tail(spec), 3.0);
  CHECK(h.value > 0.0);
  CHECK(h.value <= tail_integral(pareto_tail(spec.tail->L, 3.0), 3.0).value * (1 + 1e-9));
}

TEST_CASE("dyadic decomposition invariants") {
  for (double eta : {0.25, 1.0, 2.0, 5.0}) {
    for (double delta : {0.3, 0.05, 0.001}) {
      const double L = 2.0;
      const auto d = dyadic_decomposition(eta, L, delta);
      CHECK(d.a_trunc == doctest::Approx(std::max(std::pow(L / (eta * delta), 1 / eta), 1.0)));
      if (d.a_trunc > 1.0) {
        CHECK(std::ldexp(1.0, d.j0) >= d.a_trunc);
        CHECK(std::ldexp(1.0, d.j0 - 1) < d.a_trunc);
      }
      for (std::size_t j = 1; j < d.sigma_bounds.size(); ++j) CHECK(d.sigma_bounds[j] < d.sigma_bounds[j - 1]);
      const auto tail = pareto_tail(L, eta);
      for (std::size_t j = 0; j < d.sigma_bounds.size(); ++j) {
        const double u = std::ldexp(1.0, static_cast<int>(j + 1));
        CHECK(tail.prob(u) == doctest::Approx(d.sigma_bounds[j]).epsilon(1e-14));
      }
    }
  }
  CHECK_THROWS_AS(dyadic_decomposition(0.0, 1.0, 0.1), Error);
}

TEST_CASE("vc deviation bound arithmetic") {
  CHECK(vc_deviation_bound(1.0, 50, 50, 50, 1.0) == doctest::Approx(4.0));
  const double s = std::exp(-2.0);
  const double tiny = 1e-300;
  CHECK(vc_deviation_bound(s, 10, 10, tiny, 1.0) == doctest::Approx(s * std::sqrt(3.0) + 3.0));
  CHECK(vc_deviation_bound(1.0, 50, 50, 50, 2.5) == doctest::Approx(10.0));
  CHECK_THROWS_AS(vc_deviation_bound(1.5, 1, 1, 1, 1), Error);
  CHECK_THROWS_AS(vc_deviation_bound(0.0, 1, 1, 1, 1), Error);
}

TEST_CASE("dyadic deviation: identical samples give zero") {
  const auto x = draw_samples(gaussian_spec(3), 2000, 3);
  const auto net = base_directions(3, 20, 4);
  const auto d = dyadic_sup_dev(x, 0, net, empirical_reference(x));
  CHECK(d.value == 0.0);
  CHECK(d.lower_estimate);
  CHECK(d.reference_kind == "empirical");
}

TEST_CASE("dyadic deviation decays like one over root N") {
  const auto spec = gaussian_spec(3);
  const auto ref = analytic_reference(spec);
  const auto net = base_directions(3, 20, 5);
  std::vector<double> logN, logDev;
  for (std::size_t N : {500, 2000, 8000, 32000, 128000}) {
    std::vector<double> devs;
    for (std::uint64_t s = 0; s < 12; ++s)
      devs.push_back(dyadic_sup_dev(draw_samples(spec, N, 1000 * N + s), 0, net, ref).value);
    logN.push_back(std::log(static_cast<double>(N)));
    logDev.push_back(std::log(stats::median(devs)));
  }
  const auto fit = stats::least_squares(logN, logDev);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.3));  // +-0.15 on the slope
  CHECK(std::abs(fit.slope + 0.5) <= 0.15);
}

TEST_CASE("dyadic deviation at an empty level is the reference tail") {
  const auto spec = heavy_radial_spec(3, 2.0);
  const auto x = draw_samples(spec, 2000, 6);
  const double biggest = x.cwiseAbs().maxCoeff() * std::sqrt(3.0);
  int level = 1;
  while (std::ldexp(1.0, level) <= biggest) ++level;
  const std::vector<Eigen::VectorXd> net = {Eigen::Vector3d(1, 0, 0)};
  const auto d = dyadic_sup_dev(x, level, net, analytic_reference(spec));
  const double u = std::ldexp(1.0, level);
  CHECK(d.value == doctest::Approx(theoretical_tail(spec, u)).epsilon(1e-12));
  CHECK(d.value <= spec.tail->L * std::pow(u, -4.0));
}

TEST_CASE("vc deviation bound covers measured net deviations") {
  const int n = 3;
  const std::size_t N = 500;
  const auto spec = gaussian_spec(n);
  const auto ref = analytic_reference(spec);
  const auto net = base_directions(n, 30, 7);
  const int level = 1;
  const double sigma = std::sqrt(theoretical_tail(spec, 2.0));
  const double bound = vc_deviation_bound(sigma, 3.0 * n, static_cast<double>(N), std::log(2 / 0.05), 1.0);
  int covered = 0;
  for (std::uint64_t s = 0; s < 200; ++s)
    if (dyadic_sup_dev(draw_samples(spec, N, 9000 + s), level, net, ref).value <= bound) ++covered;
  CHECK(covered >= 190);
}
