#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "svlab/distributions.hpp"
#include "svlab/error.hpp"

using namespace svlab;

namespace {

Eigen::MatrixXd covariance(const RowMatrix& x) { return (x.transpose() * x) / static_cast<double>(x.rows()); }

double max_offset_from_identity(const RowMatrix& x) {
  const auto c = covariance(x);
  return (c - Eigen::MatrixXd::Identity(c.rows(), c.cols())).cwiseAbs().maxCoeff();
}

// Variance of the truncated Pareto scalar by Gauss-Kronrod on the layered
// integral 2 int u P{|xi| > u} du, split at the plateau edge.
double pareto_variance(double eta) {
  const double u0 = pareto_threshold(eta);
  const double q = 2.0 + eta;
  auto tail = [&](double u) { return u <= u0 ? 1.0 : std::pow(u / u0, -q); };
  auto f = [&](double u) { return 2.0 * u * tail(u); };
  const double head = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, u0);
  boost::math::quadrature::exp_sinh<double> es;
  return head + es.integrate(f, u0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("pareto threshold closed form and unit variance") {
  CHECK(pareto_threshold(2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(pareto_threshold(1.0) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-15));
  CHECK(pareto_threshold(1e9) == doctest::Approx(1.0).epsilon(1e-8));
  for (double eta : {0.5, 1.0, 2.0, 5.0, 10.0}) CHECK(std::abs(pareto_variance(eta) - 1.0) <= 1e-10);
  CHECK_THROWS_AS(pareto_threshold(0.0), Error);
  CHECK_THROWS_AS(pareto_threshold(-1.0), Error);
}

TEST_CASE("isotropy of every family") {
  const std::size_t M = 100000;
  const int n = 3;
  for (const auto& spec : {gaussian_spec(n), heavy_iid_spec(n, 4.0), heavy_radial_spec(n, 4.0), rademacher_spec(n),
                           atomic_mixture_spec(n, 0.3), uniform_cube_spec(n)}) {
    CAPTURE(to_string(spec.family));
    const auto x = draw_samples(spec, M, 11);
    CHECK(max_offset_from_identity(x) <= 0.02);
  }
}

TEST_CASE("isotropy at n = 20") {
  for (const auto& spec : {gaussian_spec(20), heavy_radial_spec(20, 4.0), atomic_mixture_spec(20, 0.5)}) {
    CAPTURE(to_string(spec.family));
    CHECK(max_offset_from_identity(draw_samples(spec, 100000, 5)) <= 0.02);
  }
}

TEST_CASE("rademacher vectors have +-1 coordinates") {
  const auto x = draw_samples(rademacher_spec(4), 1000, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) CHECK(std::abs(x(i, j)) == 1.0);
}

TEST_CASE("declared tails hold empirically") {
  const std::size_t M = 200000;
  for (const auto& spec : {heavy_radial_spec(10, 1.0), heavy_iid_spec(10, 1.0), heavy_radial_spec(10, 3.0)}) {
    CAPTURE(to_string(spec.family));
    const auto x = draw_samples(spec, M, 21);
    const double L = spec.tail->L;
    const double q = 2.0 + spec.tail->eta;
    for (double u : {1.0, 2.0, 4.0, 8.0}) {
      const double frac = static_cast<double>((x.col(0).array().abs() > u).count()) / static_cast<double>(M);
      const double bound = L / std::pow(u, q);
      const double se = std::sqrt(std::min(bound, 1.0) * (1.0 - std::min(bound, 1.0)) / static_cast<double>(M));
      CHECK(frac <= bound + 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("heavy-radial tail matches Monte Carlo") {
  const auto spec = heavy_radial_spec(10, 1.0);
  const std::size_t M = 400000;
  const auto x = draw_samples(spec, M, 77);
  for (double u : {0.3, 1.0, 2.0, 4.0}) {
    const double p = theoretical_tail(spec, u);
    const double frac = static_cast<double>((x.col(0).array().abs() >= u).count()) / static_cast<double>(M);
    CHECK(std::abs(frac - p) <= 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(M)) + 1e-9);
  }
}

TEST_CASE("heavy-radial tail constant is attained asymptotically") {
  const auto spec = heavy_radial_spec(64, 5.0);
  CHECK(spec.tail->L > 1.0);
  CHECK(theoretical_tail(spec, 1e6) * std::pow(1e6, 7.0) == doctest::Approx(spec.tail->L).epsilon(1e-6));
  // constants below 1 are raised to 1
  const auto light = heavy_radial_spec(10, 1.0);
  CHECK(light.tail->L == 1.0);
  CHECK(theoretical_tail(light, 1e6) * 1e18 < 1.0);
  for (double u : {0.5, 1.0, 2.0, 5.0, 50.0}) {
    CHECK(theoretical_tail(light, u) <= light.tail->L / std::pow(u, 3.0));
    CHECK(theoretical_tail(spec, u) <= spec.tail->L / std::pow(u, 7.0) * (1 + 1e-12));
  }
}

TEST_CASE("theoretical tail examples") {
  CHECK(theoretical_tail(gaussian_spec(3), 0.0) == 1.0);
  CHECK(theoretical_tail(gaussian_spec(3), 0.2) == doctest::Approx(0.8414805).epsilon(1e-7));
  const auto h = heavy_iid_spec(3, 2.0);
  CHECK(theoretical_tail(h, pareto_threshold(2.0)) == 1.0);
  const double t[3] = {0.6, 0.8, 0.0};
  CHECK_THROWS_AS(theoretical_tail(h, t, 1.0), Error);
  const double e2[3] = {0.0, -1.0, 0.0};
  CHECK(theoretical_tail(h, e2, 1.3) == doctest::Approx(theoretical_tail(h, 1.3)));
  CHECK(theoretical_tail(gaussian_spec(3), t, 0.2) == doctest::Approx(0.8414805).epsilon(1e-7));
}

TEST_CASE("analytic bands") {
  const auto g = analytic_band(gaussian_spec(5));
  CHECK(g.a == 1.0);
  CHECK(g.A == 1.0);
  CHECK(g.B == doctest::Approx(std::sqrt(std::numbers::pi / 2)).epsilon(1e-9));
  CHECK(marginal_band(rademacher_spec(4), 0).B == doctest::Approx(1.0));
  CHECK(analytic_band(rademacher_spec(4)).B == doctest::Approx(std::sqrt(2.0)));
  const auto atomic = analytic_band(atomic_mixture_spec(5, 0.5));
  CHECK(atomic.B == doctest::Approx(std::sqrt(2.0) * std::sqrt(std::numbers::pi / 2)).epsilon(1e-9));
  CHECK_THROWS_AS(analytic_band(heavy_iid_spec(3, 1.0)), Error);

  // Monte Carlo check of the mixture L2/L1 ratio
  const auto x = draw_samples(atomic_mixture_spec(2, 0.5), 400000, 9);
  const double l1 = x.col(0).cwiseAbs().mean();
  CHECK(1.0 / l1 == doctest::Approx(atomic.B).epsilon(0.01));
}

TEST_CASE("marginal moments") {
  CHECK(marginal_moment(gaussian_spec(2), 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-9));
  for (const auto& spec : {gaussian_spec(2), heavy_iid_spec(2, 3.0), heavy_radial_spec(7, 3.0), uniform_cube_spec(2),
                           atomic_mixture_spec(2, 0.4)}) {
    CAPTURE(to_string(spec.family));
    CHECK(marginal_moment(spec, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(std::isinf(marginal_moment(heavy_iid_spec(2, 1.0), 3.0)));
}

TEST_CASE("determinism and block streams") {
  const auto spec = heavy_radial_spec(5, 2.0);
  const auto a = draw_samples(spec, 3000, 42);
  const auto b = draw_samples(spec, 3000, 42);
  CHECK((a.array() == b.array()).all());
  const auto c = draw_samples(spec, 3000, 43);
  CHECK(!(a.array() == c.array()).all());
  // a prefix of the rows does not depend on the total count
  const auto d = draw_samples(spec, 1500, 42);
  CHECK((a.topRows(1500).array() == d.array()).all());
}

TEST_CASE("config section round trip and validation") {
  const auto spec = heavy_radial_spec(12, 1.5);
  const auto back = spec_from_section(spec_to_section(spec));
  CHECK(back.family == spec.family);
  CHECK(back.n == 12);
  CHECK(back.tail->eta == 1.5);
  CHECK(back.tail->L == doctest::Approx(spec.tail->L));
  CHECK_THROWS_AS(spec_from_section({{"family", "gaussian-iid"}, {"n", "3"}, {"colour", "red"}}), Error);
  CHECK_THROWS_AS(spec_from_section({{"family", "heavy-iid"}, {"n", "3"}}), Error);
  CHECK_THROWS_AS(spec_from_section({{"family", "atomic-mixture"}, {"n", "3"}, {"mixture_p", "1"}}), Error);
  CHECK_THROWS_AS(family_from_string("cauchy"), Error);
}
