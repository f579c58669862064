#include <doctest.h>

#include <cmath>
#include <numbers>

#include "svlab/bounds.hpp"
#include "svlab/error.hpp"
#include "svlab/smallball.hpp"

using namespace svlab;

TEST_CASE("three-regime floors") {
  ConstantSet k;
  const auto p1 = floor_regime({5.0, 1.0, 0.25, 100, 0}, k);
  CHECK(p1.regime == Regime::eta_gt_2);
  CHECK(p1.floor == doctest::Approx(0.5));
  const auto edge = floor_regime({1.0, 1.0, 1.0, 100, 0}, k);
  CHECK(edge.floor == 1.0);
  CHECK(edge.degenerate_edge);
  const auto v = floor_regime({2.0, 1.0, std::exp(-2.0), 100, 0}, k);
  CHECK(v.regime == Regime::eta_eq_2);
  CHECK(v.floor == doctest::Approx(1.0 - std::exp(-1.0) * std::pow(2.0, 1.5)));
  CHECK(v.floor < 0.0);
  CHECK(v.vacuous);
  CHECK(floor_regime({2.0 + 1e-10, 1.0, 0.5, 10, 0}, k).regime == Regime::eta_eq_2);
  CHECK(floor_regime({2.0 + 1e-6, 1.0, 0.5, 10, 0}, k).regime == Regime::eta_gt_2);
  CHECK_THROWS_AS(floor_regime({5.0, 1.0, 0.0, 10, 0}, k), Error);
  CHECK_THROWS_AS(floor_regime({5.0, 1.0, 1.5, 10, 0}, k), Error);
  CHECK(!floor_regime({5.0, 1.0, 0.25, 10, 4}, k).precondition_ok);
  CHECK(floor_regime({5.0, 1.0, 0.25, 16, 4}, k).precondition_ok);
}

TEST_CASE("floors are monotone and probabilities clamp") {
  ConstantSet k;
  for (double eta : {0.5, 1.0, 2.0, 3.0, 7.0}) {
    double prev = 2.0;
    for (double beta = 0.01; beta <= 1.0; beta += 0.01) {
      const auto p = floor_regime({eta, 1.0, beta, 50, 0}, k);
      // the rate increases in beta on the whole grid for eta > 2, up to e^-3
      // for eta = 2 and up to 1/e for eta < 2
      const double rising_until = eta > 2.0 ? 1.0 : eta == 2.0 ? std::exp(-3.0) : std::exp(-1.0);
      if (beta <= rising_until) CHECK(p.floor <= prev + 1e-15);
      prev = p.floor;
      CHECK(p.prob_failure >= 0.0);
      CHECK(p.prob_failure <= 1.0);
    }
    double prev_prob = 1.0;
    for (std::size_t N : {1, 10, 100, 1000, 10000}) {
      const double pf = floor_regime({eta, 1.0, 0.3, N, 0}, k).prob_failure;
      CHECK(pf <= prev_prob);
      prev_prob = pf;
    }
  }
  CHECK(low_moment_exponent(2.0) == doctest::Approx(0.5));
  CHECK(low_moment_exponent(2.0 - 1e-9) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("basic floor") {
  const auto b = basic_floor(0.25, 0.25, 1.0 / 256.0, 100);
  CHECK(b.precondition_ok);
  CHECK(b.floor == doctest::Approx(1.0 / 128.0));
  CHECK(b.scale == FloorScale::lambda_squared);
  CHECK(b.lambda_floor() == doctest::Approx(std::sqrt(1.0 / 128.0)));
  CHECK(b.prob_failure == doctest::Approx(std::min(1.0, 2.0 * std::exp(-0.0625 * 100 / 8.0))));
  CHECK(!basic_floor(0.25, 0.25, 1.0 / 255.0, 100).precondition_ok);
  const auto z = basic_floor(0.25, 0.0, 0.01, 100);
  CHECK(!z.precondition_ok);
  CHECK(z.floor == 0.0);
  // unit-normalized Gaussian class: tau^2 Q(2 tau)/2 stays below 1 = inf ||f||^2
  for (double tau = 0.05; tau < 3.0; tau += 0.05)
    CHECK(basic_floor(tau, theoretical_tail(gaussian_spec(1), 2 * tau), 0.0, 10).floor <= 1.0);
}

TEST_CASE("isomorphic and general floors") {
  ConstantSet k;
  const auto iso = isomorphic_floor({1.0, 1.0, 1.0}, 10, 100, k);
  CHECK(iso.floor == 1.0);
  CHECK(iso.precondition_ok);
  CHECK(iso.prob_failure == doctest::Approx(std::exp(-100.0)));
  const auto rad = isomorphic_floor(analytic_band(rademacher_spec(5)), 5, 1000, k);
  CHECK(rad.floor == doctest::Approx(0.5));
  CHECK(!isomorphic_floor({1.0, 1.0, 2.0}, 10, 100, k).precondition_ok);
  CHECK(general_floor(1.0, 1.0, 1.0, 1, 1, k).floor == 1.0);
  CHECK(!general_floor(1.0, 1e-6, 1.0, 10, 100000, k).precondition_ok);
  // atomic mixture: Q(2 tau) <= 1 - p caps the floor at tau sqrt(1 - p)
  const auto spec = atomic_mixture_spec(3, 0.5);
  const double tau = 0.3;
  const auto g = general_floor(tau, theoretical_tail(spec, 2 * tau), 1.0, 3, 1000, k);
  CHECK(g.floor <= tau / std::sqrt(2.0));
  CHECK_THROWS_AS(isomorphic_floor({0.0, 1.0, 1.0}, 1, 1, k), Error);
}

TEST_CASE("constant set") {
  ConstantSet k;
  CHECK(k["c2"] == 1.0);
  CHECK(k.at("kappa").provenance == Provenance::default_value);
  CHECK_THROWS_AS(k.set("c2", -1.0), Error);
  CHECK_THROWS_AS(k.set("c99", 1.0), Error);
  auto s = k.to_section();
  s["c4"] = "0.75 calibrated";
  const auto back = ConstantSet::from_section(s);
  CHECK(back["c4"] == 0.75);
  CHECK(back.at("c4").provenance == Provenance::calibrated);
  CHECK_THROWS_AS(ConstantSet::from_section({{"c4", "abc"}}), Error);
  CHECK_THROWS_AS(ConstantSet::from_section({{"zeta", "1"}}), Error);
}

TEST_CASE("calibration regressions") {
  std::vector<DeficitPoint> rows;
  for (double b : {0.5, 0.25, 0.125, 0.0625, 0.03125}) rows.push_back({b, 2.0 * std::sqrt(b)});
  const auto c = calibrate_constant(rows, Regime::eta_gt_2, 5.0);
  CHECK(c.constant == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.exponent == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.half_width <= 1e-10);

  rows.clear();
  for (double b : {0.5, 0.25, 0.125, 0.0625, 0.03125}) rows.push_back({b, std::cbrt(b)});
  const auto d = calibrate_constant(rows, Regime::eta_gt_2, 5.0);
  // deficit = beta^{1/3} = (sqrt beta)^{2/3}
  CHECK(d.exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

  rows.push_back({0.01, -0.1});
  CHECK(calibrate_constant(rows, Regime::eta_gt_2, 5.0).excluded.size() == 1);
  CHECK_THROWS_AS(calibrate_constant({{0.5, 0.1}, {0.25, 0.1}, {0.1, -1.0}}, Regime::eta_gt_2, 5.0), Error);
  CHECK(calibrate_anchor({0.25, 0.6}, Regime::eta_gt_2, 5.0) == doctest::Approx(1.2));
  CHECK_THROWS_AS(calibrate_anchor({1.0, 0.6}, Regime::eta_lt_2, 1.0), Error);
}
