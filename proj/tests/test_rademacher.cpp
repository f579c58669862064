#include <doctest.h>

#include <cmath>

#include "svlab/parallel.hpp"
#include "svlab/rademacher.hpp"

using namespace svlab;

TEST_CASE("enumeration examples") {
  RowMatrix one(1, 2);
  one << 1, 0;
  const auto r1 = rademacher_linear(one);
  CHECK(r1.exact);
  CHECK(r1.value == 1.0);
  CHECK(r1.stderr == 0.0);
  RowMatrix two(2, 2);
  two << 1, 0, 1, 0;
  CHECK(rademacher_linear(two).value == 0.5);
  CHECK(rademacher_exact_reference(two) == 0.5);
}

TEST_CASE("parallel enumeration equals the serial reference") {
  for (int N : {1, 5, 10, 14}) {
    const auto raw = draw_samples(gaussian_spec(3), static_cast<std::size_t>(N), 40 + N);
    const double ref = rademacher_exact_reference(raw);
    CHECK(rademacher_linear(raw, 1, 0, RademacherMode::exact).value == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("monte carlo agrees with exact enumeration") {
  int inside = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto raw = draw_samples(gaussian_spec(3), 10, 700 + s);
    const auto exact = rademacher_linear(raw, 1, 0, RademacherMode::exact);
    const auto mc = rademacher_linear(raw, 4000, s, RademacherMode::monte_carlo);
    CHECK(!mc.exact);
    CHECK(mc.draws == 4000);
    if (std::abs(mc.value - exact.value) <= 3.0 * mc.stderr) ++inside;
  }
  // 3-sigma coverage: at most one miss expected in 20
  CHECK(inside >= 19);
}

TEST_CASE("homogeneity and Jensen bound") {
  const auto raw = draw_samples(heavy_radial_spec(4, 3.0), 12, 5);
  const double v = rademacher_linear(raw).value;
  CHECK(rademacher_linear(RowMatrix(raw * -3.0)).value == doctest::Approx(3.0 * v).epsilon(1e-13));
  CHECK(rademacher_upper(1.0, 100, 1600) == doctest::Approx(0.25));
  CHECK(rademacher_upper(1.0, 7, 7) == 1.0);
  for (const auto& spec : {gaussian_spec(5), rademacher_spec(5), heavy_radial_spec(5, 2.0), uniform_cube_spec(5)}) {
    CAPTURE(to_string(spec.family));
    const auto r = rademacher_linear(draw_samples(spec, 400, 6), 2000, 7);
    CHECK(r.value <= rademacher_upper(1.0, 5, 400) + 3.0 * r.stderr);
  }
}

TEST_CASE("monte carlo is independent of the thread count") {
  const auto raw = draw_samples(gaussian_spec(4), 300, 8);
  parallel::set_threads(1);
  const auto a = rademacher_linear(raw, 1000, 9);
  parallel::set_threads(3);
  const auto b = rademacher_linear(raw, 1000, 9);
  parallel::set_threads(0);
  CHECK(a.value == b.value);
  CHECK(a.stderr == b.stderr);
}
