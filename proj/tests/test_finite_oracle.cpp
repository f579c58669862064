#include <doctest.h>

#include <cmath>

#include "svlab/error.hpp"
#include "svlab/finite_oracle.hpp"
#include "svlab/parallel.hpp"

using namespace svlab;

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// E|eps_1 + ... + eps_k|
double abs_walk(int k) {
  double s = 0.0;
  for (int j = 0; j <= k; ++j) s += binom(k, j) * std::abs(2 * j - k);
  return s / std::ldexp(1.0, k);
}

}  // namespace

TEST_CASE("constant function") {
  const FiniteInstance inst{{1}, {{1}}, 1, 4};
  const auto r = tiny_oracle(inst, mpq_class(1, 2));
  CHECK(r.rademacher == mpq_class(3, 8));
  CHECK(r.q2tau == 1);
  CHECK(r.floor == mpq_class(1, 8));
  CHECK(r.probability == 1);
  CHECK(!r.hypothesis);
  CHECK(r.verdict == OracleVerdict::not_applicable);
}

TEST_CASE("two-atom indicator") {
  const FiniteInstance inst{{1, 1}, {{0, 1}}, 1, 6};
  for (auto engine : {OracleEngine::brute, OracleEngine::grouped}) {
    const auto r = tiny_oracle(inst, mpq_class(1, 2), engine);
    CHECK(r.q2tau == mpq_class(1, 2));
    CHECK(r.floor == mpq_class(1, 16));
    CHECK(r.probability == mpq_class(63, 64));
    double expect = 0.0;
    for (int k = 0; k <= 6; ++k) expect += binom(6, k) / 64.0 * abs_walk(k) / 6.0;
    CHECK(r.rademacher.get_d() == doctest::Approx(expect).epsilon(1e-14));
    CHECK(r.bound == doctest::Approx(1 - 2 * std::exp(-6.0 / 32)).epsilon(1e-14));
  }
}

TEST_CASE("engines and reference agree exactly") {
  RandomInstanceOptions opt;
  opt.max_N = 6;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto ri = random_instance(s, opt);
    const auto b = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
    const auto g = tiny_oracle(ri.instance, ri.tau, OracleEngine::grouped);
    const auto [rad, prob] = tiny_oracle_reference(ri.instance, b.floor);
    CHECK(b.rademacher == g.rademacher);
    CHECK(b.probability == g.probability);
    CHECK(b.rademacher == rad);
    CHECK(b.probability == prob);
    CHECK(b.q2tau > 0);
  }
}

TEST_CASE("oracle does not depend on the thread count") {
  const auto ri = random_instance(77);
  parallel::set_threads(1);
  const auto a = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
  parallel::set_threads(4);
  const auto b = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
  parallel::set_threads(0);
  CHECK(a.rademacher == b.rademacher);
  CHECK(a.probability == b.probability);
}

TEST_CASE("Rademacher hypothesis cannot hold for small N") {
  // R_N >= sqrt(2) tau Q / N by Khintchine, above tau Q / 16 whenever N <= 22
  RandomInstanceOptions opt;
  opt.max_N = 8;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto ri = random_instance(1000 + s, opt);
    CHECK(!tiny_oracle(ri.instance, ri.tau).hypothesis);
  }
  for (int N = 1; N <= 22; ++N) {
    const FiniteInstance inst{{1, 1}, {{0, 2}}, 1, N};
    CHECK(!tiny_oracle(inst, mpq_class(1), OracleEngine::grouped).hypothesis);
  }
}

TEST_CASE("large N instance satisfies the hypothesis and the bound") {
  const FiniteInstance inst{{1, 1}, {{0, 2}}, 1, 1400};
  const auto r = tiny_oracle(inst, mpq_class(1));
  CHECK(r.engine == OracleEngine::grouped);
  CHECK(r.hypothesis);
  CHECK(r.rademacher.get_d() == doctest::Approx(0.030155).epsilon(1e-4));
  CHECK(r.verdict == OracleVerdict::holds);
}

TEST_CASE("budgets and malformed input") {
  const FiniteInstance big{{1, 1}, {{0, 2}}, 1, 11};
  CHECK_THROWS_AS(tiny_oracle(big, mpq_class(1), OracleEngine::brute), Error);
  CHECK_THROWS_AS(tiny_oracle_reference(big, mpq_class(0)), Error);
  const FiniteInstance wide{{1, 1, 1, 1, 1, 1, 1}, {{0, 1, 2, 3, 4, 5, 6}}, 1, 3};
  CHECK_THROWS_AS(tiny_oracle(wide, mpq_class(1)), Error);
  const FiniteInstance ragged{{1, 1}, {{0}}, 1, 3};
  CHECK_THROWS_AS(tiny_oracle(ragged, mpq_class(1)), Error);
  CHECK_THROWS_AS(tiny_oracle(FiniteInstance{{1}, {{1}}, 1, 2}, mpq_class(0)), Error);
}

TEST_CASE("json report") {
  const FiniteInstance inst{{1, 1}, {{0, 1}}, 1, 6};
  const auto j = to_json(tiny_oracle(inst, mpq_class(1, 2)));
  CHECK(j.at("probability") == "63/64");
  CHECK(j.at("q_2tau") == "1/2");
  CHECK(j.at("verdict") == "not-applicable");
  CHECK(to_json(inst).at("N") == 6);
}
