// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 0 unless --strict is given and some criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "svlab/config.hpp"
#include "svlab/empirical_process.hpp"
#include "svlab/experiments.hpp"
#include "svlab/finite_oracle.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rademacher.hpp"
#include "svlab/rng.hpp"
#include "svlab/smallball.hpp"
#include "svlab/stats.hpp"
#include "svlab/vc.hpp"

using namespace svlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path g_config_dir;

ExperimentConfig load(const std::string& name) {
  return ExperimentConfig::from_config(read_config(g_config_dir / name));
}

std::string csv_pair(const SweepResult& r) {
  std::ostringstream os;
  write_rows_csv(os, r);
  os << "--\n";
  write_summary_csv(os, r);
  return os.str();
}

Outcome bai_yin() {
  const auto t0 = Clock::now();
  const auto r = run_sweep(load("gaussian_bai_yin.ini"));
  const double secs = seconds_since(t0);
  const auto& s = r.summary.front();
  const bool ok = std::abs(s.median_lmin - 0.75) <= 0.05 && s.N == 1600 && r.trials.size() == 200 && secs <= 60;
  return {ok, fmt::format("n=100 N={} trials={} median lambda_min {:.4f} (1 - sqrt(beta) = 0.75), {:.1f} s", s.N,
                          r.trials.size(), s.median_lmin, secs)};
}

Outcome regime_one_exponent(SweepResult& keep) {
  const auto t0 = Clock::now();
  keep = run_sweep(load("heavy_radial_eta5.ini"));
  const double secs = seconds_since(t0);
  if (!keep.fit) return {false, "exponent fit unavailable"};
  const double e = keep.fit->exponent;
  return {e >= 0.35 && e <= 0.65 && secs <= 300,
          fmt::format("heavy-radial eta=5 n=64: deficit exponent {:.4f} +- {:.4f} over {} rows, {:.1f} s", e,
                      keep.fit->half_width, keep.fit->rows_used, secs)};
}

Outcome floor_coverage(const SweepResult& eta5) {
  std::vector<std::string> parts;
  std::size_t violations = 0;
  auto report = [&](const SweepResult& r) {
    std::string bad;
    for (const auto& s : r.summary)
      if (s.covered && !*s.covered)
        bad += fmt::format(" beta={:g}:p05={:.4f}<{:.4f}", s.beta, s.p05_lmin, s.floor.lambda_floor());
    violations += r.coverage_violations();
    parts.push_back(fmt::format("eta={:g} c={:.4g} violations={}{}", r.config.spec.tail->eta,
                                r.anchor_constant.value_or(std::nan("")), r.coverage_violations(), bad));
  };
  report(run_sweep(load("heavy_radial_eta1.ini")));
  report(run_sweep(load("heavy_radial_eta2.ini")));
  report(eta5);
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {violations == 0, detail};
}

Outcome exact_oracle() {
  const auto t0 = Clock::now();
  int applicable = 0, holds = 0, violated = 0, undecided = 0;
  const int battery = 100;
  for (int s = 0; s < battery; ++s) {
    const auto ri = random_instance(static_cast<std::uint64_t>(s) + 1);
    const auto r = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
    if (!r.hypothesis) continue;
    ++applicable;
    if (r.verdict == OracleVerdict::holds) ++holds;
    else if (r.verdict == OracleVerdict::violated) ++violated;
    else ++undecided;
  }
  // grouped supplement at large N
  const FiniteInstance big{{1, 1}, {{0, 2}}, 1, 1400};
  const auto g = tiny_oracle(big, mpq_class(1), OracleEngine::grouped);
  const double secs = seconds_since(t0);
  const bool ok = violated == 0 && undecided == 0 && g.verdict == OracleVerdict::holds && secs <= 120;
  return {ok, fmt::format("battery {} instances (N <= 8): {} satisfy the hypothesis, {} hold, {} violated; "
                          "grouped N=1400: R_N={:.6f} <= {:.6f}, P={:.6f} >= bound {:.6f} ({}); {:.1f} s",
                          battery, applicable, holds, violated, g.rademacher.get_d(),
                          mpq_class(g.tau * g.q2tau / 16).get_d(), g.probability.get_d(), g.bound,
                          to_string(g.verdict), secs)};
}

Outcome paley_zygmund() {
  const auto k = moment_ratios(gaussian_spec(3), 2.0);
  const double alpha = std::sqrt(2 / std::numbers::pi);
  bool ok = std::abs(k.alpha - alpha) <= 1e-8 && std::abs(k.beta_p - 1 / alpha) <= 1e-8;
  std::string detail = fmt::format("alpha {:.10f} beta_2 {:.10f};", k.alpha, k.beta_p);
  for (double u : {0.1, 0.2, 0.4}) {
    const double lower = paley_zygmund_lower(k, u).value;
    const double tail = theoretical_tail(gaussian_spec(3), u);
    const double closed_lower = std::pow(1 - u / alpha, 2) * alpha * alpha;
    const double closed_tail = std::erfc(u / std::numbers::sqrt2);
    ok = ok && lower <= tail && std::abs(lower - closed_lower) <= 1e-8 && std::abs(tail - closed_tail) <= 1e-8;
    detail += fmt::format(" u={:g}: {:.6f} <= {:.6f}", u, lower, tail);
  }
  return {ok, detail};
}

Outcome moment_identity() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(1 + rng() % 500);
    for (auto& x : v) x = rng.normal() * std::exp(3 * rng.normal());
    const auto r = second_moment_identity(v);
    worst = std::max(worst, r.lhs > 0 ? r.gap / r.lhs : r.gap);
  }
  return {worst <= 1e-12, fmt::format("1000 random inputs, worst relative gap {:.3g}", worst)};
}

Outcome rademacher_consistency() {
  const std::vector<std::function<DistributionSpec(int)>> families = {
      [](int n) { return gaussian_spec(n); }, [](int n) { return heavy_radial_spec(n, 5.0); },
      [](int n) { return rademacher_spec(n); }, [](int n) { return uniform_cube_spec(n); }};
  Rng pick(7);
  int over_bound = 0, mc_off = 0;
  double worst_ratio = 0.0, worst_z = 0.0;
  const int instances = 20, outer = 64;
  for (int i = 0; i < instances; ++i) {
    const int n = 1 + static_cast<int>(pick() % 10);
    const int N = 1 + static_cast<int>(pick() % 14);
    const auto spec = families[static_cast<std::size_t>(i) % families.size()](n);
    // R_N averages over the sample as well as the signs
    std::vector<double> cond;
    RowMatrix first;
    for (int o = 0; o < outer; ++o) {
      const auto raw = draw_samples(spec, static_cast<std::size_t>(N), substream_seed(99, i, o));
      if (o == 0) first = raw;
      cond.push_back(rademacher_linear(raw, 1, 0, RademacherMode::exact).value);
    }
    const double r = stats::mean(cond);
    const double bound = rademacher_upper(1.0, n, static_cast<std::size_t>(N));
    worst_ratio = std::max(worst_ratio, r / bound);
    if (r > bound) ++over_bound;
    const double exact = rademacher_linear(first, 1, 0, RademacherMode::exact).value;
    const auto mc = rademacher_linear(first, 4000, derive_seed(123, i), RademacherMode::monte_carlo);
    const double z = mc.stderr > 0 ? std::abs(mc.value - exact) / mc.stderr : (mc.value == exact ? 0.0 : 1e9);
    worst_z = std::max(worst_z, z);
    if (z > 3) ++mc_off;
  }
  return {over_bound == 0 && mc_off == 0,
          fmt::format("{} instances: max R_N / sqrt(n/N) = {:.4f}; Monte Carlo vs exact worst |z| = {:.2f}",
                      instances, worst_ratio, worst_z)};
}

Outcome phi_properties() {
  std::size_t sandwich = 0, lipschitz = 0;
  std::vector<double> ts(100);
  for (int k = 0; k < 100; ++k) ts[k] = 0.05 * k;
  for (int i = 1; i <= 100; ++i) {
    const double u = 0.025 * i;
    std::vector<double> v(100);
    for (int k = 0; k < 100; ++k) {
      v[k] = truncation_phi(u, ts[k]);
      if (!((ts[k] >= u ? 1.0 : 0.0) >= v[k] && v[k] >= (ts[k] >= 2 * u ? 1.0 : 0.0))) ++sandwich;
    }
    for (int a = 0; a < 100; ++a)
      for (int b = 0; b < 100; ++b)
        if (std::abs(v[a] - v[b]) > std::abs(ts[a] - ts[b]) / u * (1 + 1e-12)) ++lipschitz;
  }
  return {sandwich == 0 && lipschitz == 0,
          fmt::format("100x100 grid: {} sandwich failures, {} Lipschitz failures", sandwich, lipschitz)};
}

Outcome vc_dimension() {
  const auto t0 = Clock::now();
  Rng rng(31);
  std::vector<Eigen::VectorXd> plane, line;
  for (int i = 0; i < 12; ++i) plane.push_back(Eigen::Vector2d(rng.normal(), rng.normal()));
  for (int i = 0; i < 10; ++i) line.push_back(Eigen::VectorXd::Constant(1, rng.normal()));
  const auto h = vc_bruteforce(plane, SetClass::halfspaces);
  const auto a = vc_bruteforce(line, SetClass::abs_threshold);
  const double secs = seconds_since(t0);
  return {h.shattered == 3 && a.shattered == 1 && secs <= 10,
          fmt::format("planar halfspaces {} ({} dichotomies), abs-threshold on the line {}, {:.2f} s", h.shattered,
                      h.dichotomies_checked, a.shattered, secs)};
}

Outcome reproducibility() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"gaussian_bai_yin.ini", "heavy_radial_eta1.ini"}) {
    const auto cfg = load(name);
    parallel::set_threads(1);
    const auto one = csv_pair(run_sweep(cfg));
    parallel::set_threads(8);
    const auto eight = csv_pair(run_sweep(cfg));
    const bool same = one == eight;
    ok = ok && same;
    detail += fmt::format("{}{}: {} bytes {}", detail.empty() ? "" : "; ", name, one.size(),
                          same ? "identical" : "differ");
  }
  parallel::set_threads(1);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svlab acceptance run"};
  bool strict = false;
  std::string config_dir = SVLAB_CONFIG_DIR;
  app.add_flag("--strict", strict, "exit 1 if any criterion fails");
  app.add_option("--config-dir", config_dir, "directory holding the sweep configs");
  CLI11_PARSE(app, argc, argv);
  g_config_dir = config_dir;

  SweepResult eta5;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gaussian-bai-yin", bai_yin},
      {"regime-one-exponent", [&] { return regime_one_exponent(eta5); }},
      {"floor-coverage", [&] { return floor_coverage(eta5); }},
      {"exact-oracle", exact_oracle},
      {"paley-zygmund-sandwich", paley_zygmund},
      {"second-moment-identity", moment_identity},
      {"rademacher-consistency", rademacher_consistency},
      {"truncation-function", phi_properties},
      {"vc-bruteforce", vc_dimension},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    fmt::print("{} {:2} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return strict && failed > 0 ? 1 : 0;
}
