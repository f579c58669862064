#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "svlab/empirical_process.hpp"
#include "svlab/error.hpp"
#include "svlab/experiments.hpp"
#include "svlab/finite_oracle.hpp"
#include "svlab/rademacher.hpp"
#include "svlab/rng.hpp"
#include "svlab/spectrum.hpp"
#include "svlab/vc.hpp"

namespace svlab {

namespace {

using Status = VerifyCheck::Status;
using Outcome = std::pair<bool, std::string>;

double corrupted_phi(double u, double t) { return truncation_phi(u, 0.9 * t); }

Outcome check_phi_sandwich(const std::function<double(double, double)>& phi) {
  std::size_t bad = 0;
  for (int i = 1; i <= 100; ++i) {
    const double u = 0.05 * i;
    for (int k = 0; k < 100; ++k) {
      const double t = 0.11 * k;
      const double v = phi(u, t);
      const double upper = t >= u ? 1.0 : 0.0;
      const double lower = t >= 2.0 * u ? 1.0 : 0.0;
      if (!(v <= upper && v >= lower)) ++bad;
    }
  }
  return {bad == 0, fmt::format("{} of 10000 grid points outside the indicator sandwich", bad)};
}

Outcome check_phi_lipschitz(const std::function<double(double, double)>& phi) {
  std::size_t bad = 0;
  for (int i = 1; i <= 100; ++i) {
    const double u = 0.05 * i;
    for (int k = 0; k + 1 < 100; ++k) {
      const double t1 = 0.11 * k, t2 = 0.11 * (k + 1);
      if (std::abs(phi(u, t1) - phi(u, t2)) > std::abs(t1 - t2) / u * (1.0 + 1e-12)) ++bad;
    }
  }
  return {bad == 0, fmt::format("{} adjacent grid pairs violate the 1/u Lipschitz bound", bad)};
}

Outcome check_moment_identity(std::size_t inputs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs; ++i) {
    const auto len = 1 + static_cast<std::size_t>(rng() % 200);
    std::vector<double> v(len);
    const double scale = std::exp(6.0 * rng.uniform() - 3.0);
    for (auto& x : v) x = (i % 2 ? rng.normal() : rng.uniform_open0() * rng.sign() / rng.uniform_open0()) * scale;
    const auto r = second_moment_identity(v);
    worst = std::max(worst, r.lhs > 0 ? r.gap / r.lhs : r.gap);
  }
  return {worst <= 1e-12, fmt::format("worst relative gap {:.3g} over {} inputs", worst, inputs)};
}

Outcome check_spectral(std::uint64_t seed) {
  double worst_eig = 0.0, worst_gram = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto m = assemble(gaussian_spec(20), 80, derive_seed(seed, static_cast<std::uint64_t>(k)), 0);
    const auto g = gram(m);
    const auto ref = gram_reference(m);
    worst_gram = std::max(worst_gram, (g - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
    const auto e = lambda_extremes(m);
    const auto p = lambda_min_power(g);
    worst_eig = std::max(worst_eig, std::abs(std::sqrt(p.eigenvalue) - e.lambda_min));
  }
  return {worst_eig <= 1e-9 && worst_gram <= 1e-12,
          fmt::format("eigensolver vs inverse power {:.3g}; parallel vs serial Gram {:.3g}", worst_eig, worst_gram)};
}

Outcome check_oracle_battery(std::size_t count, std::uint64_t seed) {
  std::size_t applicable = 0, violated = 0, undecided = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto ri = random_instance(derive_seed(seed, i));
    const auto r = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
    if (r.hypothesis) ++applicable;
    if (r.verdict == OracleVerdict::violated) ++violated;
    if (r.verdict == OracleVerdict::undecided) ++undecided;
  }
  return {violated == 0 && undecided == 0,
          fmt::format("{} instances, {} applicable, {} violated, {} undecided", count, applicable, violated,
                      undecided)};
}

Outcome check_oracle_engines(std::uint64_t seed) {
  RandomInstanceOptions opt;
  opt.max_N = 5;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto ri = random_instance(derive_seed(seed, 1000 + i), opt);
    const auto brute = tiny_oracle(ri.instance, ri.tau, OracleEngine::brute);
    const auto grouped = tiny_oracle(ri.instance, ri.tau, OracleEngine::grouped);
    const auto [rad, prob] = tiny_oracle_reference(ri.instance, brute.floor);
    if (brute.rademacher != grouped.rademacher || brute.probability != grouped.probability ||
        brute.rademacher != rad || brute.probability != prob)
      ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} of 10 instances disagree across engines", mismatches)};
}

Outcome check_oracle_large_n() {
  FiniteInstance inst;
  inst.weights = {1, 1};
  inst.values = {{0, 2}};
  inst.N = 1400;
  const auto r = tiny_oracle(inst, mpq_class(1), OracleEngine::grouped);
  return {r.hypothesis && r.verdict == OracleVerdict::holds,
          fmt::format("N = 1400: R_N = {:.5g}, threshold {:.5g}, verdict {}", r.rademacher.get_d(),
                      mpq_class(r.tau * r.q2tau / 16).get_d(), to_string(r.verdict))};
}

Outcome check_rademacher(std::uint64_t seed) {
  double worst = 0.0;
  bool within = true;
  for (int k = 0; k < 4; ++k) {
    const int n = 2 + k, N = 9 + k;
    const auto raw = draw_samples(gaussian_spec(n), static_cast<std::size_t>(N), derive_seed(seed, 50 + k));
    const auto fast = rademacher_linear(raw, 1, 0, RademacherMode::exact);
    const double ref = rademacher_exact_reference(raw);
    worst = std::max(worst, std::abs(fast.value - ref) / ref);
    within = within && fast.value >= 0.0;
  }
  return {worst <= 1e-12 && within, fmt::format("parallel vs serial exact enumeration {:.3g}", worst)};
}

Outcome check_tail_integral() {
  const auto a = tail_integral(pareto_tail(1.0, 1.0), 2.0);
  const double eta = 3.0, L = 2.0, delta = 0.01;
  const double A = std::pow(L / (eta * delta), 1.0 / eta);
  const auto b = tail_integral(pareto_tail(L, eta), A);
  const bool ok = std::abs(a.value - 1.0) <= 1e-8 && std::abs(b.value - 2.0 * delta) <= 1e-8 * 2.0 * delta;
  return {ok, fmt::format("closed form 1 -> {:.12g}; tuned truncation 2 delta -> {:.12g}", a.value, b.value)};
}

Outcome check_vc(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> plane, line;
  for (int i = 0; i < 10; ++i) plane.push_back(Eigen::Vector2d(rng.normal(), rng.normal()));
  for (int i = 0; i < 6; ++i) line.push_back(Eigen::VectorXd::Constant(1, rng.normal()));
  const auto h = vc_bruteforce(plane, SetClass::halfspaces);
  const auto a = vc_bruteforce(line, SetClass::abs_threshold);
  return {h.shattered == 3 && a.shattered == 1,
          fmt::format("planar halfspaces {}, absolute thresholds on the line {}", h.shattered, a.shattered)};
}

}  // namespace

VerifyBudget verify_budget_from_string(std::string_view name) {
  if (name == "smoke") return VerifyBudget::smoke;
  if (name == "standard") return VerifyBudget::standard;
  if (name == "full") return VerifyBudget::full;
  throw Error(ErrorCode::invalid_parameter, fmt::format("unknown budget '{}' (smoke, standard, full)", name));
}

std::string_view to_string(VerifyBudget b) {
  switch (b) {
    case VerifyBudget::smoke: return "smoke";
    case VerifyBudget::standard: return "standard";
    case VerifyBudget::full: return "full";
  }
  return "?";
}

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (c.status == Status::fail) return false;
  return true;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"status", c.status == Status::pass ? "pass" : c.status == Status::fail ? "fail" : "skipped"},
                   {"detail", c.detail}});
  return {{"passed", passed()}, {"checks", arr}};
}

VerifyReport verify_suite(const VerifyOptions& opts) {
  VerifyReport report;
  const std::function<double(double, double)> phi =
      opts.mutate_phi ? std::function<double(double, double)>(corrupted_phi)
                      : std::function<double(double, double)>(truncation_phi);
  const bool smoke = opts.budget == VerifyBudget::smoke;
  auto run = [&](std::string name, VerifyBudget needed, const std::function<Outcome()>& body) {
    VerifyCheck c{std::move(name), Status::skipped, "skipped at this budget"};
    if (static_cast<int>(opts.budget) >= static_cast<int>(needed)) {
      try {
        auto [ok, detail] = body();
        c.status = ok ? Status::pass : Status::fail;
        c.detail = std::move(detail);
      } catch (const std::exception& e) {
        c.status = Status::fail;
        c.detail = fmt::format("error: {}", e.what());
      }
    }
    report.checks.push_back(std::move(c));
  };
  run("phi-sandwich", VerifyBudget::smoke, [&] { return check_phi_sandwich(phi); });
  run("phi-lipschitz", VerifyBudget::smoke, [&] { return check_phi_lipschitz(phi); });
  run("second-moment-identity", VerifyBudget::smoke,
      [&] { return check_moment_identity(smoke ? 100 : 1000, derive_seed(opts.seed, 1)); });
  run("spectral-agreement", VerifyBudget::smoke, [&] { return check_spectral(derive_seed(opts.seed, 2)); });
  run("tail-integral", VerifyBudget::smoke, [] { return check_tail_integral(); });
  run("oracle-engines", VerifyBudget::standard, [&] { return check_oracle_engines(derive_seed(opts.seed, 3)); });
  run("oracle-battery", VerifyBudget::standard, [&] { return check_oracle_battery(100, derive_seed(opts.seed, 4)); });
  run("rademacher-exact", VerifyBudget::standard, [&] { return check_rademacher(derive_seed(opts.seed, 5)); });
  run("vc-bruteforce", VerifyBudget::standard, [&] { return check_vc(derive_seed(opts.seed, 6)); });
  run("oracle-large-n", VerifyBudget::full, [] { return check_oracle_large_n(); });
  return report;
}

}  // namespace svlab
