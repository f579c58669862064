#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "svlab/bounds.hpp"
#include "svlab/config.hpp"
#include "svlab/error.hpp"
#include "svlab/experiments.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rademacher.hpp"
#include "svlab/smallball.hpp"
#include "svlab/spectrum.hpp"

using namespace svlab;
using json = nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = 0;
  std::string out;
  std::string format = "csv";
  std::string config;
};

struct SpecArgs {
  std::string family;
  int n = 10;
  std::optional<double> eta;
  std::optional<double> L;
  double mixture_p = 0.0;
};

void add_spec_options(CLI::App* sub, SpecArgs& a) {
  sub->add_option("--family", a.family, "gaussian-iid, heavy-iid, heavy-radial, rademacher-vec, atomic-mixture, uniform-cube");
  sub->add_option("--n", a.n, "dimension")->check(CLI::PositiveNumber);
  sub->add_option("--eta", a.eta, "tail exponent surplus (heavy families)");
  sub->add_option("--L", a.L, "tail constant override");
  sub->add_option("--mixture-p", a.mixture_p, "atom weight (atomic-mixture)");
}

std::optional<ConfigFile> load_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return read_config(g.config);
}

DistributionSpec build_spec(const SpecArgs& a, const Globals& g) {
  if (a.family.empty()) {
    if (auto cfg = load_config(g); cfg && cfg->count("distribution")) return spec_from_section(cfg->at("distribution"));
    throw Error(ErrorCode::invalid_parameter, "give --family or a config with a [distribution] section");
  }
  ConfigSection s{{"family", a.family}, {"n", std::to_string(a.n)}};
  if (a.eta) s["eta"] = fmt::format("{}", *a.eta);
  if (a.L) s["L"] = fmt::format("{}", *a.L);
  if (a.mixture_p != 0.0) s["mixture_p"] = fmt::format("{}", a.mixture_p);
  return spec_from_section(s);
}

// Writes to --out when given, stdout otherwise.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", g.out));
  f << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path));
  f << text;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

json prediction_json(const BoundPrediction& p) {
  json c = json::object();
  for (const auto& [k, v] : p.constants) c[k] = v;
  return {{"regime", std::string(to_string(p.regime))},
          {"floor", p.floor},
          {"lambda_floor", p.lambda_floor()},
          {"scale", p.scale == FloorScale::lambda ? "lambda" : "lambda_squared"},
          {"prob_failure", p.prob_failure},
          {"constants", c},
          {"precondition_ok", p.precondition_ok},
          {"precondition_detail", p.precondition_detail},
          {"vacuous", p.vacuous}};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto slash = item.find('/');
    out.push_back(slash == std::string::npos ? std::stod(item)
                                             : std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smallest-singular-value laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)");
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", g.config, "config file");

  // sample
  auto* sample = app.add_subcommand("sample", "draw a sample matrix and write it to a file");
  SpecArgs sample_spec;
  std::size_t sample_N = 0;
  add_spec_options(sample, sample_spec);
  sample->add_option("--N", sample_N, "rows")->required();

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "extreme singular values of a matrix file");
  std::string spectrum_in;
  std::string spectrum_method = "sym-eig";
  spectrum->add_option("input", spectrum_in, "matrix file")->required()->check(CLI::ExistingFile);
  spectrum->add_option("--method", spectrum_method, "sym-eig, inverse-power or both")
      ->check(CLI::IsMember({"sym-eig", "inverse-power", "both"}));

  // smallball
  auto* smallball = app.add_subcommand("smallball", "small-ball curve of a family");
  SpecArgs sb_spec;
  std::size_t sb_samples = 20000, sb_budget = 200;
  double sb_p = 2.0;
  std::string sb_grid = "0.1,0.2,0.4,0.8";
  add_spec_options(smallball, sb_spec);
  smallball->add_option("--samples", sb_samples, "sample size");
  smallball->add_option("--budget", sb_budget, "directions per search");
  smallball->add_option("--p", sb_p, "moment for the Paley-Zygmund bound");
  smallball->add_option("--u", sb_grid, "comma-separated u grid");

  // rademacher
  auto* rademacher = app.add_subcommand("rademacher", "Rademacher complexity of the linear class");
  SpecArgs rad_spec;
  std::size_t rad_N = 10, rad_draws = kDefaultRademacherDraws;
  std::string rad_mode = "automatic";
  add_spec_options(rademacher, rad_spec);
  rademacher->add_option("--N", rad_N, "sample size")->check(CLI::PositiveNumber);
  rademacher->add_option("--draws", rad_draws, "Monte Carlo sign vectors");
  rademacher->add_option("--mode", rad_mode)->check(CLI::IsMember({"automatic", "exact", "monte-carlo"}));

  // bounds
  auto* bounds = app.add_subcommand("bounds", "evaluate a floor prediction");
  std::string b_regime = "three-regime";
  double b_eta = 5.0, b_L = 1.0, b_beta = 0.25, b_tau = 0.25, b_q = 0.5, b_rn = 0.0, b_A = 1.0, b_a = 1.0, b_B = 1.0;
  std::size_t b_N = 100;
  int b_n = 0;
  bounds->add_option("--regime", b_regime, "three-regime, basic, isomorphic or general")
      ->check(CLI::IsMember({"three-regime", "basic", "isomorphic", "general"}));
  bounds->add_option("--eta", b_eta);
  bounds->add_option("--L", b_L);
  bounds->add_option("--beta", b_beta);
  bounds->add_option("--N", b_N);
  bounds->add_option("--n", b_n);
  bounds->add_option("--tau", b_tau);
  bounds->add_option("--q2tau", b_q, "Q(2 tau)");
  bounds->add_option("--rn", b_rn, "R_N estimate");
  bounds->add_option("--a", b_a, "covariance band lower");
  bounds->add_option("--A", b_A, "covariance band upper");
  bounds->add_option("--B", b_B, "L2/L1 constant");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "beta sweep from a config file");
  std::string sweep_summary;

  sweep->add_option("--summary", sweep_summary, "summary CSV path");

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant and oracle suite");
  std::string v_budget = "standard";
  bool v_mutate = false;
  verify->add_option("--budget", v_budget)->check(CLI::IsMember({"smoke", "standard", "full"}));
  verify->add_flag("--mutate-phi", v_mutate, "corrupt the truncation function (the suite must fail)");

  // fit
  auto* fit = app.add_subcommand("fit", "fit the deficit exponent from a CSV");
  std::string fit_in;
  double fit_eta = 5.0;
  fit->add_option("input", fit_in, "summary or rows CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--eta", fit_eta, "tail exponent surplus selecting the rate variable (inf allowed)");

  CLI11_PARSE(app, argc, argv);

  try {
    parallel::set_threads(g.threads);
    const bool as_json = g.format == "json";

    if (*sample) {
      if (g.out.empty()) throw Error(ErrorCode::invalid_parameter, "sample needs --out");
      const auto spec = build_spec(sample_spec, g);
      const auto m = assemble(spec, sample_N, g.seed, 0);
      write_matrix(g.out, m);
      std::cerr << fmt::format("wrote {} x {} matrix to {}\n", m.rows(), m.cols(), g.out);
    } else if (*spectrum) {
      const auto m = read_matrix(spectrum_in);
      json j = {{"N", m.rows()}, {"n", m.cols()}, {"seed", m.seed.seed}, {"stream", m.seed.stream}};
      std::string csv = "method,lambda_min,lambda_max,residual,iterations\n";
      if (spectrum_method != "inverse-power") {
        const auto r = lambda_extremes(m);
        j["sym-eig"] = {{"lambda_min", r.lambda_min}, {"lambda_max", r.lambda_max}, {"residual", r.residual}};
        csv += fmt::format("sym-eig,{},{},{},\n", num(r.lambda_min), num(r.lambda_max), num(r.residual));
      }
      if (spectrum_method != "sym-eig") {
        const auto p = lambda_min_power(m);
        const double lmin = std::sqrt(std::max(p.eigenvalue, 0.0));
        j["inverse-power"] = {{"lambda_min", lmin}, {"iterations", p.iterations}, {"residual", p.residual}};
        csv += fmt::format("inverse-power,{},,{},{}\n", num(lmin), num(p.residual), p.iterations);
      }
      emit(g, as_json ? j.dump(2) + "\n" : csv);
    } else if (*smallball) {
      const auto spec = build_spec(sb_spec, g);
      const auto samples = draw_samples(spec, sb_samples, g.seed);
      const auto ratios = moment_ratios(samples, sb_p, sb_budget, derive_seed(g.seed, 1));
      const auto curve = small_ball_curve(samples, parse_list(sb_grid), ratios, {sb_budget, derive_seed(g.seed, 2), sb_p});
      if (as_json) {
        json rows = json::array();
        for (std::size_t k = 0; k < curve.u_grid.size(); ++k)
          rows.push_back({{"u", curve.u_grid[k]},
                          {"q_upper", curve.upper[k]},
                          {"q_lower", curve.lower[k]},
                          {"lower_vacuous", static_cast<bool>(curve.lower_vacuous[k])},
                          {"dir_index", curve.argmin_index[k]},
                          {"stderr", curve.stderr_at(k)}});
        json j = {{"family", std::string(to_string(spec.family))},
                  {"alpha", ratios.alpha},
                  {"beta_p", ratios.beta_p},
                  {"p", ratios.p},
                  {"samples", curve.sample_size},
                  {"curve", rows}};
        emit(g, j.dump(2) + "\n");
      } else {
        std::ostringstream os;
        write_curve_csv(os, curve);
        emit(g, os.str());
      }
    } else if (*rademacher) {
      const auto spec = build_spec(rad_spec, g);
      const auto raw = draw_samples(spec, rad_N, g.seed);
      const auto mode = rad_mode == "exact"       ? RademacherMode::exact
                        : rad_mode == "monte-carlo" ? RademacherMode::monte_carlo
                                                    : RademacherMode::automatic;
      const auto r = rademacher_linear(raw, rad_draws, derive_seed(g.seed, 1), mode);
      const double upper = rademacher_upper(1.0, spec.n, rad_N);
      if (as_json) {
        emit(g, json{{"value", r.value}, {"stderr", r.stderr}, {"draws", r.draws}, {"exact", r.exact},
                     {"upper_sqrt_n_over_N", upper}}
                        .dump(2) +
                    "\n");
      } else {
        emit(g, fmt::format("value,stderr,draws,exact,upper\n{},{},{},{},{}\n", num(r.value), num(r.stderr), r.draws,
                            r.exact ? "true" : "false", num(upper)));
      }
    } else if (*bounds) {
      ConstantSet k;
      if (auto cfg = load_config(g); cfg && cfg->count("constants")) k = ConstantSet::from_section(cfg->at("constants"));
      BoundPrediction p;
      if (b_regime == "three-regime") p = floor_regime({b_eta, b_L, b_beta, b_N, b_n}, k);
      else if (b_regime == "basic") p = basic_floor(b_tau, b_q, b_rn, b_N);
      else if (b_regime == "isomorphic") p = isomorphic_floor({b_a, b_A, b_B}, b_n, b_N, k);
      else p = general_floor(b_tau, b_q, b_A, b_n, b_N, k);
      if (as_json) {
        emit(g, prediction_json(p).dump(2) + "\n");
      } else {
        emit(g, fmt::format("regime,floor,lambda_floor,prob_failure,precondition_ok,vacuous\n{},{},{},{},{},{}\n",
                            to_string(p.regime), num(p.floor), num(p.lambda_floor()), num(p.prob_failure),
                            p.precondition_ok, p.vacuous));
        std::cerr << p.precondition_detail << '\n';
      }
    } else if (*sweep) {
      if (g.config.empty()) throw Error(ErrorCode::invalid_parameter, "sweep needs --config");
      auto cfg = ExperimentConfig::from_config(read_config(g.config));
      if (g.seed_given) cfg.seed = g.seed;
      if (!g.out.empty()) (as_json ? cfg.outputs.json : cfg.outputs.rows) = g.out;
      if (!sweep_summary.empty()) cfg.outputs.summary = sweep_summary;
      const auto r = run_sweep(cfg);
      std::ostringstream rows, summary;
      write_rows_csv(rows, r);
      write_summary_csv(summary, r);
      const std::string js = to_json(r).dump(2) + "\n";
      if (!cfg.outputs.rows.empty()) write_file(cfg.outputs.rows, rows.str());
      if (!cfg.outputs.summary.empty()) write_file(cfg.outputs.summary, summary.str());
      if (!cfg.outputs.json.empty()) write_file(cfg.outputs.json, js);
      if (cfg.outputs.rows.empty() && cfg.outputs.json.empty()) std::cout << (as_json ? js : rows.str());
      for (const auto& note : r.notes) std::cerr << "note: " << note << '\n';
      if (r.fit)
        std::cerr << fmt::format("fitted exponent {:.4f} +- {:.4f} ({} rows)\n", r.fit->exponent, r.fit->half_width,
                                 r.fit->rows_used);
    } else if (*verify) {
      const auto report = verify_suite({verify_budget_from_string(v_budget), g.seed, v_mutate});
      if (as_json) {
        emit(g, report.to_json().dump(2) + "\n");
      } else {
        std::string text = "check,status,detail\n";
        for (const auto& c : report.checks)
          text += fmt::format("{},{},\"{}\"\n", c.name,
                              c.status == VerifyCheck::Status::pass   ? "pass"
                              : c.status == VerifyCheck::Status::fail ? "fail"
                                                                      : "skipped",
                              c.detail);
        emit(g, text);
      }
      return report.passed() ? 0 : 1;
    } else if (*fit) {
      std::ifstream in(fit_in);
      const auto rows = read_deficits_csv(in);
      const auto f = fit_exponent(rows, regime_for_eta(fit_eta));
      if (as_json) {
        emit(g, json{{"regime", std::string(to_string(f.regime))},
                     {"exponent", f.exponent},
                     {"constant", f.constant},
                     {"half_width", f.half_width},
                     {"rows_used", f.rows_used},
                     {"excluded", f.excluded.size()}}
                        .dump(2) +
                    "\n");
      } else {
        emit(g, fmt::format("regime,exponent,constant,half_width,rows_used,excluded\n{},{},{},{},{},{}\n",
                            to_string(f.regime), num(f.exponent), num(f.constant), num(f.half_width), f.rows_used,
                            f.excluded.size()));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
