#include "svlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rademacher.hpp"
#include "svlab/rng.hpp"
#include "svlab/smallball.hpp"
#include "svlab/spectrum.hpp"
#include "svlab/stats.hpp"

namespace svlab {

namespace {

constexpr std::uint64_t kSmallBallStream = 0x5ba11ULL;
constexpr std::uint64_t kRademacherStream = 0x7ade3ULL;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view key, std::string_view raw) {
  const std::string text = trim(raw);
  const auto slash = text.find('/');
  auto one = [&](std::string_view part) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw Error(ErrorCode::invalid_parameter, fmt::format("'{}': cannot parse number '{}'", key, raw));
    return v;
  };
  if (slash == std::string::npos) return one(text);
  return one(std::string_view(text).substr(0, slash)) / one(std::string_view(text).substr(slash + 1));
}

std::uint64_t parse_count(std::string_view key, std::string_view raw) {
  const std::string text = trim(raw);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorCode::invalid_parameter, fmt::format("'{}': cannot parse integer '{}'", key, raw));
  return v;
}

bool parse_bool(std::string_view key, std::string_view raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::invalid_parameter, fmt::format("'{}': expected true/false, got '{}'", key, raw));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string eta_text(const DistributionSpec& spec) { return spec.tail ? num(spec.tail->eta) : "inf"; }

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void ExperimentConfig::validate() const {
  spec.validate();
  if (beta_grid.empty()) throw Error(ErrorCode::invalid_parameter, "beta_grid is empty");
  for (double b : beta_grid)
    if (!(b > 0.0 && b <= 1.0)) throw Error(ErrorCode::invalid_parameter, fmt::format("beta {} outside (0, 1]", b));
  if (trials < 1) throw Error(ErrorCode::invalid_parameter, "trials must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_parameter, "tau must be > 0");
  if (rademacher_draws < 1 || smallball_budget < 1 || smallball_samples < 1)
    throw Error(ErrorCode::invalid_parameter, "diagnostic budgets must be >= 1");
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  bool have_distribution = false;
  for (const auto& [name, section] : file) {
    if (name == "distribution") {
      cfg.spec = spec_from_section(section);
      have_distribution = true;
    } else if (name == "constants") {
      cfg.constants = ConstantSet::from_section(section);
    } else if (name == "outputs") {
      for (const auto& [key, value] : section) {
        if (key == "rows") cfg.outputs.rows = value;
        else if (key == "summary") cfg.outputs.summary = value;
        else if (key == "json") cfg.outputs.json = value;
        else throw Error(ErrorCode::invalid_parameter, fmt::format("unknown outputs key '{}'", key));
      }
    } else if (name == "experiment") {
      for (const auto& [key, value] : section) {
        if (key == "beta_grid") {
          cfg.beta_grid.clear();
          std::stringstream ss(value);
          std::string item;
          while (std::getline(ss, item, ','))
            if (!trim(item).empty()) cfg.beta_grid.push_back(parse_number(key, item));
        } else if (key == "trials") {
          cfg.trials = static_cast<int>(parse_count(key, value));
        } else if (key == "seed") {
          cfg.seed = parse_count(key, value);
        } else if (key == "calibrate") {
          cfg.calibrate = parse_bool(key, value);
        } else if (key == "diagnostics") {
          cfg.diagnostics = parse_bool(key, value);
        } else if (key == "tau") {
          cfg.tau = parse_number(key, value);
        } else if (key == "rademacher_draws") {
          cfg.rademacher_draws = parse_count(key, value);
        } else if (key == "smallball_budget") {
          cfg.smallball_budget = parse_count(key, value);
        } else if (key == "smallball_samples") {
          cfg.smallball_samples = parse_count(key, value);
        } else {
          throw Error(ErrorCode::invalid_parameter, fmt::format("unknown experiment key '{}'", key));
        }
      }
    } else {
      throw Error(ErrorCode::invalid_parameter, fmt::format("unknown config section '{}'", name));
    }
  }
  if (!have_distribution) throw Error(ErrorCode::invalid_parameter, "config needs a [distribution] section");
  cfg.validate();
  return cfg;
}

ConfigFile ExperimentConfig::to_config() const {
  ConfigFile f;
  f["distribution"] = spec_to_section(spec);
  std::vector<std::string> grid;
  for (double b : beta_grid) grid.push_back(num(b));
  auto& e = f["experiment"];
  e["beta_grid"] = fmt::format("{}", fmt::join(grid, ", "));
  e["trials"] = std::to_string(trials);
  e["seed"] = std::to_string(seed);
  e["calibrate"] = calibrate ? "true" : "false";
  e["diagnostics"] = diagnostics ? "true" : "false";
  e["tau"] = num(tau);
  e["rademacher_draws"] = std::to_string(rademacher_draws);
  e["smallball_budget"] = std::to_string(smallball_budget);
  e["smallball_samples"] = std::to_string(smallball_samples);
  f["constants"] = constants.to_section();
  auto& o = f["outputs"];
  if (!outputs.rows.empty()) o["rows"] = outputs.rows;
  if (!outputs.summary.empty()) o["summary"] = outputs.summary;
  if (!outputs.json.empty()) o["json"] = outputs.json;
  if (o.empty()) f.erase("outputs");
  return f;
}

std::size_t sample_size_for(int n, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::invalid_parameter, "beta outside (0, 1]");
  const double exact = static_cast<double>(n) / beta;
  auto N = static_cast<std::size_t>(std::ceil(exact));
  // absorb representation error of grids like 1/3 without breaking n/N <= beta
  if (N > 1 && static_cast<double>(n) / static_cast<double>(N - 1) <= beta) --N;
  return N;
}

double sweep_eta(const DistributionSpec& spec) {
  return spec.tail && spec.tail->eta > 0.0 ? spec.tail->eta : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// sweep

std::size_t SweepResult::coverage_violations() const {
  std::size_t v = 0;
  for (const auto& s : summary)
    if (s.covered && !*s.covered) ++v;
  return v;
}

ExponentFit fit_exponent(const std::vector<DeficitPoint>& rows, Regime regime) {
  ExponentFit out;
  out.regime = regime;
  std::vector<double> x, y;
  for (const auto& r : rows) {
    const double rate = regime == Regime::eta_lt_2 ? r.beta * std::log(1.0 / r.beta) : r.beta;
    if (!(r.deficit > 0.0) || !std::isfinite(r.deficit) || !(rate > 0.0)) {
      out.excluded.push_back(r);
      continue;
    }
    x.push_back(std::log(rate));
    y.push_back(std::log(r.deficit));
  }
  if (x.size() < 4)
    throw Error(ErrorCode::calibration_unavailable, fmt::format("{} usable rows, need 4", x.size()));
  const auto fit = stats::least_squares(x, y);
  out.exponent = fit.slope;
  out.constant = std::exp(fit.intercept);
  out.half_width = fit.slope_half_width;
  out.rows_used = x.size();
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult res;
  res.config = cfg;
  const auto& spec = cfg.spec;
  const double eta = sweep_eta(spec);
  const double L = spec.tail ? spec.tail->L : 1.0;
  res.regime = regime_for_eta(eta);

  const std::size_t B = cfg.beta_grid.size();
  const auto T = static_cast<std::size_t>(cfg.trials);
  res.trials.resize(B * T);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(B * T); ++i) {
    const auto b = static_cast<std::size_t>(i) / T;
    const auto t = static_cast<std::size_t>(i) % T;
    TrialRecord& rec = res.trials[static_cast<std::size_t>(i)];
    rec.beta_index = b;
    rec.beta = cfg.beta_grid[b];
    rec.N = sample_size_for(spec.n, rec.beta);
    rec.trial = static_cast<int>(t);
    rec.seed = substream_seed(cfg.seed, b, t);
    try {
      const auto m = assemble(spec, rec.N, rec.seed, t);
      const auto s = lambda_extremes(m);
      rec.lambda_min = s.lambda_min;
      rec.lambda_max = s.lambda_max;
      if (!std::isfinite(s.lambda_min) || !std::isfinite(s.lambda_max))
        throw Error(ErrorCode::no_convergence, "non-finite spectrum");
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.lambda_min = rec.lambda_max = std::numeric_limits<double>::quiet_NaN();
    }
  }

  std::optional<double> q_2tau;
  if (cfg.diagnostics) {
    const auto sample = draw_samples(spec, cfg.smallball_samples, derive_seed(cfg.seed, kSmallBallStream));
    q_2tau = q_inf_search(sample, 2.0 * cfg.tau, cfg.smallball_budget, derive_seed(cfg.seed, kSmallBallStream + 1))
                 .estimate;
  }

  const auto flags = spec.analytic();
  for (std::size_t b = 0; b < B; ++b) {
    BetaSummary s;
    s.beta = cfg.beta_grid[b];
    s.N = sample_size_for(spec.n, s.beta);
    std::vector<double> lmin, lmax;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& rec = res.trials[b * T + t];
      if (rec.failed) {
        ++s.failures;
        continue;
      }
      lmin.push_back(rec.lambda_min);
      lmax.push_back(rec.lambda_max);
    }
    s.successes = lmin.size();
    res.failures += s.failures;
    if (lmin.empty()) {
      s.mean_lmin = s.median_lmin = s.p05_lmin = s.median_lmax = s.deficit = std::numeric_limits<double>::quiet_NaN();
      res.notes.push_back(fmt::format("beta {}: every trial failed", s.beta));
    } else {
      s.mean_lmin = stats::mean(lmin);
      s.median_lmin = stats::median(lmin);
      s.p05_lmin = stats::quantile(lmin, 0.05);
      s.median_lmax = stats::median(lmax);
      s.deficit = 1.0 - s.median_lmin;
    }
    s.floor = floor_regime({eta, L, s.beta, s.N, spec.n}, cfg.constants);
    if (spec.tail && !flags.certified_tail)
      s.floor.precondition_detail += "; tail profile certified along coordinates only";
    if (flags.sphere_band) s.isomorphic = isomorphic_floor(analytic_band(spec), spec.n, s.N, cfg.constants);
    if (cfg.diagnostics) {
      const std::uint64_t seed0 = substream_seed(cfg.seed, b, 0);
      const auto raw = assemble(spec, s.N, seed0, 0).raw_rows();
      const auto r = rademacher_linear(raw, cfg.rademacher_draws, derive_seed(seed0, kRademacherStream));
      s.q_2tau = q_2tau;
      s.rademacher = r.value;
      s.rademacher_stderr = r.stderr;
      s.basic = basic_floor(cfg.tau, std::clamp(*q_2tau, 0.0, 1.0), r.value, s.N);
    }
    res.summary.push_back(std::move(s));
  }

  if (cfg.calibrate) {
    std::size_t anchor = 0;
    for (std::size_t b = 1; b < B; ++b)
      if (cfg.beta_grid[b] > cfg.beta_grid[anchor]) anchor = b;
    const auto& a = res.summary[anchor];
    try {
      const double c = calibrate_anchor({a.beta, 1.0 - a.p05_lmin}, res.regime, eta);
      res.anchor_constant = c;
      ConstantSet k = cfg.constants;
      k.set(floor_constant_name(res.regime), c, Provenance::calibrated);
      for (std::size_t b = 0; b < B; ++b) {
        auto& s = res.summary[b];
        const std::string detail_suffix =
            spec.tail && !flags.certified_tail ? "; tail profile certified along coordinates only" : "";
        s.floor = floor_regime({eta, L, s.beta, s.N, spec.n}, k);
        s.floor.precondition_detail += detail_suffix;
        if (b != anchor && cfg.beta_grid[b] < a.beta && std::isfinite(s.p05_lmin))
          s.covered = s.p05_lmin >= s.floor.lambda_floor();
      }
    } catch (const Error& e) {
      res.notes.push_back(fmt::format("calibration skipped: {}", e.what()));
    }
  }

  std::vector<DeficitPoint> rows;
  for (const auto& s : res.summary) rows.push_back({s.beta, s.deficit});
  try {
    res.fit = fit_exponent(rows, res.regime);
  } catch (const Error& e) {
    res.notes.push_back(fmt::format("exponent fit skipped: {}", e.what()));
  }
  if (res.failures > 0) res.notes.push_back(fmt::format("{} failed trials", res.failures));
  return res;
}

// ---------------------------------------------------------------------------
// persistence

void write_rows_csv(std::ostream& os, const SweepResult& r) {
  const auto& spec = r.config.spec;
  const std::string family(to_string(spec.family));
  const std::string eta = eta_text(spec);
  os << "family,eta,n,N,beta,trial,lambda_min,lambda_max,seed\n";
  for (const auto& t : r.trials)
    os << fmt::format("{},{},{},{},{},{},{},{},{}\n", family, eta, spec.n, t.N, num(t.beta), t.trial,
                      num(t.lambda_min), num(t.lambda_max), t.seed);
}

void write_summary_csv(std::ostream& os, const SweepResult& r) {
  const auto& spec = r.config.spec;
  const std::string family(to_string(spec.family));
  const std::string eta = eta_text(spec);
  os << "family,eta,n,beta,median_lmin,p05_lmin,deficit,floor_regime,floor_value,precondition_ok\n";
  for (const auto& s : r.summary)
    os << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", family, eta, spec.n, num(s.beta), num(s.median_lmin),
                      num(s.p05_lmin), num(s.deficit), to_string(s.floor.regime), num(s.floor.lambda_floor()),
                      s.floor.precondition_ok ? "true" : "false");
}

namespace {

nlohmann::json prediction_json(const BoundPrediction& p) {
  nlohmann::json constants = nlohmann::json::object();
  for (const auto& [name, v] : p.constants) constants[name] = v;
  return {{"regime", std::string(to_string(p.regime))},
          {"floor", p.floor},
          {"scale", p.scale == FloorScale::lambda ? "lambda" : "lambda_squared"},
          {"lambda_floor", p.lambda_floor()},
          {"prob_failure", p.prob_failure},
          {"constants", constants},
          {"precondition_ok", p.precondition_ok},
          {"precondition_detail", p.precondition_detail},
          {"vacuous", p.vacuous}};
}

// json cannot hold nan; encode as null
nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json j;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [name, section] : r.config.to_config()) cfg[name] = section;
  j["config"] = cfg;
  j["regime"] = std::string(to_string(r.regime));
  j["failures"] = r.failures;
  auto& trials = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json row = {{"beta", t.beta},
                          {"N", t.N},
                          {"trial", t.trial},
                          {"lambda_min", finite_or_null(t.lambda_min)},
                          {"lambda_max", finite_or_null(t.lambda_max)},
                          {"seed", t.seed}};
    if (t.failed) row["error"] = t.error;
    trials.push_back(std::move(row));
  }
  auto& summary = j["summary"] = nlohmann::json::array();
  for (const auto& s : r.summary) {
    nlohmann::json row = {{"beta", s.beta},
                          {"N", s.N},
                          {"successes", s.successes},
                          {"failures", s.failures},
                          {"mean_lmin", finite_or_null(s.mean_lmin)},
                          {"median_lmin", finite_or_null(s.median_lmin)},
                          {"p05_lmin", finite_or_null(s.p05_lmin)},
                          {"median_lmax", finite_or_null(s.median_lmax)},
                          {"deficit", finite_or_null(s.deficit)},
                          {"floor", prediction_json(s.floor)}};
    if (s.isomorphic) row["isomorphic"] = prediction_json(*s.isomorphic);
    if (s.q_2tau) row["q_2tau_upper"] = *s.q_2tau;
    if (s.rademacher) row["rademacher"] = {{"value", *s.rademacher}, {"stderr", *s.rademacher_stderr}};
    if (s.basic) row["basic"] = prediction_json(*s.basic);
    if (s.covered) row["covered"] = *s.covered;
    summary.push_back(std::move(row));
  }
  if (r.anchor_constant) j["anchor_constant"] = *r.anchor_constant;
  if (r.fit)
    j["fit"] = {{"regime", std::string(to_string(r.fit->regime))},
                {"exponent", r.fit->exponent},
                {"constant", r.fit->constant},
                {"half_width", r.fit->half_width},
                {"rows_used", r.fit->rows_used},
                {"excluded", r.fit->excluded.size()}};
  j["coverage_violations"] = r.coverage_violations();
  j["notes"] = r.notes;
  return j;
}

std::vector<DeficitPoint> read_deficits_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::invalid_input, "empty CSV");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
  };
  const auto header = split(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto beta_col = column("beta");
  const auto deficit_col = column("deficit");
  const auto median_col = column("median_lmin");
  const auto lmin_col = column("lambda_min");
  if (!beta_col || (!deficit_col && !median_col && !lmin_col))
    throw Error(ErrorCode::invalid_input, "CSV needs beta and one of deficit, median_lmin, lambda_min");

  std::map<double, std::vector<double>, std::greater<>> per_beta;
  std::vector<DeficitPoint> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    auto cell = [&](std::size_t c) {
      if (c >= cells.size()) throw Error(ErrorCode::invalid_input, fmt::format("CSV line {} is short", lineno));
      return cells[c];
    };
    const double beta = parse_number("beta", cell(*beta_col));
    if (deficit_col) out.push_back({beta, parse_number("deficit", cell(*deficit_col))});
    else if (median_col) out.push_back({beta, 1.0 - parse_number("median_lmin", cell(*median_col))});
    else {
      const double v = parse_number("lambda_min", cell(*lmin_col));
      if (std::isfinite(v)) per_beta[beta].push_back(v);
    }
  }
  for (auto& [beta, values] : per_beta) out.push_back({beta, 1.0 - stats::median(values)});
  return out;
}

}  // namespace svlab
