#include "svlab/bounds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "svlab/error.hpp"
#include "svlab/stats.hpp"

namespace svlab {

namespace {

constexpr const char* kConstantNames[] = {"c0",     "c1",     "c2",     "c3",     "c4",     "c5",
                                          "c6",     "kappa",  "iso_c0", "iso_c1", "iso_c2", "gen_c1",
                                          "gen_c2", "gen_c3"};

double clamp01(double p) {
  if (std::isnan(p)) return 1.0;
  return std::clamp(p, 0.0, 1.0);
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::invalid_parameter, "beta must lie in (0, 1]");
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::eta_gt_2: return "eta-gt-2";
    case Regime::eta_eq_2: return "eta-eq-2";
    case Regime::eta_lt_2: return "eta-lt-2";
    case Regime::basic_smallball: return "basic-smallball";
    case Regime::isomorphic: return "isomorphic";
    case Regime::general_smallball: return "general-smallball";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  for (auto r : {Regime::eta_gt_2, Regime::eta_eq_2, Regime::eta_lt_2, Regime::basic_smallball,
                 Regime::isomorphic, Regime::general_smallball}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::invalid_parameter, fmt::format("unknown regime '{}'", name));
}

Regime regime_for_eta(double eta) {
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_parameter, "eta must be > 0");
  if (std::abs(eta - 2.0) <= kEtaTwoTolerance) return Regime::eta_eq_2;
  return eta > 2.0 ? Regime::eta_gt_2 : Regime::eta_lt_2;
}

ConstantSet::ConstantSet() {
  for (const char* name : kConstantNames) values_.emplace(name, Constant{});
}

const Constant& ConstantSet::at(std::string_view name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorCode::invalid_parameter, fmt::format("unknown constant '{}'", name));
  return it->second;
}

double ConstantSet::operator[](std::string_view name) const { return at(name).value; }

void ConstantSet::set(std::string_view name, double value, Provenance provenance) {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorCode::invalid_parameter, fmt::format("unknown constant '{}'", name));
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(ErrorCode::invalid_parameter, fmt::format("constant '{}' must be positive and finite", name));
  it->second = {value, provenance};
}

ConstantSet ConstantSet::from_section(const ConfigSection& section) {
  ConstantSet k;
  for (const auto& [key, raw] : section) {
    std::istringstream is(raw);
    std::string number, tag, extra;
    is >> number >> tag >> extra;
    double value = 0.0;
    const auto* end = number.data() + number.size();
    auto [ptr, ec] = std::from_chars(number.data(), end, value);
    if (ec != std::errc{} || ptr != end || !extra.empty())
      throw Error(ErrorCode::invalid_parameter, fmt::format("constant '{}': cannot parse '{}'", key, raw));
    Provenance prov = Provenance::default_value;
    if (tag == "calibrated") prov = Provenance::calibrated;
    else if (!tag.empty() && tag != "default")
      throw Error(ErrorCode::invalid_parameter, fmt::format("constant '{}': unknown provenance '{}'", key, tag));
    k.set(key, value, prov);
  }
  return k;
}

ConfigSection ConstantSet::to_section() const {
  ConfigSection out;
  for (const auto& [name, c] : values_)
    out[name] = fmt::format("{}{}", c.value, c.provenance == Provenance::calibrated ? " calibrated" : "");
  return out;
}

double BoundPrediction::lambda_floor() const {
  if (scale == FloorScale::lambda) return floor;
  return floor > 0.0 ? std::sqrt(floor) : floor;
}

double low_moment_exponent(double eta) { return eta / (2.0 + eta); }

double regime_rate(Regime regime, double eta, double beta) {
  check_beta(beta);
  const double log_inv = -std::log(beta);
  switch (regime) {
    case Regime::eta_gt_2: return std::sqrt(beta);
    case Regime::eta_eq_2: return std::sqrt(beta) * std::pow(log_inv, 1.5);
    case Regime::eta_lt_2: return std::pow(beta * log_inv, low_moment_exponent(eta));
    default: throw Error(ErrorCode::invalid_parameter, fmt::format("regime {} has no beta rate", to_string(regime)));
  }
}

std::string_view floor_constant_name(Regime regime) {
  switch (regime) {
    case Regime::eta_gt_2: return "c2";
    case Regime::eta_eq_2: return "c4";
    case Regime::eta_lt_2: return "c6";
    default: throw Error(ErrorCode::invalid_parameter, "not a three-regime floor");
  }
}

BoundPrediction floor_regime(const RegimeQuery& q, const ConstantSet& k) {
  check_beta(q.beta);
  BoundPrediction out;
  out.regime = regime_for_eta(q.eta);
  const double beta = q.beta;
  const double N = static_cast<double>(q.N);
  const double log_inv = -std::log(beta);
  const double rate = regime_rate(out.regime, q.eta, beta);
  switch (out.regime) {
    case Regime::eta_gt_2:
      out.floor = 1.0 - k["c2"] * rate;
      out.prob_failure = clamp01(k["c0"] * std::log(std::numbers::e / beta) * std::exp(-k["c1"] * N * beta));
      out.constants = {{"c0", k["c0"]}, {"c1", k["c1"]}, {"c2", k["c2"]}};
      break;
    case Regime::eta_eq_2:
      out.floor = 1.0 - k["c4"] * rate;
      out.prob_failure = clamp01(std::exp(-k["c3"] * N * beta * log_inv));
      out.constants = {{"c3", k["c3"]}, {"c4", k["c4"]}};
      break;
    default:
      out.floor = 1.0 - k["c6"] * rate;
      out.prob_failure = clamp01(std::exp(-k["c5"] * N * beta * log_inv));
      out.constants = {{"c5", k["c5"]}, {"c6", k["c6"]}};
      break;
  }
  out.vacuous = !(out.floor > 0.0);
  out.degenerate_edge = out.regime != Regime::eta_gt_2 && beta == 1.0;

  std::vector<std::string> problems;
  if (!(q.L >= 1.0)) problems.push_back("L < 1");
  if (q.N < 1) problems.push_back("N < 1");
  if (q.n > 0 && static_cast<double>(q.n) / N > beta) problems.push_back(fmt::format("n/N = {} > beta", q.n / N));
  out.precondition_ok = problems.empty();
  out.precondition_detail = out.precondition_ok ? "ok" : fmt::format("{}", fmt::join(problems, "; "));
  if (out.degenerate_edge) out.precondition_detail += "; degenerate edge beta = 1 (log(1/beta) = 0)";
  if (out.vacuous) out.precondition_detail += "; floor <= 0 (vacuous)";
  return out;
}

BoundPrediction basic_floor(double tau, double q2tau, double r_n, std::size_t N) {
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_parameter, "tau must be > 0");
  if (!(q2tau >= 0.0 && q2tau <= 1.0)) throw Error(ErrorCode::invalid_parameter, "Q(2 tau) must lie in [0, 1]");
  if (r_n < 0.0) throw Error(ErrorCode::invalid_parameter, "R_N must be >= 0");
  BoundPrediction out;
  out.regime = Regime::basic_smallball;
  out.scale = FloorScale::lambda_squared;
  const double threshold = tau * q2tau / 16.0;
  out.precondition_ok = q2tau > 0.0 && r_n <= threshold;
  out.precondition_detail = fmt::format("R_N = {:.6g} {} tau Q(2tau)/16 = {:.6g}", r_n,
                                        r_n <= threshold ? "<=" : ">", threshold);
  out.floor = tau * tau * q2tau / 2.0;
  out.prob_failure = clamp01(2.0 * std::exp(-q2tau * q2tau * static_cast<double>(N) / 8.0));
  out.vacuous = !(out.floor > 0.0);
  return out;
}

BoundPrediction isomorphic_floor(const CovarianceBand& band, int n, std::size_t N, const ConstantSet& k) {
  if (!(band.a > 0.0 && band.A >= band.a && band.B >= 1.0))
    throw Error(ErrorCode::invalid_parameter, "band needs 0 < a <= A and B >= 1");
  BoundPrediction out;
  out.regime = Regime::isomorphic;
  const double B4 = std::pow(band.B, 4);
  const double required = k["iso_c0"] * B4 * (band.A / band.a) * (band.A / band.a) * n;
  out.precondition_ok = static_cast<double>(N) >= required;
  out.precondition_detail = fmt::format("N = {} {} iso_c0 B^4 (A/a)^2 n = {:.6g}{}", N,
                                        out.precondition_ok ? ">=" : "<", required,
                                        out.precondition_ok ? "" : " (inapplicable)");
  out.floor = k["iso_c2"] * band.a / (band.B * band.B);
  out.prob_failure = clamp01(std::exp(-k["iso_c1"] * static_cast<double>(N) / B4));
  out.constants = {{"iso_c0", k["iso_c0"]}, {"iso_c1", k["iso_c1"]}, {"iso_c2", k["iso_c2"]}};
  out.vacuous = !(out.floor > 0.0);
  return out;
}

BoundPrediction general_floor(double tau, double q2tau, double A, int n, std::size_t N, const ConstantSet& k) {
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_parameter, "tau must be > 0");
  if (!(q2tau >= 0.0 && q2tau <= 1.0)) throw Error(ErrorCode::invalid_parameter, "Q(2 tau) must lie in [0, 1]");
  if (!(A > 0.0)) throw Error(ErrorCode::invalid_parameter, "A must be > 0");
  BoundPrediction out;
  out.regime = Regime::general_smallball;
  const double required = q2tau > 0.0 ? k["gen_c1"] * A * n / (tau * tau * q2tau * q2tau)
                                      : std::numeric_limits<double>::infinity();
  out.precondition_ok = static_cast<double>(N) >= required;
  out.precondition_detail = fmt::format("N = {} {} gen_c1 A n / (tau^2 Q^2) = {:.6g}{}", N,
                                        out.precondition_ok ? ">=" : "<", required,
                                        out.precondition_ok ? "" : " (inapplicable)");
  out.floor = k["gen_c2"] * tau * std::sqrt(q2tau);
  out.prob_failure = clamp01(2.0 * std::exp(-k["gen_c3"] * static_cast<double>(N) * q2tau * q2tau));
  out.constants = {{"gen_c1", k["gen_c1"]}, {"gen_c2", k["gen_c2"]}, {"gen_c3", k["gen_c3"]}};
  out.vacuous = !(out.floor > 0.0);
  return out;
}

Calibration calibrate_constant(const std::vector<DeficitPoint>& rows, Regime regime, double eta) {
  Calibration out;
  out.regime = regime;
  std::vector<double> x, y;
  for (const auto& r : rows) {
    const double rate = regime_rate(regime, eta, r.beta);
    if (!(r.deficit > 0.0) || !(rate > 0.0) || !std::isfinite(r.deficit)) {
      out.excluded.push_back(r);
      continue;
    }
    x.push_back(std::log(rate));
    y.push_back(std::log(r.deficit));
  }
  if (x.size() < 4)
    throw Error(ErrorCode::calibration_unavailable,
                fmt::format("{} usable rows for {}, need 4", x.size(), to_string(regime)));
  const auto fit = stats::least_squares(x, y);
  out.constant = std::exp(fit.intercept);
  out.exponent = fit.slope;
  out.half_width = fit.slope_half_width;
  out.rows_used = x.size();
  return out;
}

double calibrate_anchor(const DeficitPoint& anchor, Regime regime, double eta) {
  const double rate = regime_rate(regime, eta, anchor.beta);
  if (!(rate > 0.0) || !(anchor.deficit > 0.0))
    throw Error(ErrorCode::calibration_unavailable,
                fmt::format("anchor beta = {} has rate {} and deficit {}", anchor.beta, rate, anchor.deficit));
  return anchor.deficit / rate;
}

}  // namespace svlab
