#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "svlab/bounds.hpp"
#include "svlab/config.hpp"
#include "svlab/distributions.hpp"

namespace svlab {

struct OutputPaths {
  std::string rows;
  std::string summary;
  std::string json;
};

struct ExperimentConfig {
  DistributionSpec spec;
  std::vector<double> beta_grid;
  int trials = 1;
  std::uint64_t seed = 1;
  ConstantSet constants;
  /// Anchor the regime floor constant at the largest beta (5th percentile).
  bool calibrate = true;
  /// Per-beta small-ball and Rademacher diagnostics.
  bool diagnostics = false;
  double tau = 0.25;
  std::size_t rademacher_draws = 200;
  std::size_t smallball_budget = 64;
  std::size_t smallball_samples = 20000;
  OutputPaths outputs;

  void validate() const;
  /// Sections [distribution], [experiment], [constants], [outputs];
  /// unknown sections and keys are rejected.
  static ExperimentConfig from_config(const ConfigFile& file);
  ConfigFile to_config() const;
};

/// N = ceil(n / beta), so that n/N <= beta.
std::size_t sample_size_for(int n, double beta);

struct TrialRecord {
  std::size_t beta_index = 0;
  double beta = 1.0;
  std::size_t N = 0;
  int trial = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

struct BetaSummary {
  double beta = 1.0;
  std::size_t N = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean_lmin = 0.0;
  double median_lmin = 0.0;
  double p05_lmin = 0.0;
  double median_lmax = 0.0;
  /// 1 - median lambda_min
  double deficit = 0.0;
  BoundPrediction floor;
  std::optional<BoundPrediction> isomorphic;
  /// Diagnostics: direction-search upper estimate of Q(2 tau), the
  /// Rademacher estimate on trial 0, and the resulting basic floor.
  std::optional<double> q_2tau;
  std::optional<double> rademacher;
  std::optional<double> rademacher_stderr;
  std::optional<BoundPrediction> basic;
  /// p05 >= calibrated floor; unset for the anchor and without calibration.
  std::optional<bool> covered;
};

struct ExponentFit {
  Regime regime = Regime::eta_gt_2;
  double exponent = 0.0;
  double constant = 0.0;
  double half_width = 0.0;
  std::size_t rows_used = 0;
  std::vector<DeficitPoint> excluded;
};

struct SweepResult {
  ExperimentConfig config;
  Regime regime = Regime::eta_gt_2;
  std::vector<TrialRecord> trials;
  std::vector<BetaSummary> summary;
  std::size_t failures = 0;
  std::optional<double> anchor_constant;
  std::optional<ExponentFit> fit;
  std::vector<std::string> notes;

  std::size_t coverage_violations() const;
};

/// Every (beta, trial) pair draws its matrix from
/// substream_seed(seed, beta index, trial); trials run in parallel and are
/// reduced in index order, so results do not depend on the thread count.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Least squares of log(deficit) on log(rate): rate is beta for eta >= 2
/// and beta log(1/beta) for eta < 2. Nonpositive deficits are excluded and
/// reported; fewer than 4 usable rows throws calibration_unavailable.
ExponentFit fit_exponent(const std::vector<DeficitPoint>& rows, Regime regime);

/// Tail exponent used for the three-regime floor (infinity for light tails).
double sweep_eta(const DistributionSpec& spec);

void write_rows_csv(std::ostream& os, const SweepResult& r);
void write_summary_csv(std::ostream& os, const SweepResult& r);
nlohmann::json to_json(const SweepResult& r);

/// Parse a summary CSV (or rows with beta and deficit columns) into points.
std::vector<DeficitPoint> read_deficits_csv(std::istream& is);

// ---------------------------------------------------------------------------

enum class VerifyBudget { smoke, standard, full };
VerifyBudget verify_budget_from_string(std::string_view name);
std::string_view to_string(VerifyBudget b);

struct VerifyCheck {
  std::string name;
  enum class Status { pass, fail, skipped } status = Status::skipped;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  VerifyBudget budget = VerifyBudget::standard;
  std::uint64_t seed = 1;
  /// Replace the truncation function by a corrupted copy; the sandwich
  /// check must then fail.
  bool mutate_phi = false;
};

VerifyReport verify_suite(const VerifyOptions& opts = {});

}  // namespace svlab
