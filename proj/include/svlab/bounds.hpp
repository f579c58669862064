#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svlab/distributions.hpp"

namespace svlab {

enum class Regime { eta_gt_2, eta_eq_2, eta_lt_2, basic_smallball, isomorphic, general_smallball };
std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

/// Tolerance for treating eta as exactly 2.
inline constexpr double kEtaTwoTolerance = 1e-9;

/// Tail-exponent regime of the almost-isometric floor.
Regime regime_for_eta(double eta);

enum class Provenance { default_value, calibrated };

struct Constant {
  double value = 1.0;
  Provenance provenance = Provenance::default_value;
};

/// Named positive constants, all defaulting to 1:
///   c0..c6           three-regime floors and their failure probabilities
///   kappa            VC deviation bound
///   iso_c0..iso_c2   isomorphic floor
///   gen_c1..gen_c3   general small-ball floor
class ConstantSet {
 public:
  ConstantSet();

  double operator[](std::string_view name) const;
  const Constant& at(std::string_view name) const;
  void set(std::string_view name, double value, Provenance provenance = Provenance::calibrated);
  const std::map<std::string, Constant, std::less<>>& all() const { return values_; }

  /// Section entries "name = value" or "name = value calibrated"; unknown names rejected.
  static ConstantSet from_section(const ConfigSection& section);
  ConfigSection to_section() const;

 private:
  std::map<std::string, Constant, std::less<>> values_;
};

enum class FloorScale { lambda, lambda_squared };

struct BoundPrediction {
  Regime regime = Regime::eta_gt_2;
  /// Never clamped; a floor <= 0 is reported with `vacuous` set.
  double floor = 0.0;
  FloorScale scale = FloorScale::lambda;
  /// Clamped to [0, 1].
  double prob_failure = 1.0;
  std::vector<std::pair<std::string, double>> constants;
  bool precondition_ok = false;
  std::string precondition_detail;
  bool vacuous = false;
  bool degenerate_edge = false;

  /// Floor on the lambda_min scale (square root when the floor is on lambda^2).
  double lambda_floor() const;
};

struct RegimeQuery {
  double eta = 0.0;
  double L = 1.0;
  double beta = 1.0;
  std::size_t N = 1;
  /// When > 0, the aspect condition n/N <= beta is part of the precondition.
  int n = 0;
};

/// Rate r(beta) with floor = 1 - c * r(beta):
///   eta > 2: sqrt(beta); eta = 2: sqrt(beta) log^{3/2}(1/beta);
///   eta < 2: (beta log(1/beta))^{eta/(2+eta)}.
double regime_rate(Regime regime, double eta, double beta);
/// Exponent eta/(2+eta) of the eta < 2 rate.
double low_moment_exponent(double eta);

BoundPrediction floor_regime(const RegimeQuery& q, const ConstantSet& k);

/// Floor tau^2 Q(2tau)/2 on lambda_min^2, failure 2 exp(-Q(2tau)^2 N / 8);
/// valid when r_n <= tau Q(2tau)/16. No free constants.
BoundPrediction basic_floor(double tau, double q2tau, double r_n, std::size_t N);

/// Floor iso_c2 a/B^2 when N >= iso_c0 B^4 (A/a)^2 n; failure exp(-iso_c1 N / B^4).
BoundPrediction isomorphic_floor(const CovarianceBand& band, int n, std::size_t N, const ConstantSet& k);

/// Floor gen_c2 tau sqrt(q2tau) when N >= gen_c1 A n / (tau^2 q2tau^2);
/// failure 2 exp(-gen_c3 N q2tau^2).
BoundPrediction general_floor(double tau, double q2tau, double A, int n, std::size_t N, const ConstantSet& k);

struct DeficitPoint {
  double beta = 1.0;
  double deficit = 0.0;
};

struct Calibration {
  Regime regime = Regime::eta_gt_2;
  /// Fitted multiplicative constant c in deficit = c * rate^exponent.
  double constant = 0.0;
  double exponent = 0.0;
  double half_width = 0.0;
  std::size_t rows_used = 0;
  std::vector<DeficitPoint> excluded;
};

/// Least squares of log(deficit) on log(rate(beta)). Needs >= 4 points with
/// positive deficit and positive rate; otherwise calibration_unavailable.
Calibration calibrate_constant(const std::vector<DeficitPoint>& rows, Regime regime, double eta);

/// Single-anchor calibration: c = deficit / rate(beta) at the anchor point.
double calibrate_anchor(const DeficitPoint& anchor, Regime regime, double eta);

/// Name of the floor constant read by a three-regime prediction (c2, c4 or c6).
std::string_view floor_constant_name(Regime regime);

}  // namespace svlab
