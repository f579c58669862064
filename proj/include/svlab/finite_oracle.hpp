#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>
#include <nlohmann/json.hpp>

namespace svlab {

/// A finite probability space with a finite function class on it.
///
/// Atom i has probability weights[i] / sum(weights); function f takes the
/// value values[f][i] / denominator on atom i. Everything is integral so
/// the oracle can run in exact arithmetic.
struct FiniteInstance {
  std::vector<std::int64_t> weights;
  std::vector<std::vector<std::int64_t>> values;
  std::int64_t denominator = 1;
  int N = 1;

  std::size_t atoms() const { return weights.size(); }
  std::size_t functions() const { return values.size(); }
  mpq_class probability(std::size_t atom) const;
  mpq_class value(std::size_t f, std::size_t atom) const;
  /// Structural checks (positive weights, rectangular values, N >= 1).
  void validate() const;
};

inline constexpr std::size_t kOracleMaxAtoms = 6;
inline constexpr std::size_t kOracleMaxFunctions = 4;
inline constexpr int kOracleMaxBruteN = 10;
/// Work units (tuples x sign vectors, or type classes x sign profiles).
inline constexpr double kOracleWorkBudget = 4.0e9;

enum class OracleEngine {
  automatic,
  brute,    // every sample tuple, every sign vector
  grouped,  // tuples grouped by atom counts, signs by per-atom sums
};
std::string_view to_string(OracleEngine e);

enum class OracleVerdict { holds, violated, not_applicable, undecided };
std::string_view to_string(OracleVerdict v);

struct OracleReport {
  mpq_class tau;
  /// min over f of P{|f| >= 2 tau}
  mpq_class q2tau;
  /// E sup_f |N^{-1} sum eps_j f(X_j)|
  mpq_class rademacher;
  /// tau^2 Q(2 tau) / 2
  mpq_class floor;
  /// P{ inf_f P_N f^2 >= floor }
  mpq_class probability;
  /// 1 - 2 exp(-Q(2 tau)^2 N / 8), rounded to nearest
  double bound = 0.0;
  std::string bound_digits;
  bool hypothesis = false;  // rademacher <= tau q2tau / 16
  OracleVerdict verdict = OracleVerdict::not_applicable;
  OracleEngine engine = OracleEngine::brute;
  double work = 0.0;
};

/// Exact evaluation of the small-ball floor statement on a finite instance.
/// Verdict is decided by comparing the exact probability against directed
/// roundings of the bound at 256 bits; `undecided` would mean the two
/// roundings straddle the probability.
OracleReport tiny_oracle(const FiniteInstance& inst, const mpq_class& tau,
                         OracleEngine engine = OracleEngine::automatic);

/// Single-threaded brute-force engine kept as the reference for the
/// parallel one. Returns (rademacher, probability) for the given floor.
std::pair<mpq_class, mpq_class> tiny_oracle_reference(const FiniteInstance& inst, const mpq_class& floor);

/// Work estimate of each engine; used by `automatic` and the budget check.
double brute_work(const FiniteInstance& inst);
double grouped_work(const FiniteInstance& inst);

nlohmann::json to_json(const FiniteInstance& inst);
nlohmann::json to_json(const OracleReport& report);

struct RandomInstanceOptions {
  std::size_t max_atoms = 4;
  std::size_t max_functions = 3;
  int min_N = 1;
  int max_N = 8;
  std::int64_t max_weight = 9;
  std::int64_t denominator = 8;
  std::int64_t max_numerator = 16;
};

struct RandomInstance {
  FiniteInstance instance;
  mpq_class tau;
};

/// Random instance with tau chosen so that Q(2 tau) > 0.
RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& opt = {});

}  // namespace svlab
