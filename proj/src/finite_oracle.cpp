#include "svlab/finite_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>
#include <mpfr.h>

#include "svlab/error.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rng.hpp"

namespace svlab {

namespace {

constexpr std::int64_t kMaxNumerator = std::int64_t{1} << 24;
constexpr int kMaxGroupedN = 100000;

struct Accumulator {
  mpz_class signed_sum;  // sum over tuples of weight * sum over signs of sup_f |sum eps f|
  mpz_class event;       // sum over tuples of weight * 1{inf_f sum f^2 >= threshold}
  Accumulator& operator+=(const Accumulator& o) {
    signed_sum += o.signed_sum;
    event += o.event;
    return *this;
  }
};

mpz_class ceil_of(const mpq_class& q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

bool at_least(__int128 s, const mpz_class& threshold) {
  if (threshold <= 0) return true;
  // threshold fits comfortably: compare via two 64-bit halves would be overkill
  if (s < 0) return false;
  const auto hi = static_cast<unsigned long>(static_cast<unsigned __int128>(s) >> 64);
  const auto lo = static_cast<unsigned long>(static_cast<unsigned __int128>(s));
  mpz_class v(hi);
  v <<= 64;
  v += lo;
  return v >= threshold;
}

mpz_class pow_weight(std::int64_t w, unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(w), e);
  return r;
}

mpz_class total_weight(const FiniteInstance& inst) {
  mpz_class w = 0;
  for (auto x : inst.weights) w += static_cast<unsigned long>(x);
  return w;
}

// Integer threshold T with  P_N f^2 >= floor  <=>  sum_j num_f(X_j)^2 >= T.
mpz_class square_threshold(const FiniteInstance& inst, const mpq_class& floor) {
  mpq_class t = floor * inst.N * inst.denominator * inst.denominator;
  t.canonicalize();
  return ceil_of(t);
}

void check_sizes(const FiniteInstance& inst) {
  if (inst.atoms() > kOracleMaxAtoms || inst.functions() > kOracleMaxFunctions)
    throw Error(ErrorCode::budget_exceeded, fmt::format("{} atoms, {} functions (limit {}, {})", inst.atoms(),
                                                        inst.functions(), kOracleMaxAtoms, kOracleMaxFunctions));
}

std::pair<mpq_class, mpq_class> finish(const FiniteInstance& inst, const Accumulator& acc) {
  const mpz_class wn = pow_weight(total_weight(inst).get_si(), static_cast<unsigned long>(inst.N));
  mpz_class signs = 1;
  signs <<= static_cast<mp_bitcnt_t>(inst.N);
  mpq_class r(acc.signed_sum, wn * signs * inst.N * inst.denominator);
  mpq_class p(acc.event, wn);
  r.canonicalize();
  p.canonicalize();
  return {r, p};
}

Accumulator brute_range(const FiniteInstance& inst, const mpz_class& threshold, std::size_t begin, std::size_t end) {
  const std::size_t m = inst.atoms();
  const std::size_t F = inst.functions();
  const int N = inst.N;
  Accumulator acc;
  std::vector<std::size_t> atom(static_cast<std::size_t>(N));
  std::vector<std::int64_t> sums(F);
  std::vector<int> eps(static_cast<std::size_t>(N));
  mpz_class weight;
  for (std::size_t t = begin; t < end; ++t) {
    std::size_t code = t;
    for (int j = 0; j < N; ++j) {
      atom[static_cast<std::size_t>(j)] = code % m;
      code /= m;
    }
    weight = 1;
    for (int j = 0; j < N; ++j) weight *= static_cast<unsigned long>(inst.weights[atom[static_cast<std::size_t>(j)]]);

    __int128 smallest = -1;
    for (std::size_t f = 0; f < F; ++f) {
      __int128 s = 0;
      std::int64_t plain = 0;
      for (int j = 0; j < N; ++j) {
        const std::int64_t v = inst.values[f][atom[static_cast<std::size_t>(j)]];
        s += static_cast<__int128>(v) * v;
        plain += v;
      }
      if (smallest < 0 || s < smallest) smallest = s;
      sums[f] = plain;
    }
    if (at_least(smallest, threshold)) acc.event += weight;

    // eps_0 pinned to +1; the sup is even in eps, so double at the end.
    std::fill(eps.begin(), eps.end(), 1);
    unsigned long total = 0;
    const std::size_t half = std::size_t{1} << (N - 1);
    for (std::size_t g = 0;; ++g) {
      std::int64_t best = 0;
      for (std::size_t f = 0; f < F; ++f) best = std::max(best, std::abs(sums[f]));
      total += static_cast<unsigned long>(best);
      if (g + 1 == half) break;
      const auto flip = static_cast<std::size_t>(__builtin_ctzll(g + 1)) + 1;
      const int old = eps[flip];
      eps[flip] = -old;
      for (std::size_t f = 0; f < F; ++f) sums[f] -= 2 * old * inst.values[f][atom[flip]];
    }
    mpz_addmul_ui(acc.signed_sum.get_mpz_t(), weight.get_mpz_t(), 2 * total);
  }
  return acc;
}

std::pair<mpq_class, mpq_class> brute_engine(const FiniteInstance& inst, const mpq_class& floor) {
  const mpz_class threshold = square_threshold(inst, floor);
  std::size_t tuples = 1;
  for (int j = 0; j < inst.N; ++j) tuples *= inst.atoms();
  const Accumulator acc = parallel::chunked_sum<Accumulator>(
      tuples, [&](std::size_t b, std::size_t e) { return brute_range(inst, threshold, b, e); }, Accumulator{});
  return finish(inst, acc);
}

void compositions(int remaining, std::size_t slot, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (slot + 1 == cur.size()) {
    cur[slot] = remaining;
    out.push_back(cur);
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    cur[slot] = c;
    compositions(remaining - c, slot + 1, cur, out);
  }
}

struct SignProfile {
  const FiniteInstance& inst;
  const std::vector<std::size_t>& active;
  const std::vector<int>& counts;
  std::vector<std::int64_t> partial;
  mpz_class total;

  // Sum over per-atom sign sums s_i = 2k_i - c_i, weighted by prod binom(c_i, k_i),
  // of sup_f |sum_i num_f,i s_i|.
  void walk(std::size_t level, const mpz_class& mult) {
    if (level == active.size()) {
      std::int64_t best = 0;
      for (auto v : partial) best = std::max(best, std::abs(v));
      mpz_addmul_ui(total.get_mpz_t(), mult.get_mpz_t(), static_cast<unsigned long>(best));
      return;
    }
    const std::size_t a = active[level];
    const int c = counts[a];
    mpz_class binom = 1;
    for (int k = 0; k <= c; ++k) {
      const std::int64_t s = 2 * k - c;
      for (std::size_t f = 0; f < partial.size(); ++f) partial[f] += inst.values[f][a] * s;
      walk(level + 1, mult * binom);
      for (std::size_t f = 0; f < partial.size(); ++f) partial[f] -= inst.values[f][a] * s;
      binom *= static_cast<unsigned long>(c - k);
      binom /= static_cast<unsigned long>(k + 1);
    }
  }
};

std::pair<mpq_class, mpq_class> grouped_engine(const FiniteInstance& inst, const mpq_class& floor) {
  const mpz_class threshold = square_threshold(inst, floor);
  const std::size_t m = inst.atoms();
  std::vector<std::size_t> active;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t f = 0; f < inst.functions(); ++f)
      if (inst.values[f][a] != 0) {
        active.push_back(a);
        break;
      }

  std::vector<std::vector<int>> classes;
  std::vector<int> cur(m);
  compositions(inst.N, 0, cur, classes);

  mpz_class n_factorial;
  mpz_fac_ui(n_factorial.get_mpz_t(), static_cast<unsigned long>(inst.N));

  const Accumulator acc = parallel::chunked_sum<Accumulator>(
      classes.size(),
      [&](std::size_t b, std::size_t e) {
        Accumulator local;
        for (std::size_t ci = b; ci < e; ++ci) {
          const auto& counts = classes[ci];
          mpz_class mult = n_factorial;
          int inactive = 0;
          for (std::size_t a = 0; a < m; ++a) {
            mpz_class fc;
            mpz_fac_ui(fc.get_mpz_t(), static_cast<unsigned long>(counts[a]));
            mult /= fc;
            mult *= pow_weight(inst.weights[a], static_cast<unsigned long>(counts[a]));
          }
          __int128 smallest = -1;
          for (std::size_t f = 0; f < inst.functions(); ++f) {
            __int128 s = 0;
            for (std::size_t a = 0; a < m; ++a)
              s += static_cast<__int128>(inst.values[f][a]) * inst.values[f][a] * counts[a];
            if (smallest < 0 || s < smallest) smallest = s;
          }
          if (at_least(smallest, threshold)) local.event += mult;

          for (std::size_t a = 0; a < m; ++a)
            if (std::find(active.begin(), active.end(), a) == active.end()) inactive += counts[a];
          SignProfile walker{inst, active, counts, std::vector<std::int64_t>(inst.functions(), 0), 0};
          walker.walk(0, mpz_class(1));
          mpz_class s = walker.total;
          s <<= static_cast<mp_bitcnt_t>(inactive);
          local.signed_sum += mult * s;
        }
        return local;
      },
      Accumulator{});
  return finish(inst, acc);
}

double binomial_double(double n, double k) { return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)); }

struct MpfrValue {
  mpfr_t v;
  MpfrValue() { mpfr_init2(v, 256); }
  ~MpfrValue() { mpfr_clear(v); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;
};

// 1 - 2 exp(-x) with the given final rounding; `up` gives an upper bound.
void bound_directed(mpfr_t out, const mpq_class& x, bool up) {
  MpfrValue t;
  mpfr_set_q(t.v, x.get_mpq_t(), up ? MPFR_RNDU : MPFR_RNDD);
  mpfr_neg(t.v, t.v, MPFR_RNDN);
  mpfr_exp(t.v, t.v, up ? MPFR_RNDD : MPFR_RNDU);
  mpfr_mul_2ui(t.v, t.v, 1, MPFR_RNDN);
  mpfr_ui_sub(out, 1, t.v, up ? MPFR_RNDU : MPFR_RNDD);
}

std::string mpq_text(const mpq_class& q) { return q.get_str(); }

}  // namespace

mpq_class FiniteInstance::probability(std::size_t atom) const {
  mpq_class p(static_cast<long>(weights.at(atom)), total_weight(*this));
  p.canonicalize();
  return p;
}

mpq_class FiniteInstance::value(std::size_t f, std::size_t atom) const {
  mpq_class v(static_cast<long>(values.at(f).at(atom)), static_cast<long>(denominator));
  v.canonicalize();
  return v;
}

void FiniteInstance::validate() const {
  if (weights.empty()) throw Error(ErrorCode::invalid_input, "instance has no atoms");
  if (values.empty()) throw Error(ErrorCode::invalid_input, "instance has no functions");
  if (denominator <= 0) throw Error(ErrorCode::invalid_input, "denominator must be positive");
  if (N < 1) throw Error(ErrorCode::invalid_input, "N must be at least 1");
  for (auto w : weights)
    if (w <= 0 || w > (std::int64_t{1} << 31)) throw Error(ErrorCode::invalid_input, "weights must be in [1, 2^31]");
  for (const auto& row : values) {
    if (row.size() != weights.size()) throw Error(ErrorCode::invalid_input, "every function needs one value per atom");
    for (auto v : row)
      if (std::abs(v) > kMaxNumerator) throw Error(ErrorCode::invalid_input, "value numerator too large");
  }
}

std::string_view to_string(OracleEngine e) {
  switch (e) {
    case OracleEngine::automatic: return "automatic";
    case OracleEngine::brute: return "brute";
    case OracleEngine::grouped: return "grouped";
  }
  return "?";
}

std::string_view to_string(OracleVerdict v) {
  switch (v) {
    case OracleVerdict::holds: return "holds";
    case OracleVerdict::violated: return "violated";
    case OracleVerdict::not_applicable: return "not-applicable";
    case OracleVerdict::undecided: return "undecided";
  }
  return "?";
}

double brute_work(const FiniteInstance& inst) {
  return std::pow(static_cast<double>(inst.atoms()), inst.N) * std::ldexp(1.0, inst.N - 1) *
         static_cast<double>(inst.functions());
}

double grouped_work(const FiniteInstance& inst) {
  std::size_t active = 0;
  for (std::size_t a = 0; a < inst.atoms(); ++a)
    for (std::size_t f = 0; f < inst.functions(); ++f)
      if (inst.values[f][a] != 0) {
        ++active;
        break;
      }
  // pairs (counts, per-atom plus counts) = compositions of N into m + active parts
  const double parts = static_cast<double>(inst.atoms() + active);
  return binomial_double(inst.N + parts - 1, parts - 1) * static_cast<double>(inst.functions());
}

std::pair<mpq_class, mpq_class> tiny_oracle_reference(const FiniteInstance& inst, const mpq_class& floor) {
  inst.validate();
  check_sizes(inst);
  if (inst.N > kOracleMaxBruteN) throw Error(ErrorCode::budget_exceeded, "reference oracle limited to N <= 10");
  const mpz_class W = total_weight(inst);
  const std::size_t m = inst.atoms();
  std::size_t tuples = 1;
  for (int j = 0; j < inst.N; ++j) tuples *= m;
  mpq_class rademacher = 0, probability = 0;
  const mpq_class Nq(inst.N);
  for (std::size_t t = 0; t < tuples; ++t) {
    std::vector<std::size_t> atom;
    std::size_t code = t;
    mpq_class p = 1;
    for (int j = 0; j < inst.N; ++j) {
      atom.push_back(code % m);
      code /= m;
      p *= inst.probability(atom.back());
    }
    mpq_class inf_sq = -1;
    for (std::size_t f = 0; f < inst.functions(); ++f) {
      mpq_class s = 0;
      for (auto a : atom) s += inst.value(f, a) * inst.value(f, a);
      s /= Nq;
      if (inf_sq < 0 || s < inf_sq) inf_sq = s;
    }
    if (inf_sq >= floor) probability += p;
    mpq_class signed_total = 0;
    for (std::size_t e = 0; e < (std::size_t{1} << inst.N); ++e) {
      mpq_class sup = 0;
      for (std::size_t f = 0; f < inst.functions(); ++f) {
        mpq_class s = 0;
        for (int j = 0; j < inst.N; ++j) {
          const mpq_class v = inst.value(f, atom[static_cast<std::size_t>(j)]);
          if ((e >> j) & 1U) s -= v;
          else s += v;
        }
        sup = std::max(sup, mpq_class(abs(s)));
      }
      signed_total += sup;
    }
    mpq_class sign_count(mpz_class(1) << static_cast<mp_bitcnt_t>(inst.N));
    rademacher += p * signed_total / (sign_count * Nq);
  }
  return {rademacher, probability};
}

OracleReport tiny_oracle(const FiniteInstance& inst, const mpq_class& tau, OracleEngine engine) {
  inst.validate();
  check_sizes(inst);
  if (tau <= 0) throw Error(ErrorCode::invalid_parameter, "tau must be positive");

  OracleReport r;
  r.tau = tau;
  const mpq_class two_tau_d = 2 * tau * inst.denominator;
  r.q2tau = -1;
  for (std::size_t f = 0; f < inst.functions(); ++f) {
    mpq_class q = 0;
    for (std::size_t a = 0; a < inst.atoms(); ++a)
      if (mpq_class(std::abs(inst.values[f][a])) >= two_tau_d) q += inst.probability(a);
    if (r.q2tau < 0 || q < r.q2tau) r.q2tau = q;
  }
  r.floor = tau * tau * r.q2tau / 2;

  const double bw = brute_work(inst);
  const double gw = grouped_work(inst);
  if (engine == OracleEngine::automatic)
    engine = (inst.N <= kOracleMaxBruteN && bw <= kOracleWorkBudget && bw <= 16.0 * gw) ? OracleEngine::brute
                                                                                        : OracleEngine::grouped;
  r.engine = engine;
  r.work = engine == OracleEngine::brute ? bw : gw;
  if (engine == OracleEngine::brute && inst.N > kOracleMaxBruteN)
    throw Error(ErrorCode::budget_exceeded, fmt::format("brute enumeration limited to N <= {} (got {})",
                                                        kOracleMaxBruteN, inst.N));
  if (engine == OracleEngine::grouped && inst.N > kMaxGroupedN)
    throw Error(ErrorCode::budget_exceeded, fmt::format("grouped enumeration limited to N <= {}", kMaxGroupedN));
  if (r.work > kOracleWorkBudget)
    throw Error(ErrorCode::budget_exceeded,
                fmt::format("{} engine needs {:.3g} work units (budget {:.3g}); atoms={}, functions={}, N={}",
                            to_string(engine), r.work, kOracleWorkBudget, inst.atoms(), inst.functions(), inst.N));

  std::tie(r.rademacher, r.probability) =
      engine == OracleEngine::brute ? brute_engine(inst, r.floor) : grouped_engine(inst, r.floor);

  mpq_class x = r.q2tau * r.q2tau * inst.N / 8;
  x.canonicalize();
  {
    MpfrValue nearest;
    mpfr_set_q(nearest.v, x.get_mpq_t(), MPFR_RNDN);
    mpfr_neg(nearest.v, nearest.v, MPFR_RNDN);
    mpfr_exp(nearest.v, nearest.v, MPFR_RNDN);
    mpfr_mul_2ui(nearest.v, nearest.v, 1, MPFR_RNDN);
    mpfr_ui_sub(nearest.v, 1, nearest.v, MPFR_RNDN);
    r.bound = mpfr_get_d(nearest.v, MPFR_RNDN);
    char buf[128];
    mpfr_snprintf(buf, sizeof buf, "%.40Rg", nearest.v);
    r.bound_digits = buf;
  }

  r.hypothesis = r.q2tau > 0 && r.rademacher <= tau * r.q2tau / 16;
  if (!r.hypothesis) {
    r.verdict = OracleVerdict::not_applicable;
    return r;
  }
  MpfrValue hi, lo;
  bound_directed(hi.v, x, true);
  bound_directed(lo.v, x, false);
  if (mpfr_cmp_q(hi.v, r.probability.get_mpq_t()) <= 0) r.verdict = OracleVerdict::holds;
  else if (mpfr_cmp_q(lo.v, r.probability.get_mpq_t()) > 0) r.verdict = OracleVerdict::violated;
  else r.verdict = OracleVerdict::undecided;
  return r;
}

nlohmann::json to_json(const FiniteInstance& inst) {
  return {{"weights", inst.weights}, {"values", inst.values}, {"denominator", inst.denominator}, {"N", inst.N}};
}

nlohmann::json to_json(const OracleReport& r) {
  return {{"tau", mpq_text(r.tau)},
          {"q_2tau", mpq_text(r.q2tau)},
          {"rademacher", mpq_text(r.rademacher)},
          {"rademacher_approx", r.rademacher.get_d()},
          {"floor", mpq_text(r.floor)},
          {"probability", mpq_text(r.probability)},
          {"probability_approx", r.probability.get_d()},
          {"bound", r.bound_digits},
          {"hypothesis", r.hypothesis},
          {"verdict", std::string(to_string(r.verdict))},
          {"engine", std::string(to_string(r.engine))}};
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& opt) {
  Rng rng(seed);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  RandomInstance out;
  auto& inst = out.instance;
  const auto m = static_cast<std::size_t>(pick(1, static_cast<std::int64_t>(opt.max_atoms)));
  const auto F = static_cast<std::size_t>(pick(1, static_cast<std::int64_t>(opt.max_functions)));
  inst.N = static_cast<int>(pick(opt.min_N, opt.max_N));
  inst.denominator = opt.denominator;
  for (std::size_t a = 0; a < m; ++a) inst.weights.push_back(pick(1, opt.max_weight));
  std::int64_t reach = opt.max_numerator;
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<std::int64_t> row(m, 0);
    std::int64_t peak = 0;
    while (peak == 0) {
      for (auto& v : row) {
        v = pick(-opt.max_numerator, opt.max_numerator);
        peak = std::max(peak, std::abs(v));
      }
    }
    reach = std::min(reach, peak);
    inst.values.push_back(std::move(row));
  }
  // every function reaches |value| >= k / D somewhere, so Q(k / D) > 0
  const std::int64_t k = pick(1, reach);
  const std::int64_t shrink = std::int64_t{1} << pick(0, 2);
  out.tau = mpq_class(static_cast<long>(k), static_cast<long>(2 * inst.denominator * shrink));
  out.tau.canonicalize();
  return out;
}

}  // namespace svlab
