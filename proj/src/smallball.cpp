#include "svlab/smallball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "svlab/error.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rng.hpp"

namespace svlab {

namespace {

constexpr double kInitialStep = 0.5;
constexpr double kFinalStep = 0.01;

void check_samples(const RowMatrix& samples) {
  if (samples.rows() == 0) throw Error(ErrorCode::invalid_input, "no samples");
}

void check_unit(const Eigen::VectorXd& t, Eigen::Index n) {
  if (t.size() != n) throw Error(ErrorCode::invalid_input, "direction has the wrong length");
  if (std::abs(t.norm() - 1.0) > 1e-10) throw Error(ErrorCode::invalid_input, "direction is not unit norm");
}

Eigen::VectorXd random_direction(int n, Rng& rng) {
  Eigen::VectorXd t(n);
  do {
    for (int i = 0; i < n; ++i) t(i) = rng.normal();
  } while (t.norm() == 0.0);
  return t.normalized();
}

std::size_t random_count(std::size_t budget) {
  return budget == 1 ? 1 : static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(budget)));
}

// Sorted |<X_i, t>|, used to answer q(u) for many thresholds at once.
std::vector<double> sorted_abs_projection(const RowMatrix& samples, const Eigen::VectorXd& t) {
  Eigen::VectorXd proj = samples * t;
  std::vector<double> out(static_cast<std::size_t>(proj.size()));
  for (Eigen::Index i = 0; i < proj.size(); ++i) out[static_cast<std::size_t>(i)] = std::abs(proj(i));
  std::sort(out.begin(), out.end());
  return out;
}

double fraction_at_least(const std::vector<double>& sorted, double u) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), u);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

// Greedy local refinement of an incumbent under objective `score` (minimized).
template <typename Score>
void refine(DirectionEstimate& best, std::size_t steps, std::uint64_t seed, std::size_t first_index, Score&& score,
            std::vector<Eigen::VectorXd>* visited = nullptr) {
  if (steps == 0) return;
  Rng rng(seed);
  const double decay = std::pow(kFinalStep / kInitialStep, 1.0 / static_cast<double>(std::max<std::size_t>(steps - 1, 1)));
  double step = kInitialStep;
  const auto n = best.direction.size();
  std::size_t index = first_index;
  for (std::size_t s = 0; s < steps; ++s, step *= decay, ++index) {
    Eigen::VectorXd cand = best.direction;
    for (Eigen::Index i = 0; i < n; ++i) cand(i) += step * rng.normal();
    if (cand.norm() == 0.0) continue;
    cand.normalize();
    const double value = score(cand);
    if (visited) visited->push_back(cand);
    if (value < best.estimate) {
      best.estimate = value;
      best.direction = cand;
      best.index = index;
    }
  }
}

}  // namespace

double SmallBallCurve::stderr_at(std::size_t k) const {
  const double q = upper.at(k);
  return std::sqrt(std::max(0.0, q * (1.0 - q)) / static_cast<double>(sample_size));
}

double q_direction(const RowMatrix& samples, const Eigen::VectorXd& t, double u) {
  check_samples(samples);
  check_unit(t, samples.cols());
  if (u < 0.0) throw Error(ErrorCode::invalid_parameter, "u must be >= 0");
  const auto M = static_cast<std::size_t>(samples.rows());
  const auto hits = parallel::chunked_sum<std::size_t>(M, [&](std::size_t b, std::size_t e) {
    std::size_t c = 0;
    for (std::size_t i = b; i < e; ++i)
      if (std::abs(samples.row(static_cast<Eigen::Index>(i)).dot(t)) >= u) ++c;
    return c;
  });
  return static_cast<double>(hits) / static_cast<double>(M);
}

double q_direction(const RowMatrix& samples, std::span<const double> t, double u) {
  return q_direction(samples, Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())), u);
}

DirectionEstimate q_inf_over(const RowMatrix& samples, const std::vector<Eigen::VectorXd>& directions, double u) {
  if (directions.empty()) throw Error(ErrorCode::invalid_parameter, "empty direction set");
  std::vector<double> values(directions.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(directions.size()); ++k)
    values[static_cast<std::size_t>(k)] = q_direction(samples, directions[static_cast<std::size_t>(k)], u);
  const auto it = std::min_element(values.begin(), values.end());
  DirectionEstimate out;
  out.index = static_cast<std::size_t>(it - values.begin());
  out.estimate = *it;
  out.direction = directions[out.index];
  return out;
}

std::vector<Eigen::VectorXd> base_directions(int n, std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw Error(ErrorCode::invalid_parameter, "search budget must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::VectorXd> dirs;
  const std::size_t k = random_count(budget);
  for (std::size_t i = 0; i < k; ++i) dirs.push_back(random_direction(n, rng));
  if (budget > 1) {
    for (int i = 0; i < n; ++i) {
      for (double s : {1.0, -1.0}) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(i) = s;
        dirs.push_back(e);
      }
    }
  }
  return dirs;
}

DirectionEstimate q_inf_search(const RowMatrix& samples, double u, std::size_t budget, std::uint64_t seed) {
  check_samples(samples);
  const int n = static_cast<int>(samples.cols());
  const auto dirs = base_directions(n, budget, seed);
  DirectionEstimate best = q_inf_over(samples, dirs, u);
  refine(best, budget - random_count(budget), derive_seed(seed, 1), dirs.size(),
         [&](const Eigen::VectorXd& t) { return q_direction(samples, t, u); });
  return best;
}

PaleyZygmundBound paley_zygmund_lower(const MomentRatios& ratios, double u) {
  if (!(ratios.p > 1.0)) throw Error(ErrorCode::invalid_parameter, "moment order p must be > 1");
  if (u < 0.0) throw Error(ErrorCode::invalid_parameter, "u must be >= 0");
  if (!(ratios.beta_p >= 1.0)) throw Error(ErrorCode::invalid_parameter, "beta_p must be >= 1");
  if (!(ratios.alpha > 0.0) || u >= ratios.alpha || std::isinf(ratios.beta_p)) return {0.0, true};
  const double q = ratios.p / (ratios.p - 1.0);
  return {std::pow(1.0 - u / ratios.alpha, q) * std::pow(1.0 / ratios.beta_p, q), false};
}

MomentRatios moment_ratios(const RowMatrix& samples, double p, std::size_t budget, std::uint64_t seed) {
  check_samples(samples);
  if (!(p > 1.0)) throw Error(ErrorCode::invalid_parameter, "moment order p must be > 1");
  const int n = static_cast<int>(samples.cols());
  const double M = static_cast<double>(samples.rows());

  struct Norms {
    double l1, lp;
  };
  auto norms = [&](const Eigen::VectorXd& t) {
    const Eigen::VectorXd proj = (samples * t).cwiseAbs();
    return Norms{proj.sum() / M, std::pow(proj.array().pow(p).sum() / M, 1.0 / p)};
  };

  auto dirs = base_directions(n, budget, seed);
  const std::size_t steps = budget - random_count(budget);

  // alpha: minimize L1.
  DirectionEstimate a_best{std::numeric_limits<double>::infinity(), {}, 0};
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double v = norms(dirs[k]).l1;
    if (v < a_best.estimate) a_best = {v, dirs[k], k};
  }
  refine(a_best, steps, derive_seed(seed, 2), dirs.size(), [&](const Eigen::VectorXd& t) { return norms(t).l1; }, &dirs);

  // beta: maximize Lp/L1 over everything evaluated so far, then refine.
  MomentRatios out;
  out.p = p;
  out.alpha = a_best.estimate;
  DirectionEstimate b_best{std::numeric_limits<double>::infinity(), {}, 0};
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto nm = norms(dirs[k]);
    if (nm.l1 == 0.0) {
      out.degenerate = true;
      continue;
    }
    const double v = -nm.lp / nm.l1;
    if (v < b_best.estimate) b_best = {v, dirs[k], k};
  }
  if (out.degenerate || out.alpha == 0.0) {
    out.alpha = 0.0;
    out.degenerate = true;
    out.beta_p = std::isinf(b_best.estimate) ? std::numeric_limits<double>::infinity() : -b_best.estimate;
    return out;
  }
  refine(b_best, steps, derive_seed(seed, 3), dirs.size(), [&](const Eigen::VectorXd& t) {
    const auto nm = norms(t);
    return nm.l1 == 0.0 ? std::numeric_limits<double>::infinity() : -nm.lp / nm.l1;
  });
  out.beta_p = std::max(1.0, -b_best.estimate);
  return out;
}

MomentRatios moment_ratios(const DistributionSpec& spec, double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::invalid_parameter, "moment order p must be > 1");
  if (!spec.analytic().rotation_invariant)
    throw Error(ErrorCode::unsupported_query,
                fmt::format("no analytic moment ratios for {}", to_string(spec.family)));
  MomentRatios out;
  out.p = p;
  out.alpha = marginal_moment(spec, 1.0);
  out.beta_p = std::max(1.0, std::pow(marginal_moment(spec, p), 1.0 / p) / out.alpha);
  return out;
}

SmallBallCurve small_ball_curve(const RowMatrix& samples, std::vector<double> u_grid, const MomentRatios& ratios,
                                const CurveOptions& opts) {
  check_samples(samples);
  std::sort(u_grid.begin(), u_grid.end());
  if (!u_grid.empty() && u_grid.front() < 0.0) throw Error(ErrorCode::invalid_parameter, "u must be >= 0");

  SmallBallCurve curve;
  curve.sample_size = static_cast<std::size_t>(samples.rows());
  curve.directions = base_directions(static_cast<int>(samples.cols()), opts.budget, opts.seed);
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    if (u_grid[k] == 0.0) continue;
    auto found = q_inf_search(samples, u_grid[k], opts.budget, derive_seed(opts.seed, 100 + k));
    curve.directions.push_back(found.direction);
  }

  std::vector<std::vector<double>> projections(curve.directions.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t d = 0; d < static_cast<std::int64_t>(projections.size()); ++d)
    projections[static_cast<std::size_t>(d)] = sorted_abs_projection(samples, curve.directions[static_cast<std::size_t>(d)]);

  curve.u_grid = u_grid;
  for (double u : u_grid) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t d = 0; d < projections.size(); ++d) {
      const double q = fraction_at_least(projections[d], u);
      if (q < best) {
        best = q;
        arg = d;
      }
    }
    const auto pz = paley_zygmund_lower(ratios, u);
    curve.upper.push_back(best);
    curve.argmin_index.push_back(arg);
    curve.lower.push_back(pz.value);
    curve.lower_vacuous.push_back(pz.vacuous);
  }
  return curve;
}

void write_curve_csv(std::ostream& os, const SmallBallCurve& curve) {
  os << "u,q_upper,q_lower,dir_index,stderr\n";
  for (std::size_t k = 0; k < curve.u_grid.size(); ++k)
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{},{:.17g}\n", curve.u_grid[k], curve.upper[k], curve.lower[k],
               curve.argmin_index[k], curve.stderr_at(k));
}

}  // namespace svlab
