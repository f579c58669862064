#include "svlab/vc.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "svlab/error.hpp"

namespace svlab {

namespace {

// a . z >= c
struct Inequality {
  std::vector<double> a;
  double c;
};

constexpr double kCoefTol = 1e-12;
constexpr double kFeasTol = 1e-9;

void normalize(Inequality& q) {
  double scale = std::abs(q.c);
  for (double x : q.a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return;
  for (double& x : q.a) x /= scale;
  q.c /= scale;
}

bool fourier_motzkin_feasible(std::vector<Inequality> system, std::size_t vars) {
  for (std::size_t v = vars; v-- > 0;) {
    std::vector<Inequality> pos, neg, next;
    for (auto& q : system) {
      if (q.a[v] > kCoefTol) pos.push_back(q);
      else if (q.a[v] < -kCoefTol) neg.push_back(q);
      else {
        q.a[v] = 0.0;
        next.push_back(q);
      }
    }
    for (const auto& p : pos) {
      for (const auto& m : neg) {
        const double sp = 1.0 / p.a[v];
        const double sm = -1.0 / m.a[v];
        Inequality r{std::vector<double>(vars, 0.0), sp * p.c + sm * m.c};
        for (std::size_t i = 0; i < vars; ++i) r.a[i] = sp * p.a[i] + sm * m.a[i];
        r.a[v] = 0.0;
        normalize(r);
        next.push_back(std::move(r));
      }
    }
    system = std::move(next);
  }
  return std::all_of(system.begin(), system.end(), [](const Inequality& q) { return q.c <= kFeasTol; });
}

bool halfspace_realizable(std::span<const Eigen::VectorXd> points, const std::vector<bool>& inside) {
  const auto n = static_cast<std::size_t>(points.front().size());
  // variables (w_1..w_n, b); inside: <w,x> - b >= 1, outside: b - <w,x> >= 1
  std::vector<Inequality> sys;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double s = inside[i] ? 1.0 : -1.0;
    Inequality q{std::vector<double>(n + 1), 1.0};
    for (std::size_t k = 0; k < n; ++k) q.a[k] = s * points[i](static_cast<Eigen::Index>(k));
    q.a[n] = -s;
    sys.push_back(std::move(q));
  }
  return fourier_motzkin_feasible(std::move(sys), n + 1);
}

bool abs_threshold_realizable(std::span<const Eigen::VectorXd> points, const std::vector<bool>& inside) {
  const auto n = static_cast<std::size_t>(points.front().size());
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < points.size(); ++i) (inside[i] ? in : out).push_back(i);
  if (in.empty()) return true;  // any threshold above every |<t,x>|

  // variables (w_1..w_n, v): I+ : <w,x> - v >= 1; I- : -<w,x> - v >= 1;
  // outside: v - <w,x> >= 0 and v + <w,x> >= 0; v >= 0.
  // w -> -w swaps I+ and I-, so in[0] is pinned to I+.
  const std::size_t splits = std::size_t{1} << (in.size() - 1);
  for (std::size_t mask = 0; mask < splits; ++mask) {
    std::vector<Inequality> sys;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const double s = (k > 0 && ((mask >> (k - 1)) & 1U)) ? -1.0 : 1.0;
      Inequality q{std::vector<double>(n + 1), 1.0};
      for (std::size_t j = 0; j < n; ++j) q.a[j] = s * points[in[k]](static_cast<Eigen::Index>(j));
      q.a[n] = -1.0;
      sys.push_back(std::move(q));
    }
    for (std::size_t i : out) {
      for (double s : {1.0, -1.0}) {
        Inequality q{std::vector<double>(n + 1), 0.0};
        for (std::size_t j = 0; j < n; ++j) q.a[j] = -s * points[i](static_cast<Eigen::Index>(j));
        q.a[n] = 1.0;
        sys.push_back(std::move(q));
      }
    }
    Inequality nonneg{std::vector<double>(n + 1, 0.0), 0.0};
    nonneg.a[n] = 1.0;
    sys.push_back(std::move(nonneg));
    if (fourier_motzkin_feasible(std::move(sys), n + 1)) return true;
  }
  return false;
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t total) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < total - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(SetClass cls) { return cls == SetClass::halfspaces ? "halfspaces" : "abs-threshold"; }

bool realizable(std::span<const Eigen::VectorXd> points, const std::vector<bool>& inside, SetClass cls) {
  if (points.empty()) return true;
  if (inside.size() != points.size()) throw Error(ErrorCode::invalid_input, "labelling length mismatch");
  return cls == SetClass::halfspaces ? halfspace_realizable(points, inside) : abs_threshold_realizable(points, inside);
}

VcResult vc_bruteforce(const std::vector<Eigen::VectorXd>& points, SetClass cls) {
  if (points.empty()) return {};
  const auto dim = points.front().size();
  if (points.size() > kVcMaxPoints || dim > kVcMaxDimension || dim < 1)
    throw Error(ErrorCode::budget_exceeded,
                fmt::format("{} points in dimension {} (limit {} points, dimension {})", points.size(), dim,
                            kVcMaxPoints, kVcMaxDimension));
  for (const auto& p : points)
    if (p.size() != dim || !p.allFinite()) throw Error(ErrorCode::invalid_input, "points must share a finite dimension");

  VcResult result;
  for (std::size_t k = 1; k <= points.size(); ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    bool found = false;
    do {
      std::vector<Eigen::VectorXd> subset;
      for (auto i : idx) subset.push_back(points[i]);
      bool shattered = true;
      for (std::size_t mask = 0; mask < (std::size_t{1} << k) && shattered; ++mask) {
        std::vector<bool> inside(k);
        for (std::size_t i = 0; i < k; ++i) inside[i] = (mask >> i) & 1U;
        ++result.dichotomies_checked;
        shattered = realizable(subset, inside, cls);
      }
      if (shattered) {
        found = true;
        result.shattered = static_cast<int>(k);
        result.witness = idx;
      }
    } while (!found && next_combination(idx, points.size()));
    if (!found) break;
  }
  return result;
}

}  // namespace svlab
