#pragma once

#include "tdaport/assignment.hpp"
#include "tdaport/error.hpp"
#include "tdaport/tda_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace tdaport {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Breakpoint {
  double t = 0.0;
  double value = 0.0;
};

/// Sequence of piecewise-linear levels lambda_1 >= lambda_2 >= ... >= 0, each stored by
/// its breakpoints. A level starts and ends at value 0; it is 0 outside its breakpoints.
struct PersistenceLandscape {
  std::vector<std::vector<Breakpoint>> levels;

  std::size_t depth() const { return levels.size(); }
  bool empty() const { return levels.empty(); }
};

namespace detail {

inline double tent(double birth, double death, double t) { return std::max(0.0, std::min(t - birth, death - t)); }

inline double level_at(const std::vector<Breakpoint>& level, double t) {
  if (level.empty() || t <= level.front().t || t >= level.back().t) return 0.0;
  auto it = std::upper_bound(level.begin(), level.end(), t, [](double x, const Breakpoint& b) { return x < b.t; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  if (hi.t == lo.t) return hi.value;
  return lo.value + (hi.value - lo.value) * (t - lo.t) / (hi.t - lo.t);
}

/// Drops interior points lying on the segment joining their neighbours, and zero runs at the ends.
inline std::vector<Breakpoint> simplify(const std::vector<Breakpoint>& pts) {
  std::size_t first = 0, last = pts.size();
  while (first + 1 < pts.size() && pts[first + 1].value == 0.0) ++first;
  while (last > first + 1 && pts[last - 2].value == 0.0) --last;
  std::vector<Breakpoint> out;
  for (std::size_t k = first; k < last; ++k) {
    if (out.size() >= 2) {
      const auto& a = out[out.size() - 2];
      const auto& b = out.back();
      const auto& c = pts[k];
      const double s1 = (b.value - a.value) * (c.t - b.t);
      const double s2 = (c.value - b.value) * (b.t - a.t);
      if (std::abs(s1 - s2) <= 1e-12 * std::max({1.0, std::abs(s1), std::abs(s2)})) out.pop_back();
    }
    out.push_back(pts[k]);
  }
  return out;
}

/// Exact integral of |f|^p over a segment of width w where f is linear from f0 to f1 and
/// does not change sign.
inline double power_integral(double f0, double f1, double w, double p) {
  f0 = std::abs(f0);
  f1 = std::abs(f1);
  if (w <= 0) return 0.0;
  const double pr = std::round(p);
  if (pr == p && p <= 64) {
    // (f1^{p+1} - f0^{p+1}) / (f1 - f0) = sum_{i=0}^{p} f0^i f1^{p-i}, free of cancellation
    const int ip = static_cast<int>(pr);
    double s = 0, f0pow = 1;
    for (int i = 0; i <= ip; ++i) {
      s += f0pow * std::pow(f1, ip - i);
      f0pow *= f0;
    }
    return w * s / (p + 1.0);
  }
  if (std::abs(f1 - f0) <= 1e-12 * std::max(f0, f1)) return w * std::pow(0.5 * (f0 + f1), p);
  return w * (std::pow(f1, p + 1) - std::pow(f0, p + 1)) / ((p + 1) * (f1 - f0));
}

/// Integral of |g|^p for g piecewise linear through the given points (with sign changes allowed).
inline double pl_power_integral(const std::vector<Breakpoint>& g, double p) {
  double total = 0;
  for (std::size_t k = 1; k < g.size(); ++k) {
    const double t0 = g[k - 1].t, t1 = g[k].t;
    const double v0 = g[k - 1].value, v1 = g[k].value;
    if ((v0 > 0 && v1 < 0) || (v0 < 0 && v1 > 0)) {
      const double tz = t0 + (t1 - t0) * v0 / (v0 - v1);
      total += power_integral(v0, 0.0, tz - t0, p) + power_integral(0.0, v1, t1 - tz, p);
    } else {
      total += power_integral(v0, v1, t1 - t0, p);
    }
  }
  return total;
}

inline void check_p(double p) {
  if (!(p >= 1.0)) throw ConfigError("p must be >= 1 (or infinity)");
}

}  // namespace detail

/// Level k at t is the k-th largest tent value min(t - b, d - t)_+ over the diagram's
/// features. Levels are exact: every kink of every level lies in the candidate set of births,
/// deaths, tent peaks and pairwise up/down crossings, and each level is linear in between.
inline PersistenceLandscape landscape(const PersistenceDiagram& diagram, std::optional<std::size_t> k_max = std::nullopt) {
  std::vector<std::pair<double, double>> feats;
  for (const auto& f : diagram.features) {
    if (f.essential || !std::isfinite(f.death))
      throw DataError("landscape needs a finite diagram; drop or truncate the essential class first");
    if (f.death > f.birth) feats.emplace_back(f.birth, f.death);
  }
  PersistenceLandscape out;
  if (feats.empty()) return out;
  const std::size_t levels = std::min(feats.size(), k_max.value_or(feats.size()));
  if (levels == 0) return out;

  std::vector<double> ts;
  ts.reserve(feats.size() * (feats.size() + 3));
  for (const auto& [b, d] : feats) {
    ts.push_back(b);
    ts.push_back(d);
    ts.push_back(0.5 * (b + d));
  }
  for (const auto& [b1, d1] : feats)
    for (const auto& [b2, d2] : feats) {
      // rising edge of one tent meets the falling edge of another
      const double t = 0.5 * (b1 + d2);
      if (t > b1 && t < d2 && t > b2 && t < d1) ts.push_back(t);
    }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  std::vector<std::vector<Breakpoint>> raw(levels);
  for (auto& r : raw) r.reserve(ts.size());
  std::vector<double> vals(feats.size());
  for (double t : ts) {
    for (std::size_t i = 0; i < feats.size(); ++i) {
      const auto [b, d] = feats[i];
      // exact peak height, so the sup norm is exactly the largest half-persistence
      vals[i] = t == 0.5 * (b + d) ? 0.5 * (d - b) : detail::tent(b, d, t);
    }
    std::partial_sort(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(levels), vals.end(), std::greater<>());
    for (std::size_t k = 0; k < levels; ++k) raw[k].push_back({t, vals[k]});
  }
  for (auto& r : raw) {
    auto lvl = detail::simplify(r);
    const bool nonzero = std::any_of(lvl.begin(), lvl.end(), [](const Breakpoint& b) { return b.value > 0; });
    if (!nonzero) break;
    out.levels.push_back(std::move(lvl));
  }
  return out;
}

inline double landscape_value(const PersistenceLandscape& l, std::size_t level, double t) {
  return level < l.levels.size() ? detail::level_at(l.levels[level], t) : 0.0;
}

/// (sum_k ||lambda_k||_p^p)^{1/p}, integrated exactly segment by segment; p = inf gives the max peak.
inline double landscape_norm(const PersistenceLandscape& l, double p) {
  detail::check_p(p);
  if (std::isinf(p)) {
    double m = 0;
    for (const auto& lvl : l.levels)
      for (const auto& b : lvl) m = std::max(m, std::abs(b.value));
    return m;
  }
  double s = 0;
  for (const auto& lvl : l.levels) s += detail::pl_power_integral(lvl, p);
  return std::pow(s, 1.0 / p);
}

/// ||lambda_x - lambda_y||_p with missing levels treated as zero.
inline double landscape_distance(const PersistenceLandscape& x, const PersistenceLandscape& y, double p) {
  detail::check_p(p);
  const std::size_t depth = std::max(x.depth(), y.depth());
  static const std::vector<Breakpoint> kEmpty;
  double acc = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& a = k < x.depth() ? x.levels[k] : kEmpty;
    const auto& b = k < y.depth() ? y.levels[k] : kEmpty;
    std::vector<double> ts;
    ts.reserve(a.size() + b.size());
    for (const auto& q : a) ts.push_back(q.t);
    for (const auto& q : b) ts.push_back(q.t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<Breakpoint> diff;
    diff.reserve(ts.size());
    for (double t : ts) diff.push_back({t, detail::level_at(a, t) - detail::level_at(b, t)});
    if (std::isinf(p)) {
      for (const auto& q : diff) acc = std::max(acc, std::abs(q.value));
    } else {
      acc += detail::pl_power_integral(diff, p);
    }
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

namespace detail {

inline void require_finite(const PersistenceDiagram& d) {
  for (const auto& f : d.features)
    if (f.essential || !std::isfinite(f.death)) throw DataError("Wasserstein distance needs finite diagrams");
}

inline double linf(const PersistencePair& a, const PersistencePair& b) {
  return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

inline double half_persistence(const PersistencePair& a) { return 0.5 * (a.death - a.birth); }

/// Ground distances (not yet raised to p) of the diagonal-augmented matching problem.
/// Rows: points of A, then diagonal slots for points of B. Columns: points of B, then
/// diagonal slots for points of A. Forbidden cells hold +inf.
inline Matrix augmented_ground(const PersistenceDiagram& A, const PersistenceDiagram& B) {
  const auto n1 = static_cast<Eigen::Index>(A.size());
  const auto n2 = static_cast<Eigen::Index>(B.size());
  const Eigen::Index n = n1 + n2;
  Matrix g = Matrix::Constant(n, n, kInfinity);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) g(i, j) = linf(A.features[i], B.features[j]);
  for (Eigen::Index i = 0; i < n1; ++i) g(i, n2 + i) = half_persistence(A.features[i]);
  for (Eigen::Index j = 0; j < n2; ++j) g(n1 + j, j) = half_persistence(B.features[j]);
  g.bottomRightCorner(n2, n1).setZero();
  return g;
}

}  // namespace detail

/// Bottleneck distance: smallest ground cost c such that the augmented graph restricted to
/// cells <= c has a perfect matching (binary search over the finite candidate costs).
inline double bottleneck(const PersistenceDiagram& A, const PersistenceDiagram& B) {
  detail::require_finite(A);
  detail::require_finite(B);
  const Matrix g = detail::augmented_ground(A, B);
  const int n = static_cast<int>(g.rows());
  if (n == 0) return 0.0;
  std::vector<double> cands;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (std::isfinite(g.data()[i])) cands.push_back(g.data()[i]);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  std::size_t lo = 0, hi = cands.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const double c = cands[mid];
    if (has_perfect_matching(n, [&](int i, int j) { return g(i, j) <= c; }))
      hi = mid;
    else
      lo = mid + 1;
  }
  return cands[lo];
}

/// p-Wasserstein distance with L-infinity ground cost; unmatched points are sent to the
/// diagonal at half their persistence. Solved exactly by optimal assignment on the
/// augmented matrix. p = inf is the bottleneck distance.
inline double wasserstein(const PersistenceDiagram& A, const PersistenceDiagram& B, double p) {
  detail::check_p(p);
  if (std::isinf(p)) return bottleneck(A, B);
  detail::require_finite(A);
  detail::require_finite(B);
  const Matrix g = detail::augmented_ground(A, B);
  if (g.rows() == 0) return 0.0;
  Matrix cost(g.rows(), g.cols());
  double finite_sum = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double v = g.data()[i];
    cost.data()[i] = std::isfinite(v) ? std::pow(v, p) : -1.0;
    if (std::isfinite(v)) finite_sum += cost.data()[i];
  }
  const double forbidden = 2.0 * finite_sum + 1.0;
  for (Eigen::Index i = 0; i < cost.size(); ++i)
    if (cost.data()[i] < 0) cost.data()[i] = forbidden;
  const auto a = hungarian(cost);
  return std::pow(a.cost, 1.0 / p);
}

/// Closed-form distance to the empty diagram: (2^{-p} sum pers^p)^{1/p}; max pers / 2 for p = inf.
inline double persistence_to_empty(const PersistenceDiagram& D, double p) {
  detail::check_p(p);
  detail::require_finite(D);
  if (std::isinf(p)) {
    double m = 0;
    for (const auto& f : D.features) m = std::max(m, f.persistence());
    return 0.5 * m;
  }
  double s = 0;
  for (const auto& f : D.features) s += std::pow(f.persistence(), p);
  return std::pow(std::pow(2.0, -p) * s, 1.0 / p);
}

/// CSV rows "level,t,value" at breakpoints, levels numbered from 1.
inline void write_landscape_csv(std::ostream& os, const PersistenceLandscape& l) {
  os << "level,t,value\n";
  os.precision(17);
  for (std::size_t k = 0; k < l.levels.size(); ++k)
    for (const auto& b : l.levels[k]) os << (k + 1) << ',' << b.t << ',' << b.value << '\n';
}

}  // namespace tdaport
