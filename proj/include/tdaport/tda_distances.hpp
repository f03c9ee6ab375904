#pragma once

#include "tdaport/error.hpp"
#include "tdaport/market_data.hpp"
#include "tdaport/tda_core.hpp"
#include "tdaport/tda_summaries.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace tdaport {

enum class DistanceKind { AWD, DWD, ALD, DLD, ABD, WD, LD, Spearman, Pearson, Euclid, EuclidSq };

inline const char* distance_name(DistanceKind k) {
  switch (k) {
    case DistanceKind::AWD: return "AWD";
    case DistanceKind::DWD: return "DWD";
    case DistanceKind::ALD: return "ALD";
    case DistanceKind::DLD: return "DLD";
    case DistanceKind::ABD: return "ABD";
    case DistanceKind::WD: return "WD";
    case DistanceKind::LD: return "LD";
    case DistanceKind::Spearman: return "Spearman";
    case DistanceKind::Pearson: return "Pearson";
    case DistanceKind::Euclid: return "Euclid";
    case DistanceKind::EuclidSq: return "EuclidSq";
  }
  return "?";
}

inline DistanceKind parse_distance_kind(const std::string& s) {
  for (auto k : {DistanceKind::AWD, DistanceKind::DWD, DistanceKind::ALD, DistanceKind::DLD, DistanceKind::ABD, DistanceKind::WD,
                 DistanceKind::LD, DistanceKind::Spearman, DistanceKind::Pearson, DistanceKind::Euclid, DistanceKind::EuclidSq})
    if (s == distance_name(k)) return k;
  throw ConfigError("unknown distance kind '" + s + "'");
}

/// Homology used by the topological distances: one dimension, or both (distances combine as an l_p sum).
inline constexpr int kBothDims = -1;

struct DistanceSpec {
  DistanceKind kind = DistanceKind::AWD;
  double p = 1.0;
  /// Sub-series plan for AWD/ALD/ABD; nullopt picks default_subseries_plan for the series length.
  std::optional<SubSeriesPlan> subseries;
  /// Sub-series weights; empty means 1/m each.
  std::vector<double> weights;
  int embed_dim = 2;
  int delay = 1;
  int homology_dim = 1;
};

namespace detail {

inline std::vector<int> dims_of(int homology_dim) {
  if (homology_dim == kBothDims) return {0, 1};
  if (homology_dim == 0 || homology_dim == 1) return {homology_dim};
  throw ConfigError("homology_dim must be 0, 1 or -1 (both)");
}

inline void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("series lengths differ: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
}

inline double combine(double acc, double v, double p) { return std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p); }
inline double finish(double acc, double p) { return std::isinf(p) ? acc : std::pow(acc, 1.0 / p); }

inline bool uses_subseries(DistanceKind k) { return k == DistanceKind::AWD || k == DistanceKind::ALD || k == DistanceKind::ABD; }
inline bool uses_landscape(DistanceKind k) { return k == DistanceKind::ALD || k == DistanceKind::DLD || k == DistanceKind::LD; }

}  // namespace detail

/// Finite persistence diagrams (one per requested dimension) of the delay embedding of a series.
inline std::vector<PersistenceDiagram> series_diagrams(std::span<const double> x, const DistanceSpec& spec) {
  const auto dims = detail::dims_of(spec.homology_dim);
  FiltrationSpec fs;
  fs.max_dim = dims.back();
  const auto d = rips_persistence(takens_embed(x, spec.embed_dim, spec.delay), fs);
  std::vector<PersistenceDiagram> out;
  for (int dim : dims) out.push_back(diagram_finite(diagram_restrict(d, dim)));
  return out;
}

/// Per-series topological summaries, computed once and reused across all pairs.
struct SeriesSummary {
  // [sub-series][dimension]
  std::vector<std::vector<PersistenceDiagram>> diagrams;
  std::vector<std::vector<PersistenceLandscape>> landscapes;
};

inline SubSeriesPlan resolve_plan(std::size_t T, const DistanceSpec& spec) {
  if (!detail::uses_subseries(spec.kind)) return {T, T, 1};
  if (spec.subseries) return make_subseries_plan(T, spec.subseries->length, spec.subseries->shift);
  return default_subseries_plan(T);
}

inline std::vector<double> resolve_weights(const SubSeriesPlan& plan, const DistanceSpec& spec) {
  if (!detail::uses_subseries(spec.kind) || spec.weights.empty()) return uniform_weights(plan.count);
  validate_weights(spec.weights, plan.count);
  return spec.weights;
}

inline SeriesSummary summarize(std::span<const double> x, const DistanceSpec& spec) {
  const auto plan = resolve_plan(x.size(), spec);
  SeriesSummary s;
  for (const auto& sub : make_subseries(x, plan.length, plan.shift)) {
    s.diagrams.push_back(series_diagrams(sub, spec));
    if (detail::uses_landscape(spec.kind)) {
      std::vector<PersistenceLandscape> ls;
      for (const auto& d : s.diagrams.back()) ls.push_back(landscape(d));
      s.landscapes.push_back(std::move(ls));
    }
  }
  return s;
}

/// Weighted sum over sub-series of the per-sub-series diagram (or landscape) distance.
inline double summary_distance(const SeriesSummary& a, const SeriesSummary& b, const DistanceSpec& spec,
                               const std::vector<double>& w) {
  if (a.diagrams.size() != b.diagrams.size() || a.diagrams.size() != w.size()) throw DataError("sub-series count mismatch");
  const double p = spec.kind == DistanceKind::ABD ? kInfinity : spec.p;
  const bool land = detail::uses_landscape(spec.kind);
  double total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double acc = 0;
    for (std::size_t k = 0; k < a.diagrams[i].size(); ++k) {
      const double v = land ? landscape_distance(a.landscapes[i][k], b.landscapes[i][k], p)
                            : wasserstein(a.diagrams[i][k], b.diagrams[i][k], p);
      acc = detail::combine(acc, v, p);
    }
    total += w[i] * detail::finish(acc, p);
  }
  return total;
}

namespace detail {

inline double averaged(std::span<const double> x, std::span<const double> y, DistanceSpec spec, DistanceKind kind) {
  require_same_length(x, y);
  spec.kind = kind;
  const auto plan = resolve_plan(x.size(), spec);
  const auto w = resolve_weights(plan, spec);
  return summary_distance(summarize(x, spec), summarize(y, spec), spec, w);
}

inline Series difference(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  Series d(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) d[t] = x[t] - y[t];
  return d;
}

inline double difference_distance(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec, bool land) {
  const auto diagrams = series_diagrams(difference(x, y), spec);
  double acc = 0;
  for (const auto& d : diagrams) {
    const double v = land ? landscape_norm(landscape(d), spec.p) : persistence_to_empty(d, spec.p);
    acc = combine(acc, v, spec.p);
  }
  return finish(acc, spec.p);
}

}  // namespace detail

/// Weighted average over aligned sub-series of the p-Wasserstein distance between diagrams.
inline double awd(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return detail::averaged(x, y, spec, std::isinf(spec.p) ? DistanceKind::ABD : DistanceKind::AWD);
}

/// AWD with the bottleneck distance.
inline double abd(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return detail::averaged(x, y, spec, DistanceKind::ABD);
}

/// Weighted average over aligned sub-series of the landscape distance.
inline double ald(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return detail::averaged(x, y, spec, DistanceKind::ALD);
}

/// Wasserstein distance of the diagram of x - y to the empty diagram (0 when that diagram is empty).
inline double dwd(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return detail::difference_distance(x, y, spec, false);
}

/// Landscape norm of the diagram of x - y.
inline double dld(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return detail::difference_distance(x, y, spec, true);
}

/// Plain Wasserstein distance between the full-series diagrams.
inline double wd(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  DistanceSpec s = spec;
  s.subseries.reset();
  s.weights.clear();
  return detail::averaged(x, y, s, DistanceKind::WD);
}

/// Plain landscape distance between the full-series landscapes.
inline double ld(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  DistanceSpec s = spec;
  s.subseries.reset();
  s.weights.clear();
  return detail::averaged(x, y, s, DistanceKind::LD);
}

enum class CorrKind { Spearman, Pearson };

namespace detail {

/// Ranks starting at 1, ties receive their average rank.
inline Series ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Series r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sxy += (x[t] - mx) * (y[t] - my);
    sxx += (x[t] - mx) * (x[t] - mx);
    syy += (y[t] - my) * (y[t] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) throw DataError("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

inline double correlation(std::span<const double> x, std::span<const double> y, CorrKind kind) {
  detail::require_same_length(x, y);
  if (x.size() < 2) throw DataError("correlation needs at least 2 observations");
  if (kind == CorrKind::Pearson) return detail::pearson(x, y);
  const auto rx = detail::ranks(x), ry = detail::ranks(y);
  return detail::pearson(rx, ry);
}

/// sqrt(2 (1 - rho)), in [0, 2].
inline double corr_distance(std::span<const double> x, std::span<const double> y, CorrKind kind) {
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - correlation(x, y, kind))));
}

inline double squared_gap(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x, y);
  double s = 0;
  for (std::size_t t = 0; t < x.size(); ++t) s += (x[t] - y[t]) * (x[t] - y[t]);
  return s;
}

/// -sum (x_t - y_t)^2: a similarity, not a distance.
inline double euclid_sq_neg(std::span<const double> x, std::span<const double> y) { return -squared_gap(x, y); }

inline double distance(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  switch (spec.kind) {
    case DistanceKind::AWD: return awd(x, y, spec);
    case DistanceKind::ABD: return abd(x, y, spec);
    case DistanceKind::ALD: return ald(x, y, spec);
    case DistanceKind::DWD: return dwd(x, y, spec);
    case DistanceKind::DLD: return dld(x, y, spec);
    case DistanceKind::WD: return wd(x, y, spec);
    case DistanceKind::LD: return ld(x, y, spec);
    case DistanceKind::Spearman: return corr_distance(x, y, CorrKind::Spearman);
    case DistanceKind::Pearson: return corr_distance(x, y, CorrKind::Pearson);
    case DistanceKind::Euclid: return std::sqrt(squared_gap(x, y));
    case DistanceKind::EuclidSq: return squared_gap(x, y);
  }
  throw ConfigError("unknown distance kind");
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(k) for k in [0, count) on up to `threads` workers. Each k is handled by exactly
/// one worker and writes only its own outputs, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += threads) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Symmetric matrix of pairwise distances between equally long series.
inline Matrix distance_matrix(const std::vector<std::span<const double>>& series, const DistanceSpec& spec,
                              unsigned threads = default_threads()) {
  const std::size_t n = series.size();
  for (const auto& s : series) detail::require_same_length(s, series.front());
  Matrix D = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  const bool cached = spec.kind == DistanceKind::AWD || spec.kind == DistanceKind::ABD || spec.kind == DistanceKind::ALD ||
                      spec.kind == DistanceKind::WD || spec.kind == DistanceKind::LD;
  if (cached && n > 0) {
    DistanceSpec s = spec;
    if (std::isinf(s.p) && s.kind == DistanceKind::AWD) s.kind = DistanceKind::ABD;
    if (s.kind == DistanceKind::WD || s.kind == DistanceKind::LD) {
      s.subseries.reset();
      s.weights.clear();
    }
    const auto plan = resolve_plan(series.front().size(), s);
    const auto w = resolve_weights(plan, s);
    std::vector<SeriesSummary> summaries(n);
    parallel_for(n, threads, [&](std::size_t i) { summaries[i] = summarize(series[i], s); });
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
      const auto [i, j] = pairs[k];
      D(i, j) = D(j, i) = summary_distance(summaries[i], summaries[j], s, w);
    });
    return D;
  }
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    D(i, j) = D(j, i) = distance(series[i], series[j], spec);
  });
  return D;
}

}  // namespace tdaport
