#pragma once

#include "tdaport/clustering.hpp"
#include "tdaport/error.hpp"
#include "tdaport/similarity.hpp"
#include "tdaport/tda_distances.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace tdaport {

/// Labelled equal-length series; labels are class indices 0..classes-1.
struct LabeledSeries {
  std::vector<Series> series;
  std::vector<int> labels;
};

/// Control-chart file: one whitespace-separated series per line, classes in consecutive blocks of
/// equal size (normal, cyclic, increasing trend, decreasing trend, upward shift, downward shift).
inline LabeledSeries load_control_charts(const std::string& path, int classes = 6) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open control-chart file '" + path + "'");
  LabeledSeries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    Series s;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        s.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw DataError(path + ": line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (s.empty()) continue;
    if (!out.series.empty() && s.size() != out.series.front().size())
      throw DataError(path + ": line " + std::to_string(lineno) + ": expected " + std::to_string(out.series.front().size()) + " values, got " +
                      std::to_string(s.size()));
    out.series.push_back(std::move(s));
  }
  if (out.series.empty()) throw DataError(path + ": no series");
  if (out.series.size() % static_cast<std::size_t>(classes) != 0)
    throw DataError(path + ": " + std::to_string(out.series.size()) + " series do not split into " + std::to_string(classes) + " equal classes");
  const std::size_t per = out.series.size() / static_cast<std::size_t>(classes);
  for (std::size_t i = 0; i < out.series.size(); ++i) out.labels.push_back(static_cast<int>(i / per));
  return out;
}

/// Series drawn from the six published control-chart generators (mean 30, noise scale 2,
/// r ~ U(-3, 3)); same class order as the file.
inline LabeledSeries control_chart_surrogate(std::uint64_t seed, std::size_t per_class = 100, std::size_t length = 60) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> r(-3.0, 3.0);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  LabeledSeries out;
  for (int cls = 0; cls < 6; ++cls)
    for (std::size_t k = 0; k < per_class; ++k) {
      const double amp = U(10, 15), period = U(10, 15), g = U(0.2, 0.5), x = U(7.5, 20);
      const double t3 = U(static_cast<double>(length) / 3, 2.0 * static_cast<double>(length) / 3);
      Series s(length);
      for (std::size_t t = 0; t < length; ++t) {
        const double tt = static_cast<double>(t);
        double v = 30.0 + 2.0 * r(rng);
        switch (cls) {
          case 1: v += amp * std::sin(2 * std::numbers::pi * tt / period); break;
          case 2: v += g * tt; break;
          case 3: v -= g * tt; break;
          case 4: v += tt >= t3 ? x : 0.0; break;
          case 5: v -= tt >= t3 ? x : 0.0; break;
          default: break;
        }
        s[t] = v;
      }
      out.series.push_back(std::move(s));
      out.labels.push_back(cls);
    }
  return out;
}

struct CaseStudyOptions {
  std::size_t clusters = 6;
  double sigma2 = 0.01;
  DistanceSpec base{DistanceKind::AWD, 1.0, std::nullopt, {}, 2, 1, 1};
  std::uint64_t seed = 0;
  int kmedoids_restarts = 10;
  unsigned threads = default_threads();
  /// Names from casestudy_distance_names(); empty = all.
  std::vector<std::string> distances;
};

struct CaseStudyRow {
  std::string distance;
  double kmedoids_acc = 0.0;
  double apc_acc = 0.0;
  std::size_t apc_clusters = 0;
};

inline std::vector<std::string> casestudy_distance_names() { return {"WD", "LD", "AWD", "ALD", "DWD", "DLD", "d1", "d2", "ED"}; }

inline DistanceKind casestudy_distance_kind(const std::string& name) {
  if (name == "d1") return DistanceKind::Spearman;
  if (name == "d2") return DistanceKind::Pearson;
  if (name == "ED") return DistanceKind::Euclid;
  return parse_distance_kind(name);
}

/// Accuracy of K-medoids on the distances and of APC (preference tuned to the cluster count) on
/// the Gaussian kernel exp(-d^2 / sigma2).
inline std::vector<CaseStudyRow> run_casestudy(const LabeledSeries& data, const CaseStudyOptions& opt) {
  if (data.series.size() < opt.clusters) throw DataError("fewer series than clusters");
  std::vector<std::span<const double>> spans(data.series.begin(), data.series.end());
  std::vector<CaseStudyRow> rows;
  const auto names = opt.distances.empty() ? casestudy_distance_names() : opt.distances;
  for (const auto& name : names) {
    DistanceSpec spec = opt.base;
    spec.kind = casestudy_distance_kind(name);
    const Matrix D = distance_matrix(spans, spec, opt.threads);
    CaseStudyRow row;
    row.distance = name;
    row.kmedoids_acc = clustering_accuracy(k_medoids(D, opt.clusters, opt.seed, opt.kmedoids_restarts).clustering.labels, data.labels);
    const Matrix S = kernel_from_distances(D, KernelId::K1, 1, opt.sigma2);
    const auto apc = affinity_propagation_k(S, opt.clusters);
    row.apc_acc = clustering_accuracy(apc.labels, data.labels);
    row.apc_clusters = apc.clusters();
    rows.push_back(row);
  }
  return rows;
}

inline void write_casestudy_csv(std::ostream& os, const std::vector<CaseStudyRow>& rows) {
  os.precision(17);
  os << "distance,kmedoids_acc,apc_acc,apc_clusters\n";
  for (const auto& r : rows) os << r.distance << ',' << r.kmedoids_acc << ',' << r.apc_acc << ',' << r.apc_clusters << '\n';
}

}  // namespace tdaport
