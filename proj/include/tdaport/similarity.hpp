#pragma once

#include "tdaport/error.hpp"
#include "tdaport/market_data.hpp"
#include "tdaport/tda_distances.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tdaport {

enum class KernelId { K1 = 1, K2, K3, K4, K5, K6, K7 };

inline KernelId parse_kernel_id(const std::string& s) {
  if (s.size() == 2 && (s[0] == 'K' || s[0] == 'k') && s[1] >= '1' && s[1] <= '7') return static_cast<KernelId>(s[1] - '0');
  throw ConfigError("unknown kernel id '" + s + "' (expected K1..K7)");
}

inline std::string kernel_name(KernelId k) { return "K" + std::to_string(static_cast<int>(k)); }

/// Distance underlying each kernel. K7 is built from the raw squared gap.
inline DistanceKind kernel_distance(KernelId k) {
  switch (k) {
    case KernelId::K1: return DistanceKind::AWD;
    case KernelId::K2: return DistanceKind::DWD;
    case KernelId::K3: return DistanceKind::ALD;
    case KernelId::K4: return DistanceKind::DLD;
    case KernelId::K5: return DistanceKind::Spearman;
    case KernelId::K6: return DistanceKind::Pearson;
    case KernelId::K7: return DistanceKind::EuclidSq;
  }
  throw ConfigError("unknown kernel");
}

/// Entities in row order (the index first when built from a panel) and their pairwise values.
struct LabeledMatrix {
  std::vector<std::string> entities;
  Matrix values;

  std::size_t size() const { return entities.size(); }
};

using SimilarityMatrix = LabeledMatrix;
using DistanceMatrix = LabeledMatrix;

struct KernelSpec {
  KernelId id = KernelId::K1;
  /// Distance parameters; the kind is implied by the kernel.
  DistanceSpec distance;
  /// Neighbour rank used by local scaling.
  int neighbor = 7;
  /// Global sigma^2 instead of local scaling when set.
  std::optional<double> fixed_sigma2;
};

/// Distance from each entity to its m-th nearest other entity.
inline Vector neighbor_distances(const Matrix& D, int m) {
  const auto n = D.rows();
  if (D.cols() != n) throw DataError("distance matrix is not square");
  if (m < 1 || m >= n) throw ConfigError("neighbour rank m=" + std::to_string(m) + " must lie in [1, " + std::to_string(n - 1) + "]");
  Vector out(n);
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row.push_back(D(i, j));
    std::nth_element(row.begin(), row.begin() + (m - 1), row.end());
    out(i) = row[static_cast<std::size_t>(m - 1)];
  }
  return out;
}

/// sigma_ij = s_i * s_j with s_i the m-th neighbour distance of entity i. A zero s_i is
/// replaced by 1e-12 times the median positive off-diagonal distance.
inline Matrix local_scales(const Matrix& D, int m) {
  Vector s = neighbor_distances(D, m);
  if ((s.array() <= 0).any()) {
    std::vector<double> pos;
    for (Eigen::Index i = 0; i < D.rows(); ++i)
      for (Eigen::Index j = i + 1; j < D.cols(); ++j)
        if (D(i, j) > 0) pos.push_back(D(i, j));
    double floor = 1e-12;
    if (!pos.empty()) {
      std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(pos.size() / 2), pos.end());
      floor *= pos[pos.size() / 2];
    }
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) <= 0) s(i) = floor;
  }
  return s * s.transpose();
}

/// exp(-d_ij^2 / sigma_ij) under local scaling (or a fixed sigma^2); K7 is -d_ij with d the squared gap.
inline Matrix kernel_from_distances(const Matrix& D, KernelId id, int m, std::optional<double> fixed_sigma2 = std::nullopt) {
  if (id == KernelId::K7) return -D;
  Matrix scale;
  if (fixed_sigma2) {
    if (!(*fixed_sigma2 > 0)) throw ConfigError("sigma^2 must be positive");
    scale = Matrix::Constant(D.rows(), D.cols(), *fixed_sigma2);
  } else {
    scale = local_scales(D, m);
  }
  Matrix K(D.rows(), D.cols());
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = 0; j < D.cols(); ++j) K(i, j) = i == j ? 1.0 : std::exp(-D(i, j) * D(i, j) / scale(i, j));
  return K;
}

/// Series of the index followed by every asset.
inline std::vector<std::span<const double>> entity_series(const ReturnPanel& panel) {
  std::vector<std::span<const double>> out;
  out.emplace_back(panel.index_returns);
  for (std::size_t i = 0; i < panel.assets(); ++i) out.push_back(panel.asset(i));
  return out;
}

inline std::vector<std::string> entity_ids(const ReturnPanel& panel) {
  std::vector<std::string> out{panel.index_id};
  out.insert(out.end(), panel.asset_ids.begin(), panel.asset_ids.end());
  return out;
}

struct KernelResult {
  DistanceMatrix distances;
  SimilarityMatrix similarity;
};

/// Kernel similarity over index + assets, together with the distance matrix it came from.
inline KernelResult build_kernel(const std::vector<std::span<const double>>& series, const std::vector<std::string>& ids,
                                 const KernelSpec& spec, unsigned threads = default_threads()) {
  if (series.size() < 2) throw DataError("similarity needs at least 2 entities");
  if (ids.size() != series.size()) throw DataError("entity id count differs from series count");
  DistanceSpec ds = spec.distance;
  ds.kind = kernel_distance(spec.id);
  KernelResult r;
  r.distances.entities = ids;
  r.distances.values = distance_matrix(series, ds, threads);
  r.similarity.entities = ids;
  r.similarity.values = kernel_from_distances(r.distances.values, spec.id, spec.neighbor, spec.fixed_sigma2);
  return r;
}

inline KernelResult build_kernel_matrix(const ReturnPanel& panel, const KernelSpec& spec, unsigned threads = default_threads()) {
  return build_kernel(entity_series(panel), entity_ids(panel), spec, threads);
}

/// Square CSV: header row of entity ids, then one row per entity led by its id.
inline void write_square_csv(std::ostream& os, const LabeledMatrix& m) {
  os.precision(17);
  os << "entity";
  for (const auto& e : m.entities) os << ',' << e;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << m.entities[i];
    for (std::size_t j = 0; j < m.size(); ++j) os << ',' << m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    os << '\n';
  }
}

}  // namespace tdaport
