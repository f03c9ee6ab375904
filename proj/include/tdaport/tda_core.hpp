#pragma once

#include "tdaport/error.hpp"
#include "tdaport/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

namespace tdaport {

/// Delay-coordinate reconstruction of a scalar series; one point per row.
struct PointCloud {
  RowMatrix points;
  int embedding_dim = 2;
  int delay = 1;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  int dim = 0;
  bool essential = false;  // death == +inf

  double persistence() const { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
  std::vector<PersistencePair> features;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
  bool has_essential() const {
    return std::any_of(features.begin(), features.end(), [](const auto& f) { return f.essential; });
  }
};

struct FiltrationSpec {
  int max_dim = 1;
  /// Truncation radius; nullopt means no truncation (the full complex).
  std::optional<double> max_radius;
  /// Features with death - birth <= min_persistence are discarded (zero-length pairs always are).
  double min_persistence = 0.0;
};

/// Row j is (x_j, x_{j+delay}, ..., x_{j+(d-1)delay}).
inline PointCloud takens_embed(std::span<const double> series, int d, int delay) {
  if (d < 1 || delay < 1) throw ConfigError("embedding dimension and delay must be >= 1");
  const std::size_t span_len = static_cast<std::size_t>(d - 1) * static_cast<std::size_t>(delay);
  if (series.size() < span_len + 1)
    throw DataError("series of length " + std::to_string(series.size()) + " too short for embedding d=" + std::to_string(d) +
                    " tau=" + std::to_string(delay));
  const std::size_t rows = series.size() - span_len;
  PointCloud cloud;
  cloud.embedding_dim = d;
  cloud.delay = delay;
  cloud.points.resize(static_cast<Eigen::Index>(rows), d);
  for (std::size_t j = 0; j < rows; ++j)
    for (int c = 0; c < d; ++c) cloud.points(static_cast<Eigen::Index>(j), c) = series[j + static_cast<std::size_t>(c * delay)];
  return cloud;
}

/// Euclidean distance whose value does not depend on coordinate order: the squared
/// components are summed in sorted order, so coordinate permutations give bit-identical results.
inline double point_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  const Eigen::Index d = a.cols();
  if (d <= 8) {
    double sq[8];
    for (Eigen::Index c = 0; c < d; ++c) {
      const double diff = a(i, c) - b(j, c);
      sq[c] = diff * diff;
    }
    std::sort(sq, sq + d);
    double s = 0;
    for (Eigen::Index c = 0; c < d; ++c) s += sq[c];
    return std::sqrt(s);
  }
  std::vector<double> sq(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) sq[c] = (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
  std::sort(sq.begin(), sq.end());
  return std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0));
}

inline Matrix pairwise_distances(const PointCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Matrix D = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = point_distance(cloud.points, i, cloud.points, j);
  return D;
}

inline double hausdorff_distance(const PointCloud& x, const PointCloud& y) {
  auto directed = [](const RowMatrix& a, const RowMatrix& b) {
    double worst = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < b.rows(); ++j) best = std::min(best, point_distance(a, i, b, j));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(x.points, y.points), directed(y.points, x.points));
}

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent[a] = b;
    return true;
  }
};

struct Edge {
  double diam;
  std::uint32_t i, j;
};

/// Triangle identified by its combinatorial rank; ordered by (diameter, rank).
struct Coface {
  double diam;
  std::uint64_t rank;
  bool operator<(const Coface& o) const { return diam < o.diam || (diam == o.diam && rank < o.rank); }
  bool operator==(const Coface& o) const { return rank == o.rank; }
};

inline std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }
inline std::uint64_t choose3(std::uint64_t n) { return n * (n - 1) * (n - 2) / 6; }

inline std::uint64_t triangle_rank(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
  // sort descending: k > j > i
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  return choose3(a) + choose2(b) + c;
}

inline void add_column(std::vector<Coface>& work, const std::vector<Coface>& other, std::vector<Coface>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(work.begin(), work.end(), other.begin(), other.end(), std::back_inserter(scratch));
  work.swap(scratch);
}

}  // namespace detail

/// Vietoris-Rips persistence in dimensions 0 and (optionally) 1 over Z/2.
///
/// H0 comes from a union-find sweep over edges in filtration order. H1 is computed by
/// reducing the coboundary matrix of the edges (cohomology), processing edges from the
/// latest to the earliest and skipping the spanning-tree edges already paired in H0
/// (clearing). Births and deaths are exact pairwise distances.
inline PersistenceDiagram rips_persistence(const Matrix& dist, const FiltrationSpec& spec = {}) {
  if (spec.max_dim < 0 || spec.max_dim > 1) throw ConfigError("max_dim must be 0 or 1");
  const auto n = static_cast<std::uint32_t>(dist.rows());
  if (n == 0) throw DataError("empty point cloud");
  // Past the enclosing radius (min over points of the farthest distance) the complex is a
  // cone over the centre point, so no feature of positive persistence is born or dies later.
  double radius = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < n; ++i) radius = std::min(radius, dist.col(i).maxCoeff());
  if (spec.max_radius) {
    if (!(*spec.max_radius > 0)) throw ConfigError("max_radius must be positive");
    radius = std::min(radius, *spec.max_radius);
  }

  std::vector<detail::Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (std::uint32_t j = 1; j < n; ++j)
    for (std::uint32_t i = 0; i < j; ++i)
      if (dist(i, j) <= radius) edges.push_back({dist(i, j), i, j});
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    if (a.diam != b.diam) return a.diam < b.diam;
    if (a.j != b.j) return a.j < b.j;
    return a.i < b.i;
  });

  PersistenceDiagram out;
  auto keep = [&](double b, double d) { return d - b > spec.min_persistence; };

  detail::UnionFind uf(n);
  std::vector<char> negative(edges.size(), 0);
  std::size_t components = n;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (uf.unite(edges[e].i, edges[e].j)) {
      negative[e] = 1;
      --components;
      if (keep(0.0, edges[e].diam)) out.features.push_back({0.0, edges[e].diam, 0, false});
    }
  }
  out.features.push_back({0.0, std::numeric_limits<double>::infinity(), 0, true});
  // Components still separate at the truncation radius die there.
  for (std::size_t c = 1; c < components; ++c)
    if (keep(0.0, radius)) out.features.push_back({0.0, radius, 0, false});

  if (spec.max_dim >= 1 && n >= 3) {
    auto coboundary = [&](const detail::Edge& ed, std::vector<detail::Coface>& col) {
      const double* ci = dist.col(ed.i).data();
      const double* cj = dist.col(ed.j).data();
      col.clear();
      for (std::uint32_t k = 0; k < n; ++k) {
        if (k == ed.i || k == ed.j) continue;
        const double td = std::max({ed.diam, ci[k], cj[k]});
        if (td <= radius) col.push_back({td, detail::triangle_rank(ed.i, ed.j, k)});
      }
      std::sort(col.begin(), col.end());
    };
    // Earliest coface of an edge, found without materialising the column.
    auto first_coface = [&](const detail::Edge& ed, detail::Coface& best) {
      const double* ci = dist.col(ed.i).data();
      const double* cj = dist.col(ed.j).data();
      bool found = false;
      for (std::uint32_t k = 0; k < n; ++k) {
        if (k == ed.i || k == ed.j) continue;
        const double td = std::max({ed.diam, ci[k], cj[k]});
        if (td > radius || (found && td > best.diam)) continue;
        const detail::Coface c{td, detail::triangle_rank(ed.i, ed.j, k)};
        if (!found || c < best) {
          best = c;
          found = true;
        }
      }
      return found;
    };

    // A pivot owner is either an unreduced coboundary (recomputed on demand) or a stored column.
    struct Owner {
      std::size_t edge;
      std::ptrdiff_t stored;
    };
    std::unordered_map<std::uint64_t, Owner> pivot_of;
    pivot_of.reserve(edges.size());
    std::vector<std::vector<detail::Coface>> stored;
    std::vector<detail::Coface> work, other, scratch;

    for (std::size_t e = edges.size(); e-- > 0;) {
      if (negative[e]) continue;
      const auto& ed = edges[e];
      detail::Coface pivot{};
      if (!first_coface(ed, pivot)) {
        if (keep(ed.diam, radius)) out.features.push_back({ed.diam, radius, 1, false});
        continue;
      }
      if (!pivot_of.count(pivot.rank)) {
        if (keep(ed.diam, pivot.diam)) out.features.push_back({ed.diam, pivot.diam, 1, false});
        pivot_of.emplace(pivot.rank, Owner{e, -1});
        continue;
      }
      coboundary(ed, work);
      while (!work.empty()) {
        auto it = pivot_of.find(work.front().rank);
        if (it == pivot_of.end()) break;
        if (it->second.stored >= 0) {
          detail::add_column(work, stored[static_cast<std::size_t>(it->second.stored)], scratch);
        } else {
          coboundary(edges[it->second.edge], other);
          detail::add_column(work, other, scratch);
        }
      }
      if (work.empty()) {
        // Cocycle never killed inside the truncated complex.
        if (keep(ed.diam, radius)) out.features.push_back({ed.diam, radius, 1, false});
        continue;
      }
      const double death = work.front().diam;
      if (keep(ed.diam, death)) out.features.push_back({ed.diam, death, 1, false});
      pivot_of.emplace(work.front().rank, Owner{e, static_cast<std::ptrdiff_t>(stored.size())});
      stored.push_back(work);
    }
  }

  std::sort(out.features.begin(), out.features.end(), [](const auto& a, const auto& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });
  return out;
}

inline PersistenceDiagram rips_persistence(const PointCloud& cloud, const FiltrationSpec& spec = {}) {
  if (cloud.size() == 0) throw DataError("empty point cloud");
  return rips_persistence(pairwise_distances(cloud), spec);
}

inline PersistenceDiagram diagram_restrict(const PersistenceDiagram& d, int dim) {
  PersistenceDiagram out;
  for (const auto& f : d.features)
    if (f.dim == dim) out.features.push_back(f);
  return out;
}

/// Copy without the essential (infinite) class.
inline PersistenceDiagram diagram_finite(const PersistenceDiagram& d) {
  PersistenceDiagram out;
  for (const auto& f : d.features)
    if (!f.essential) out.features.push_back(f);
  return out;
}

/// CSV rows "dim,birth,death" with death written as "inf" for the essential class.
inline void write_diagram_csv(std::ostream& os, const PersistenceDiagram& d) {
  os << "dim,birth,death\n";
  os.precision(17);
  for (const auto& f : d.features) {
    os << f.dim << ',' << f.birth << ',';
    if (f.essential)
      os << "inf";
    else
      os << f.death;
    os << '\n';
  }
}

}  // namespace tdaport
