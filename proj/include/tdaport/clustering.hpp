#pragma once

#include "tdaport/assignment.hpp"
#include "tdaport/error.hpp"
#include "tdaport/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace tdaport {

/// Partition of entities 0..n-1. Cluster c is represented by entity exemplars[c], and
/// clusters are numbered in increasing order of their exemplar.
struct Clustering {
  std::vector<int> labels;
  std::vector<std::size_t> exemplars;
  int iterations = 0;
  bool converged = true;

  std::size_t size() const { return labels.size(); }
  std::size_t clusters() const { return exemplars.size(); }
  std::vector<std::size_t> members(int c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) out.push_back(i);
    return out;
  }
  bool is_exemplar(std::size_t i) const { return std::find(exemplars.begin(), exemplars.end(), i) != exemplars.end(); }
};

namespace detail {

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DataError(std::string(what) + " matrix is not square");
  if (m.rows() == 0) throw DataError(std::string(what) + " matrix is empty");
}

/// Orders exemplars ascending and assigns each entity to the exemplar chosen by `pick`.
template <typename Pick>
Clustering assign_to_exemplars(std::size_t n, std::vector<std::size_t> ex, Pick&& pick) {
  std::sort(ex.begin(), ex.end());
  Clustering c;
  c.exemplars = ex;
  c.labels.assign(n, -1);
  for (std::size_t k = 0; k < ex.size(); ++k) c.labels[ex[k]] = static_cast<int>(k);
  for (std::size_t i = 0; i < n; ++i)
    if (c.labels[i] < 0) c.labels[i] = static_cast<int>(pick(i, ex));
  return c;
}

inline double median_off_diagonal(const Matrix& S) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index j = 0; j < S.cols(); ++j)
      if (i != j) v.push_back(S(i, j));
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

enum class PreferenceRule { Median, Minimum, Value };

struct APCParams {
  double damping = 0.5;
  PreferenceRule preference = PreferenceRule::Median;
  double preference_value = 0.0;  // used with PreferenceRule::Value
  int max_iterations = 500;
  int stable_iterations = 25;

  void validate() const {
    if (!(damping >= 0 && damping < 1)) throw ConfigError("damping must lie in [0, 1)");
    if (max_iterations < 1 || stable_iterations < 1) throw ConfigError("iteration counts must be positive");
  }
};

inline double resolve_preference(const Matrix& S, const APCParams& p) {
  switch (p.preference) {
    case PreferenceRule::Median: return detail::median_off_diagonal(S);
    case PreferenceRule::Minimum: {
      double m = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < S.rows(); ++i)
        for (Eigen::Index j = 0; j < S.cols(); ++j)
          if (i != j) m = std::min(m, S(i, j));
      return std::isfinite(m) ? m : 0.0;
    }
    case PreferenceRule::Value: return p.preference_value;
  }
  return 0.0;
}

/// Affinity propagation by damped responsibility/availability message passing.
inline Clustering affinity_propagation(const Matrix& similarity, const APCParams& params = {}) {
  detail::require_square(similarity, "similarity");
  params.validate();
  const Eigen::Index n = similarity.rows();
  if (n == 1) return {{0}, {0}, 0, true};
  Matrix S = similarity;
  S.diagonal().setConstant(resolve_preference(similarity, params));
  if (!S.allFinite()) throw NumericalError("similarity matrix has non-finite entries");

  const double lam = params.damping;
  Matrix R = Matrix::Zero(n, n), A = Matrix::Zero(n, n);
  std::vector<char> prev(static_cast<std::size_t>(n), 0), cur(static_cast<std::size_t>(n), 0);
  int stable = 0, it = 0;
  bool converged = false;
  for (it = 1; it <= params.max_iterations; ++it) {
    // responsibilities: row-wise best and second best of a + s
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity(), second = best;
      Eigen::Index arg = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double v = A(i, k) + S(i, k);
        if (v > best) {
          second = best;
          best = v;
          arg = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double fresh = S(i, k) - (k == arg ? second : best);
        R(i, k) = (1 - lam) * fresh + lam * R(i, k);
      }
    }
    // availabilities: column sums of positive responsibilities
    for (Eigen::Index k = 0; k < n; ++k) {
      double pos = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) pos += std::max(0.0, R(i, k));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double fresh = i == k ? pos : std::min(0.0, R(k, k) + pos - std::max(0.0, R(i, k)));
        A(i, k) = (1 - lam) * fresh + lam * A(i, k);
      }
    }
    std::size_t count = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      cur[k] = A(k, k) + R(k, k) > 0;
      count += cur[k];
    }
    stable = cur == prev ? stable + 1 : 1;
    prev.swap(cur);
    if (count > 0 && stable >= params.stable_iterations) {
      converged = true;
      break;
    }
  }
  it = std::min(it, params.max_iterations);

  std::vector<std::size_t> ex;
  for (Eigen::Index k = 0; k < n; ++k)
    if (A(k, k) + R(k, k) > 0) ex.push_back(static_cast<std::size_t>(k));
  if (ex.empty()) {
    // No positive self-evidence: keep the single strongest candidate.
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n; ++k)
      if (A(k, k) + R(k, k) > A(best, best) + R(best, best)) best = k;
    ex.push_back(static_cast<std::size_t>(best));
    converged = false;
  }
  auto c = detail::assign_to_exemplars(static_cast<std::size_t>(n), ex, [&](std::size_t i, const std::vector<std::size_t>& e) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < e.size(); ++k)
      if (S(i, e[k]) > S(i, e[arg])) arg = k;
    return arg;
  });
  c.iterations = it;
  c.converged = converged;
  return c;
}

/// Affinity propagation whose preference is bisected until the requested number of clusters appears
/// (or the closest count found when it never does). A run that does not converge is repeated with
/// damping 0.9. The bracket starts at [min, max] of the off-diagonal similarities and its lower
/// end is pushed down by doubling steps until the count falls below k.
inline Clustering affinity_propagation_k(const Matrix& similarity, std::size_t k, APCParams params = {}, int steps = 40) {
  detail::require_square(similarity, "similarity");
  if (k < 1 || k > static_cast<std::size_t>(similarity.rows())) throw ConfigError("cluster count out of range");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < similarity.rows(); ++i)
    for (Eigen::Index j = 0; j < similarity.cols(); ++j)
      if (i != j) {
        lo = std::min(lo, similarity(i, j));
        hi = std::max(hi, similarity(i, j));
      }
  if (!std::isfinite(lo)) return affinity_propagation(similarity, params);
  const double span = std::max(hi - lo, 1e-12);
  params.preference = PreferenceRule::Value;
  auto run = [&](double pref) {
    params.preference_value = pref;
    auto c = affinity_propagation(similarity, params);
    if (!c.converged && params.damping < 0.9) {
      APCParams heavy = params;
      heavy.damping = 0.9;
      auto c2 = affinity_propagation(similarity, heavy);
      if (c2.converged) return c2;
    }
    return c;
  };
  std::optional<Clustering> best;
  auto gap = [&](const Clustering& c) { return c.clusters() > k ? c.clusters() - k : k - c.clusters(); };
  auto consider = [&](Clustering c) {
    if (!best || gap(c) < gap(*best) || (gap(c) == gap(*best) && c.converged && !best->converged)) best = std::move(c);
  };
  if (k > 1) {
    double step = span;
    for (int e = 0; e < 30; ++e) {
      auto c = run(lo);
      const bool below = c.clusters() < k;
      consider(std::move(c));
      if (best->clusters() == k) return *best;
      if (below) break;
      hi = lo;
      lo -= step;
      step *= 2;
    }
  } else {
    lo -= span * static_cast<double>(similarity.rows());
  }
  for (int s = 0; s < steps; ++s) {
    auto c = run(0.5 * (lo + hi));
    const std::size_t got = c.clusters();
    consider(std::move(c));
    if (got == k) break;
    (got < k ? lo : hi) = params.preference_value;
  }
  return *best;
}

/// Mean silhouette (b - a) / max(a, b) over entities; members of singleton clusters count 0.
inline double silhouette_score(const Matrix& D, const std::vector<int>& labels) {
  detail::require_square(D, "distance");
  const auto n = static_cast<std::size_t>(D.rows());
  if (labels.size() != n) throw DataError("label count differs from matrix size");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw DataError("silhouette needs at least 2 clusters");
  std::vector<int> ids;
  for (const auto& kv : sizes) ids.push_back(kv.first);
  double total = 0;
  std::vector<double> sum(ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), labels[j]) - ids.begin());
      sum[c] += D(i, j);
    }
    double a = 0, b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ids.size(); ++c) {
      if (ids[c] == labels[i])
        a = sum[c] / static_cast<double>(sizes[ids[c]] - 1);
      else
        b = std::min(b, sum[c] / static_cast<double>(sizes[ids[c]]));
    }
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

struct DampingChoice {
  double damping = 0.5;
  Clustering clustering;
  double silhouette = std::numeric_limits<double>::quiet_NaN();
  /// True when no grid value produced two or more clusters.
  bool fallback = false;
  std::vector<double> scores;  // per grid value, NaN where undefined
};

/// Runs affinity propagation for every damping value and keeps the best mean silhouette
/// (ties go to the smaller damping). When silhouette is undefined everywhere, the largest
/// converged damping (else the largest) is returned and flagged.
inline DampingChoice select_damping(const Matrix& S, const std::vector<double>& grid, const Matrix& D, APCParams params = {}) {
  if (grid.empty()) throw ConfigError("damping grid is empty");
  std::vector<double> g = grid;
  std::sort(g.begin(), g.end());
  DampingChoice best;
  std::vector<Clustering> runs;
  bool any = false;
  for (double lam : g) {
    params.damping = lam;
    runs.push_back(affinity_propagation(S, params));
    double sc = std::numeric_limits<double>::quiet_NaN();
    if (runs.back().clusters() >= 2) sc = silhouette_score(D, runs.back().labels);
    best.scores.push_back(sc);
    if (!std::isnan(sc) && (!any || sc > best.silhouette)) {
      any = true;
      best.silhouette = sc;
      best.damping = lam;
      best.clustering = runs.back();
    }
  }
  if (!any) {
    best.fallback = true;
    std::size_t pick = g.size() - 1;
    for (std::size_t k = g.size(); k-- > 0;)
      if (runs[k].converged) {
        pick = k;
        break;
      }
    best.damping = g[pick];
    best.clustering = runs[pick];
  }
  return best;
}

struct KMedoidsResult {
  Clustering clustering;
  double cost = 0.0;
  std::vector<double> cost_trace;  // objective after initialisation and after every swap
};

namespace detail {

inline double medoid_cost(const Matrix& D, const std::vector<std::size_t>& med) {
  double c = 0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (auto k : med) m = std::min(m, D(i, static_cast<Eigen::Index>(k)));
    c += m;
  }
  return c;
}

/// Steepest-descent PAM swaps from the given medoids.
inline KMedoidsResult pam(const Matrix& D, std::vector<std::size_t> med, int max_swaps) {
  const auto n = static_cast<std::size_t>(D.rows());
  KMedoidsResult r;
  double cost = medoid_cost(D, med);
  r.cost_trace.push_back(cost);
  std::vector<char> is_med(n, 0);
  for (auto m : med) is_med[m] = 1;
  std::vector<double> d1(n), d2(n);
  std::vector<std::size_t> near(n);
  int swaps = 0;
  for (; swaps < max_swaps; ++swaps) {
    for (std::size_t i = 0; i < n; ++i) {
      d1[i] = d2[i] = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < med.size(); ++k) {
        const double v = D(i, med[k]);
        if (v < d1[i]) {
          d2[i] = d1[i];
          d1[i] = v;
          near[i] = k;
        } else if (v < d2[i]) {
          d2[i] = v;
        }
      }
    }
    double best_delta = 0;
    std::size_t best_k = 0, best_h = 0;
    for (std::size_t k = 0; k < med.size(); ++k)
      for (std::size_t h = 0; h < n; ++h) {
        if (is_med[h]) continue;
        double delta = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dh = D(i, h);
          const double keep = near[i] == k ? d2[i] : d1[i];
          delta += std::min(keep, dh) - d1[i];
        }
        if (delta < best_delta - 1e-12 * std::max(1.0, cost)) {
          best_delta = delta;
          best_k = k;
          best_h = h;
        }
      }
    if (best_delta >= 0) break;
    is_med[med[best_k]] = 0;
    is_med[best_h] = 1;
    med[best_k] = best_h;
    cost = medoid_cost(D, med);
    r.cost_trace.push_back(cost);
  }
  r.cost = cost;
  r.clustering = assign_to_exemplars(n, med, [&](std::size_t i, const std::vector<std::size_t>& e) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < e.size(); ++k)
      if (D(i, e[k]) < D(i, e[arg])) arg = k;
    return arg;
  });
  r.clustering.iterations = swaps;
  r.clustering.converged = swaps < max_swaps;
  return r;
}

}  // namespace detail

/// PAM k-medoids. The first start is deterministic: the global medoid, then repeatedly the entity
/// farthest from its nearest chosen medoid. `restarts` extra random starts drawn from `seed`
/// replace the result only when strictly cheaper.
inline KMedoidsResult k_medoids(const Matrix& D, std::size_t K, std::uint64_t seed = 0, int restarts = 0, int max_swaps = 10000) {
  detail::require_square(D, "distance");
  const auto n = static_cast<std::size_t>(D.rows());
  if (K < 1 || K > n) throw ConfigError("K=" + std::to_string(K) + " out of range [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> med;
  {
    const Vector tot = D.rowwise().sum();
    Eigen::Index first = 0;
    for (Eigen::Index i = 1; i < tot.size(); ++i)
      if (tot(i) < tot(first)) first = i;
    med.push_back(static_cast<std::size_t>(first));
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = D(i, first);
    while (med.size() < K) {
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(med.begin(), med.end(), i) != med.end()) continue;
        if (far == n || nearest[i] > nearest[far]) far = i;
      }
      med.push_back(far);
      for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], D(i, far));
    }
  }
  auto best = detail::pam(D, med, max_swaps);
  std::mt19937_64 rng(seed);
  for (int r = 0; r < restarts; ++r) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> pick;
    std::sample(all.begin(), all.end(), std::back_inserter(pick), static_cast<std::ptrdiff_t>(K), rng);
    auto cand = detail::pam(D, pick, max_swaps);
    if (cand.cost < best.cost) best = std::move(cand);
  }
  return best;
}

/// Agglomerative clustering with average linkage, cut at K clusters. Each cluster is
/// represented by its member with the smallest total distance to the other members.
inline Clustering hierarchical(const Matrix& D, std::size_t K) {
  detail::require_square(D, "distance");
  const auto n = static_cast<std::size_t>(D.rows());
  if (K < 1 || K > n) throw ConfigError("K=" + std::to_string(K) + " out of range [1, " + std::to_string(n) + "]");
  Matrix L = D;
  std::vector<std::size_t> size(n, 1), root(n);
  std::iota(root.begin(), root.end(), std::size_t{0});
  std::vector<char> alive(n, 1);
  std::size_t clusters = n;
  while (clusters > K) {
    std::size_t bi = n, bj = n;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (alive[j] && L(i, j) < bd) {
          bd = L(i, j);
          bi = i;
          bj = j;
        }
    }
    // merge bj into bi (Lance-Williams update for average linkage)
    const double wi = static_cast<double>(size[bi]), wj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      L(bi, k) = L(k, bi) = (wi * L(bi, k) + wj * L(bj, k)) / (wi + wj);
    }
    size[bi] += size[bj];
    alive[bj] = 0;
    for (auto& r : root)
      if (r == bj) r = bi;
    --clusters;
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[root[i]].push_back(i);
  std::vector<std::size_t> reps;
  std::map<std::size_t, std::size_t> rep_of_root;
  for (const auto& [r, mem] : groups) {
    std::size_t best = mem.front();
    double bestsum = std::numeric_limits<double>::infinity();
    for (auto i : mem) {
      double s = 0;
      for (auto j : mem) s += D(i, j);
      if (s < bestsum) {
        bestsum = s;
        best = i;
      }
    }
    reps.push_back(best);
    rep_of_root[r] = best;
  }
  auto c = detail::assign_to_exemplars(n, reps, [&](std::size_t i, const std::vector<std::size_t>& e) {
    return static_cast<std::size_t>(std::lower_bound(e.begin(), e.end(), rep_of_root[root[i]]) - e.begin());
  });
  c.iterations = static_cast<int>(n - K);
  return c;
}

/// Chance-corrected agreement of two partitions (contingency-table form).
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t k = 0; k < a.size(); ++k) {
    nij[{a[k], b[k]}] += 1;
    ai[a[k]] += 1;
    bj[b[k]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sij = 0, sa = 0, sb = 0;
  for (const auto& kv : nij) sij += c2(kv.second);
  for (const auto& kv : ai) sa += c2(kv.second);
  for (const auto& kv : bj) sb += c2(kv.second);
  const double expected = n > 1 ? sa * sb / c2(n) : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // both trivial (all singletons or one block)
  return (sij - expected) / (max_index - expected);
}

/// |A n B| / |A u B|; 1 when both are empty.
template <typename T>
double jaccard_similarity(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Largest fraction of entities whose cluster maps to their class under a one-to-one
/// cluster-to-class assignment.
inline double clustering_accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
  if (labels.size() != truth.size()) throw DataError("label vectors differ in length");
  if (labels.empty()) return 1.0;
  std::map<int, int> li, ti;
  for (int l : labels) li.emplace(l, static_cast<int>(li.size()));
  for (int t : truth) ti.emplace(t, static_cast<int>(ti.size()));
  const int m = static_cast<int>(std::max(li.size(), ti.size()));
  Matrix cost = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < labels.size(); ++k) cost(li[labels[k]], ti[truth[k]]) -= 1.0;
  const auto a = hungarian(cost);
  return -a.cost / static_cast<double>(labels.size());
}

/// CSV rows "entity_id,cluster_id,is_exemplar".
inline void write_clustering_csv(std::ostream& os, const Clustering& c, const std::vector<std::string>& ids) {
  os << "entity_id,cluster_id,is_exemplar\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    os << (i < ids.size() ? ids[i] : std::to_string(i)) << ',' << c.labels[i] << ',' << (c.is_exemplar(i) ? 1 : 0) << '\n';
}

}  // namespace tdaport
