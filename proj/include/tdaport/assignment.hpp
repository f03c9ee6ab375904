#pragma once

#include "tdaport/types.hpp"

#include <limits>
#include <vector>

namespace tdaport {

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;  // sum of the assigned entries, accumulated in row order
};

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with potentials, O(n^3)).
inline Assignment hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(n), -1);
  if (n == 0) return out;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.cost += cost(i, out.row_to_col[i]);
  return out;
}

/// True when the bipartite graph {(i,j) : allowed(i,j)} on n+n vertices has a perfect matching.
template <typename Allowed>
bool has_perfect_matching(int n, Allowed&& allowed) {
  std::vector<int> match_col(static_cast<std::size_t>(n), -1);
  std::vector<char> seen(static_cast<std::size_t>(n));
  auto augment = [&](auto&& self, int row) -> bool {
    for (int c = 0; c < n; ++c) {
      if (seen[c] || !allowed(row, c)) continue;
      seen[c] = 1;
      if (match_col[c] < 0 || self(self, match_col[c])) {
        match_col[c] = row;
        return true;
      }
    }
    return false;
  };
  for (int r = 0; r < n; ++r) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(augment, r)) return false;
  }
  return true;
}

}  // namespace tdaport
