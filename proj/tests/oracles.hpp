#pragma once

// Independent reference solvers used by the unit and acceptance tests.

#include "tdaport/portfolio_opt.hpp"
#include "tdaport/tda_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <limits>
#include <vector>

namespace oracle {

/// Minimum of 0.5 w'Qw + c'w + k over the simplex by enumerating every support and solving its
/// equality-constrained KKT system; a support qualifies when its weights are non-negative and
/// every excluded coordinate has a non-negative bound multiplier.
inline double simplex_qp_by_supports(const tdaport::SimplexQP& qp, Eigen::VectorXd* argmin = nullptr) {
  const int n = static_cast<int>(qp.Q.rows());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> S;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) S.push_back(i);
    const int k = static_cast<int>(S.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) K(a, b) = qp.Q(S[a], S[b]);
      K(a, k) = 1;
      K(k, a) = 1;
      rhs(a) = -qp.c(S[a]);
    }
    rhs(k) = 1;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    if ((K * sol - rhs).norm() > 1e-9 * (1 + rhs.norm())) continue;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    bool ok = true;
    for (int a = 0; a < k; ++a) {
      if (sol(a) < -1e-12) ok = false;
      w(S[a]) = std::max(0.0, sol(a));
    }
    if (!ok) continue;
    w /= w.sum();
    const double nu = -sol(k);
    const Eigen::VectorXd g = qp.Q * w + qp.c;
    for (int i = 0; i < n; ++i)
      if (!(mask >> i & 1u) && g(i) - nu < -1e-9 * (1 + g.cwiseAbs().maxCoeff())) ok = false;
    if (!ok) continue;
    const double obj = qp.objective(w);
    if (obj < best) {
      best = obj;
      if (argmin) *argmin = w;
    }
  }
  return best;
}

/// Best tracking error variance over all supports of size <= kmax, each refit exactly.
inline double tracking_by_supports(const Eigen::MatrixXd& R, const Eigen::VectorXd& r0, int kmax) {
  const int n = static_cast<int>(R.cols());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > kmax) continue;
    std::vector<int> S;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) S.push_back(i);
    Eigen::MatrixXd sub(R.rows(), static_cast<Eigen::Index>(S.size()));
    for (std::size_t a = 0; a < S.size(); ++a) sub.col(static_cast<Eigen::Index>(a)) = R.col(S[a]);
    best = std::min(best, simplex_qp_by_supports(tdaport::tracking_problem(sub, r0)));
  }
  return best;
}

/// Sample moments by direct two-pass sums.
struct Moments2 {
  double m1, m2, v1, v2, c;
};

inline Moments2 moments2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  Moments2 m{0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.m1 += x[i] / n;
    m.m2 += y[i] / n;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.v1 += (x[i] - m.m1) * (x[i] - m.m1) / (n - 1);
    m.v2 += (y[i] - m.m2) * (y[i] - m.m2) / (n - 1);
    m.c += (x[i] - m.m1) * (y[i] - m.m2) / (n - 1);
  }
  return m;
}

/// Sharpe difference statistic with Memmel's variance term, or with means unsquared when printed = true.
inline double sharpe_z(const std::vector<double>& x, const std::vector<double>& y, bool printed) {
  const auto m = moments2(x, y);
  const double s1 = std::sqrt(m.v1), s2 = std::sqrt(m.v2);
  const double a = printed ? m.m1 : m.m1 * m.m1, b = printed ? m.m2 : m.m2 * m.m2;
  const double ups = (2 * m.v1 * m.v2 - 2 * s1 * s2 * m.c + 0.5 * a * m.v2 + 0.5 * b * m.v1 - m.m1 * m.m2 * m.c * m.c / (s1 * s2)) /
                     static_cast<double>(x.size());
  return (s2 * m.m1 - s1 * m.m2) / std::sqrt(ups);
}

/// Delta-method CEQ difference statistic evaluated as grad' Theta grad with explicit matrices.
inline double ceq_z(const std::vector<double>& x, const std::vector<double>& y, double gamma) {
  const auto m = moments2(x, y);
  Eigen::Matrix4d theta = Eigen::Matrix4d::Zero();
  theta(0, 0) = m.v1;
  theta(1, 1) = m.v2;
  theta(0, 1) = theta(1, 0) = m.c;
  theta(2, 2) = 2 * m.v1 * m.v1;
  theta(3, 3) = 2 * m.v2 * m.v2;
  theta(2, 3) = theta(3, 2) = 2 * m.c * m.c;
  const Eigen::Vector4d grad(1, -1, -gamma / 2, gamma / 2);
  const double se = std::sqrt(grad.dot(theta * grad) / static_cast<double>(x.size()));
  return ((m.m1 - gamma / 2 * m.v1) - (m.m2 - gamma / 2 * m.v2)) / se;
}

// Exhaustive search over partial matchings; unmatched points go to the diagonal.
inline double brute_wasserstein(const tdaport::PersistenceDiagram& A, const tdaport::PersistenceDiagram& B, double p) {
  const auto n1 = A.size(), n2 = B.size();
  std::vector<char> used(n2, 0);
  double best = std::numeric_limits<double>::infinity();
  auto half = [](const tdaport::PersistencePair& a) { return 0.5 * (a.death - a.birth); };
  auto rec = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == n1) {
      for (std::size_t j = 0; j < n2; ++j)
        if (!used[j]) acc += std::pow(half(B.features[j]), p);
      best = std::min(best, acc);
      return;
    }
    self(self, i + 1, acc + std::pow(half(A.features[i]), p));
    for (std::size_t j = 0; j < n2; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const double c = std::max(std::abs(A.features[i].birth - B.features[j].birth), std::abs(A.features[i].death - B.features[j].death));
      self(self, i + 1, acc + std::pow(c, p));
      used[j] = 0;
    }
  };
  rec(rec, 0, 0.0);
  return std::pow(best, 1.0 / p);
}

inline double brute_bottleneck(const tdaport::PersistenceDiagram& A, const tdaport::PersistenceDiagram& B) {
  const auto n1 = A.size(), n2 = B.size();
  std::vector<char> used(n2, 0);
  double best = std::numeric_limits<double>::infinity();
  auto half = [](const tdaport::PersistencePair& a) { return 0.5 * (a.death - a.birth); };
  auto rec = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == n1) {
      for (std::size_t j = 0; j < n2; ++j)
        if (!used[j]) acc = std::max(acc, half(B.features[j]));
      best = std::min(best, acc);
      return;
    }
    self(self, i + 1, std::max(acc, half(A.features[i])));
    for (std::size_t j = 0; j < n2; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const double c = std::max(std::abs(A.features[i].birth - B.features[j].birth), std::abs(A.features[i].death - B.features[j].death));
      self(self, i + 1, std::max(acc, c));
      used[j] = 0;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace oracle
