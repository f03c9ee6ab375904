#pragma once

#include "tdaport/error.hpp"
#include "tdaport/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace tdaport {

/// Long-only fully invested weights over a candidate list.
struct Portfolio {
  std::vector<std::size_t> assets;  // candidate indices the weights refer to
  Vector weights;
  double objective = 0.0;
  int iterations = 0;

  double hhi() const { return weights.squaredNorm(); }
  std::size_t holdings(double tol = 1e-10) const {
    return static_cast<std::size_t>((weights.array() > tol).count());
  }
};

struct MomentEstimates {
  Vector mu;
  Matrix sigma;
};

/// Sample mean and covariance (denominator T-1) of a T x n return matrix, one column per asset.
inline MomentEstimates estimate_moments(const Matrix& R) {
  if (R.rows() < 2) throw DataError("moment estimation needs at least 2 observations");
  if (!R.allFinite()) throw NumericalError("return matrix has non-finite entries");
  MomentEstimates m;
  m.mu = R.colwise().mean().transpose();
  const Matrix C = R.rowwise() - m.mu.transpose();
  m.sigma = (C.transpose() * C) / static_cast<double>(R.rows() - 1);
  return m;
}

/// Symmetrises and, when the smallest eigenvalue is below -1e-10, adds a ridge lifting it to 1e-10.
inline Matrix regularize_covariance(const Matrix& S) {
  Matrix out = 0.5 * (S + S.transpose());
  if (out.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(out, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin < -1e-10) out.diagonal().array() += 1e-10 - lmin;
  return out;
}

/// min 0.5 w'Qw + c'w subject to sum(w) = 1, w >= 0.
struct SimplexQP {
  Matrix Q;
  Vector c;
  double constant = 0.0;  // added to the reported objective

  double objective(const Vector& w) const { return 0.5 * w.dot(Q * w) + c.dot(w) + constant; }
};

namespace detail {

/// Orthonormal basis of {y in R^k : sum(y) = 0}.
inline Matrix sum_zero_basis(Eigen::Index k) {
  Matrix M = Matrix::Identity(k, k);
  M.col(0).setOnes();
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix Qf = qr.householderQ() * Matrix::Identity(k, k);
  return Qf.rightCols(k - 1);
}

/// Euclidean projection onto the probability simplex (sort-based).
inline Vector project_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Accelerated projected gradient from equal weights; used to locate the support on large problems.
inline Vector projected_gradient_start(const SimplexQP& qp, int iterations) {
  const auto n = qp.Q.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(qp.Q, Eigen::EigenvaluesOnly);
  const double L = es.eigenvalues()(n - 1);
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (!(L > 0)) return w;
  Vector y = w, prev = w;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    w = project_simplex(y - (qp.Q * y + qp.c) / L);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = w + ((t - 1.0) / tn) * (w - prev);
    prev = w;
    t = tn;
  }
  return w;
}

inline constexpr Eigen::Index kWarmStartSize = 40;

}  // namespace detail

/// Largest violation of the optimality conditions of a SimplexQP at w: stationarity on the
/// support, sign of the bound multipliers, feasibility.
inline double kkt_residual(const SimplexQP& qp, const Vector& w, double support_tol = 1e-12) {
  const Vector g = qp.Q * w + qp.c;
  double nu = 0;
  int nf = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > support_tol) {
      nu += g(i);
      ++nf;
    }
  nu = nf ? nu / nf : g.minCoeff();
  double r = std::abs(w.sum() - 1.0);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    r = std::max(r, std::max(0.0, -w(i)));
    r = std::max(r, w(i) > support_tol ? std::abs(g(i) - nu) : std::max(0.0, nu - g(i)));
  }
  return r;
}

/// Primal active-set method. Bound constraints enter the working set when they block a step and
/// leave it when their multiplier g_i - nu is negative (most negative first, ties to the lower
/// index). Zero-curvature descent directions of a singular reduced Hessian are followed to the
/// blocking bound, so rank-deficient problems are handled along a deterministic path. The start is
/// equal weights; above kWarmStartSize candidates it is first moved by a fixed number of
/// accelerated projected-gradient steps and the zero coordinates begin in the working set.
inline Portfolio solve_simplex_qp(const SimplexQP& qp) {
  const Eigen::Index n = qp.Q.rows();
  if (n == 0) throw DataError("empty candidate set");
  if (qp.Q.cols() != n || qp.c.size() != n) throw DataError("QP dimensions disagree");
  if (!qp.Q.allFinite() || !qp.c.allFinite()) throw NumericalError("QP data has non-finite entries");
  const double scale = std::max({1.0, qp.Q.cwiseAbs().maxCoeff(), qp.c.cwiseAbs().maxCoeff()});
  const double tol = 1e-13 * scale;

  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<char> bound(static_cast<std::size_t>(n), 0);
  if (n > detail::kWarmStartSize) {
    w = detail::projected_gradient_start(qp, 400);
    for (Eigen::Index i = 0; i < n; ++i) bound[i] = w(i) <= 0.0;
  }
  const int max_iter = 100 + 20 * static_cast<int>(n);
  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<Eigen::Index> F;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!bound[i]) F.push_back(i);
    const auto k = static_cast<Eigen::Index>(F.size());
    const Vector g = qp.Q * w + qp.c;

    Vector p = Vector::Zero(n);
    bool unbounded_dir = false;
    if (k > 1) {
      const Matrix Z = detail::sum_zero_basis(k);
      Matrix QF(k, k);
      Vector gF(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        gF(a) = g(F[a]);
        for (Eigen::Index b = 0; b < k; ++b) QF(a, b) = qp.Q(F[a], F[b]);
      }
      const Matrix H = Z.transpose() * QF * Z;
      const Vector rhs = -Z.transpose() * gF;
      Vector y;
      Eigen::LLT<Matrix> llt(H);
      const double hscale = std::max(H.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      bool done = false;
      if (llt.info() == Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> ev(H, Eigen::EigenvaluesOnly);
        if (ev.eigenvalues()(0) > 1e-10 * hscale) {
          y = llt.solve(rhs);
          done = true;
        }
      }
      if (!done) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(H);
        const Vector& lam = es.eigenvalues();
        const Matrix& V = es.eigenvectors();
        const double cut = 1e-10 * std::max(hscale, lam.cwiseAbs().maxCoeff());
        Vector coef = V.transpose() * rhs;
        Vector null_part = Vector::Zero(coef.size());
        for (Eigen::Index j = 0; j < coef.size(); ++j)
          if (std::abs(lam(j)) <= cut) null_part(j) = coef(j);
        if (null_part.norm() > 1e-12 * std::max(1.0, rhs.norm()) && null_part.norm() > tol) {
          y = V * null_part;  // flat direction of descent
          unbounded_dir = true;
        } else {
          for (Eigen::Index j = 0; j < coef.size(); ++j) coef(j) = std::abs(lam(j)) <= cut ? 0.0 : coef(j) / lam(j);
          y = V * coef;
        }
      }
      const Vector pF = Z * y;
      for (Eigen::Index a = 0; a < k; ++a) p(F[a]) = pF(a);
    }

    // Releases the bound with the most negative multiplier g_i - nu; false at a KKT point.
    auto release = [&] {
      const Vector gg = qp.Q * w + qp.c;
      double nu = 0;
      for (auto i : F) nu += gg(i);
      nu /= static_cast<double>(k);
      Eigen::Index worst = -1;
      double wl = -1e-12 * scale;
      for (Eigen::Index i = 0; i < n; ++i)
        if (bound[i] && gg(i) - nu < wl) {
          wl = gg(i) - nu;
          worst = i;
        }
      if (worst < 0) return false;
      bound[worst] = 0;
      return true;
    };

    if (p.cwiseAbs().maxCoeff() <= 1e-13) {
      if (!release()) break;
      continue;
    }

    double alpha = unbounded_dir ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index block = -1;
    for (auto i : F)
      if (p(i) < 0) {
        const double r = -w(i) / p(i);
        if (r < alpha) {
          alpha = r;
          block = i;
        }
      }
    if (!std::isfinite(alpha)) throw NumericalError("simplex QP: unbounded direction without a blocking bound");
    w += alpha * p;
    for (Eigen::Index i = 0; i < n; ++i)
      if (w(i) < 0) w(i) = 0.0;
    if (block >= 0) {
      bound[block] = 1;
      w(block) = 0.0;
    } else if (!release()) {
      // full Newton step: minimiser of the current face, and no bound wants to leave
      ++it;
      break;
    }
  }
  if (it >= max_iter) throw NumericalError("simplex QP did not converge in " + std::to_string(max_iter) + " iterations");

  for (Eigen::Index i = 0; i < n; ++i)
    if (w(i) < 1e-15) w(i) = 0.0;
  w /= w.sum();
  Portfolio out;
  out.assets.resize(static_cast<std::size_t>(n));
  std::iota(out.assets.begin(), out.assets.end(), std::size_t{0});
  out.weights = w;
  out.objective = qp.objective(w);
  out.iterations = it;
  return out;
}

inline SimplexQP mv_problem(const MomentEstimates& est, double gamma) {
  if (!(gamma > 0)) throw ConfigError("risk aversion gamma must be positive");
  return {gamma * regularize_covariance(est.sigma), -est.mu, 0.0};
}

/// Maximiser of w'mu - (gamma/2) w'Sigma w; the reported objective is the minimised negative.
inline Portfolio solve_mv(const MomentEstimates& est, double gamma = 1.0) {
  if (!est.mu.allFinite() || !est.sigma.allFinite()) throw NumericalError("moment estimates have non-finite entries");
  return solve_simplex_qp(mv_problem(est, gamma));
}

inline SimplexQP gmv_problem(const MomentEstimates& est) {
  return {2.0 * regularize_covariance(est.sigma), Vector::Zero(est.sigma.rows()), 0.0};
}

/// Minimiser of w'Sigma w.
inline Portfolio solve_gmv(const MomentEstimates& est) {
  if (!est.sigma.allFinite()) throw NumericalError("covariance has non-finite entries");
  return solve_simplex_qp(gmv_problem(est));
}

/// (1/T) ||R w - r0||^2 written as a SimplexQP. R is T x n, one column per candidate.
inline SimplexQP tracking_problem(const Matrix& R, const Vector& r0) {
  if (R.cols() == 0) throw DataError("empty candidate set");
  if (R.rows() != r0.size() || R.rows() == 0) throw DataError("return matrix and index series lengths differ");
  const double T = static_cast<double>(R.rows());
  return {(2.0 / T) * (R.transpose() * R), -(2.0 / T) * (R.transpose() * r0), r0.squaredNorm() / T};
}

/// Tracking error variance of fixed weights.
inline double tracking_error_variance(const Matrix& R, const Vector& r0, const Vector& w) {
  return (R * w - r0).squaredNorm() / static_cast<double>(R.rows());
}

inline Portfolio solve_index_tracking(const Matrix& R, const Vector& r0) {
  if (!R.allFinite() || !r0.allFinite()) throw NumericalError("returns have non-finite entries");
  auto p = solve_simplex_qp(tracking_problem(R, r0));
  p.objective = tracking_error_variance(R, r0, p.weights);
  return p;
}

struct CardinalityOptions {
  std::size_t k_max = 10;
  double time_budget_seconds = 60.0;
  /// Stop after this many subproblem solves (0 = no cap). With a cap and an ample time budget
  /// the result is independent of machine speed.
  std::size_t max_evaluations = 0;
};

struct CardinalityResult {
  Portfolio portfolio;  // weights over all candidates, at most k_max non-zero
  std::size_t evaluations = 0;
  bool budget_exhausted = false;
  double greedy_objective = 0.0;
};

/// Sparse tracking heuristic: greedy forward selection (add the candidate whose refit has the
/// lowest tracking error), then best-improvement local search over swap/add/drop moves on the
/// best greedy support until no move improves or the budget runs out.
inline CardinalityResult solve_it_cardinality(const Matrix& R, const Vector& r0, const CardinalityOptions& opt) {
  const auto n = static_cast<std::size_t>(R.cols());
  if (n == 0) throw DataError("empty candidate set");
  if (opt.k_max < 1 || opt.k_max > n) throw ConfigError("k_max must lie in [1, " + std::to_string(n) + "]");
  if (!(opt.time_budget_seconds > 0)) throw ConfigError("time budget must be positive");
  const SimplexQP full = tracking_problem(R, r0);
  const auto start = std::chrono::steady_clock::now();
  CardinalityResult res;
  auto out_of_budget = [&] {
    if (opt.max_evaluations && res.evaluations >= opt.max_evaluations) return true;
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
    return el.count() >= opt.time_budget_seconds;
  };
  auto solve_on = [&](const std::vector<std::size_t>& S) {
    ++res.evaluations;
    SimplexQP sub;
    const auto k = static_cast<Eigen::Index>(S.size());
    sub.Q.resize(k, k);
    sub.c.resize(k);
    sub.constant = full.constant;
    for (Eigen::Index a = 0; a < k; ++a) {
      sub.c(a) = full.c(S[a]);
      for (Eigen::Index b = 0; b < k; ++b) sub.Q(a, b) = full.Q(S[a], S[b]);
    }
    auto p = solve_simplex_qp(sub);
    return std::make_pair(p.objective, p);
  };

  std::vector<std::size_t> S, best_S;
  double best = std::numeric_limits<double>::infinity();
  Portfolio best_p;
  for (std::size_t step = 0; step < opt.k_max; ++step) {
    double step_best = std::numeric_limits<double>::infinity();
    std::size_t pick = n;
    Portfolio pick_p;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::find(S.begin(), S.end(), j) != S.end()) continue;
      auto T = S;
      T.push_back(j);
      std::sort(T.begin(), T.end());
      auto [obj, p] = solve_on(T);
      if (obj < step_best) {
        step_best = obj;
        pick = j;
        pick_p = p;
      }
    }
    if (pick == n) break;
    S.push_back(pick);
    std::sort(S.begin(), S.end());
    if (step_best < best) {
      best = step_best;
      best_S = S;
      best_p = pick_p;
    }
    if (out_of_budget() && step + 1 < opt.k_max) {
      res.budget_exhausted = true;
      break;
    }
  }
  res.greedy_objective = best;

  const double eps = 1e-14 * std::max(1.0, std::abs(best));
  bool improved = !res.budget_exhausted;
  while (improved && !res.budget_exhausted) {
    improved = false;
    double cand_best = best;
    std::vector<std::size_t> cand_S;
    Portfolio cand_p;
    auto consider = [&](std::vector<std::size_t> T) {
      if (res.budget_exhausted) return;
      std::sort(T.begin(), T.end());
      auto [obj, p] = solve_on(T);
      if (obj < cand_best - eps) {
        cand_best = obj;
        cand_S = T;
        cand_p = p;
      }
      if (out_of_budget()) res.budget_exhausted = true;
    };
    std::vector<char> in(n, 0);
    for (auto s : best_S) in[s] = 1;
    for (std::size_t a = 0; a < best_S.size(); ++a)
      for (std::size_t j = 0; j < n; ++j) {
        if (in[j]) continue;
        auto T = best_S;
        T[a] = j;
        consider(T);
      }
    if (best_S.size() < opt.k_max)
      for (std::size_t j = 0; j < n; ++j)
        if (!in[j]) {
          auto T = best_S;
          T.push_back(j);
          consider(T);
        }
    if (best_S.size() > 1)
      for (std::size_t a = 0; a < best_S.size(); ++a) {
        auto T = best_S;
        T.erase(T.begin() + static_cast<std::ptrdiff_t>(a));
        consider(T);
      }
    if (!cand_S.empty()) {
      best = cand_best;
      best_S = cand_S;
      best_p = cand_p;
      improved = true;
    }
  }

  Portfolio out;
  out.assets.resize(n);
  std::iota(out.assets.begin(), out.assets.end(), std::size_t{0});
  out.weights = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < best_S.size(); ++a) out.weights(best_S[a]) = best_p.weights(static_cast<Eigen::Index>(a));
  out.objective = tracking_error_variance(R, r0, out.weights);
  out.iterations = static_cast<int>(res.evaluations);
  res.portfolio = out;
  return res;
}

/// The M assets most similar to the index (row 0 of a similarity matrix over index + assets),
/// returned as asset positions 0..n-1 in ascending order. Ties go to the earlier asset.
inline std::vector<std::size_t> select_max_similarity(const Matrix& S, std::size_t M) {
  if (S.rows() < 2 || S.rows() != S.cols()) throw DataError("similarity matrix must be square over index + assets");
  const auto n = static_cast<std::size_t>(S.rows() - 1);
  if (M < 1 || M > n) throw ConfigError("M must lie in [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return S(0, static_cast<Eigen::Index>(a + 1)) > S(0, static_cast<Eigen::Index>(b + 1));
  });
  idx.resize(M);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// asset_id,weight rows for weights of at least 1e-10. ids[k] names candidate p.assets[k].
inline void write_portfolio_csv(std::ostream& os, const Portfolio& p, const std::vector<std::string>& ids) {
  os.precision(17);
  os << "asset_id,weight\n";
  for (std::size_t k = 0; k < p.assets.size(); ++k) {
    const double w = p.weights(static_cast<Eigen::Index>(k));
    if (w < 1e-10) continue;
    if (p.assets[k] >= ids.size()) throw DataError("portfolio asset position out of range of the id list");
    os << ids[p.assets[k]] << ',' << w << '\n';
  }
}

}  // namespace tdaport
