#include "tdaport/clustering.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace tdaport;

namespace {

Matrix euclid(const std::vector<std::array<double, 2>>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Matrix D(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) D(i, j) = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
  return D;
}

std::vector<std::array<double, 2>> blobs(std::mt19937_64& rng, const std::vector<std::array<double, 2>>& centres, int per, double sd) {
  std::normal_distribution<double> nd(0, sd);
  std::vector<std::array<double, 2>> out;
  for (const auto& c : centres)
    for (int k = 0; k < per; ++k) out.push_back({c[0] + nd(rng), c[1] + nd(rng)});
  return out;
}

Matrix neg_sq(const Matrix& D) { return -D.cwiseProduct(D); }

// Element-by-element transcription of the message updates, O(n^3) per sweep.
std::vector<std::size_t> reference_apc(const Matrix& S0, double pref, double lam, int maxit, int stable_req) {
  const auto n = S0.rows();
  Matrix S = S0;
  S.diagonal().setConstant(pref);
  Matrix R = Matrix::Zero(n, n), A = Matrix::Zero(n, n);
  std::vector<char> prev(n, 0);
  int stable = 0;
  for (int it = 0; it < maxit; ++it) {
    Matrix Rn(n, n), An(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double m = -std::numeric_limits<double>::infinity();
        for (int kk = 0; kk < n; ++kk)
          if (kk != k) m = std::max(m, A(i, kk) + S(i, kk));
        Rn(i, k) = S(i, k) - m;
      }
    R = (1 - lam) * Rn + lam * R;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int ii = 0; ii < n; ++ii)
          if (ii != i && ii != k) s += std::max(0.0, R(ii, k));
        An(i, k) = i == k ? s : std::min(0.0, R(k, k) + s);
      }
    A = (1 - lam) * An + lam * A;
    std::vector<char> cur(n);
    int cnt = 0;
    for (int k = 0; k < n; ++k) cnt += cur[k] = A(k, k) + R(k, k) > 0;
    stable = cur == prev ? stable + 1 : 1;
    prev = cur;
    if (cnt > 0 && stable >= stable_req) break;
  }
  std::vector<std::size_t> ex;
  for (int k = 0; k < n; ++k)
    if (prev[k]) ex.push_back(k);
  return ex;
}

}  // namespace

TEST(Apc, TwoTightGroups) {
  const Matrix D = euclid({{0, 0}, {0.1, 0}, {0, 0.1}, {10, 10}, {10.1, 10}, {10, 10.1}});
  const auto c = affinity_propagation(neg_sq(D));
  ASSERT_EQ(c.clusters(), 2u);
  EXPECT_EQ(c.labels, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_TRUE(c.converged);
  for (std::size_t k = 0; k < c.clusters(); ++k) EXPECT_EQ(c.labels[c.exemplars[k]], static_cast<int>(k));
}

TEST(Apc, SingleEntity) {
  const auto c = affinity_propagation(Matrix::Zero(1, 1));
  EXPECT_EQ(c.labels, std::vector<int>{0});
  EXPECT_EQ(c.exemplars, std::vector<std::size_t>{0});
}

TEST(Apc, IdenticalEntitiesTerminate) {
  APCParams p;
  p.damping = 0.9;
  p.max_iterations = 300;
  const auto c = affinity_propagation(Matrix::Zero(5, 5), p);
  EXPECT_LE(c.iterations, 300);
  EXPECT_GE(c.clusters(), 1u);
  for (int l : c.labels) EXPECT_GE(l, 0);
}

TEST(Apc, MatchesReferenceImplementation) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = blobs(rng, {{0, 0}, {4, 0}, {0, 4}}, 5 + trial % 3, 0.8);
    const Matrix S = neg_sq(euclid(pts));
    for (double lam : {0.5, 0.8}) {
      APCParams p;
      p.damping = lam;
      const auto c = affinity_propagation(S, p);
      const auto ref = reference_apc(S, resolve_preference(S, p), lam, p.max_iterations, p.stable_iterations);
      EXPECT_EQ(c.exemplars, ref) << "trial " << trial;
    }
  }
}

TEST(Apc, PermutationEquivariant) {
  std::mt19937_64 rng(13);
  const auto pts = blobs(rng, {{0, 0}, {5, 5}, {0, 6}}, 6, 0.7);
  const Matrix S = neg_sq(euclid(pts));
  const auto a = affinity_propagation(S);
  std::vector<int> perm(S.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix P(S.rows(), S.cols());
  for (int i = 0; i < S.rows(); ++i)
    for (int j = 0; j < S.cols(); ++j) P(i, j) = S(perm[i], perm[j]);
  const auto b = affinity_propagation(P);
  std::vector<int> back(S.rows());
  for (int i = 0; i < S.rows(); ++i) back[perm[i]] = b.labels[i];
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a.labels, back), 1.0);
  std::set<std::size_t> ea(a.exemplars.begin(), a.exemplars.end()), eb;
  for (auto e : b.exemplars) eb.insert(perm[e]);
  EXPECT_EQ(ea, eb);
}

TEST(Apc, PreferenceLimits) {
  std::mt19937_64 rng(14);
  const auto pts = blobs(rng, {{0, 0}, {5, 5}}, 6, 1.0);
  const Matrix S = neg_sq(euclid(pts));
  APCParams p;
  p.preference = PreferenceRule::Value;
  p.preference_value = 1e3;
  EXPECT_EQ(affinity_propagation(S, p).clusters(), 12u);
  p.preference_value = -1e4;
  EXPECT_EQ(affinity_propagation(S, p).clusters(), 1u);
}

TEST(Apc, TargetClusterCount) {
  std::mt19937_64 rng(15);
  const auto pts = blobs(rng, {{0, 0}, {6, 0}, {0, 6}, {6, 6}}, 6, 0.6);
  const Matrix S = neg_sq(euclid(pts));
  for (std::size_t k : {2u, 4u}) EXPECT_EQ(affinity_propagation_k(S, k).clusters(), k);
}

TEST(Apc, Errors) {
  EXPECT_THROW(affinity_propagation(Matrix::Zero(2, 3)), DataError);
  APCParams p;
  p.damping = 1.0;
  EXPECT_THROW(affinity_propagation(Matrix::Zero(2, 2), p), ConfigError);
}

TEST(Silhouette, Examples) {
  std::mt19937_64 rng(16);
  const auto pts = blobs(rng, {{0, 0}, {10, 0}}, 10, 0.5);
  const Matrix D = euclid(pts);
  std::vector<int> lab(20);
  for (int i = 0; i < 20; ++i) lab[i] = i / 10;
  EXPECT_GT(silhouette_score(D, lab), 0.8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::array<double, 2>> uni(200);
  for (auto& q : uni) q = {u(rng), u(rng)};
  std::vector<int> rl(200);
  for (auto& l : rl) l = static_cast<int>(rng() % 3);
  EXPECT_NEAR(silhouette_score(euclid(uni), rl), 0.0, 0.2);
  std::vector<int> single(4);
  std::iota(single.begin(), single.end(), 0);
  EXPECT_EQ(silhouette_score(euclid({{0, 0}, {1, 0}, {5, 0}, {9, 9}}), single), 0.0);
  EXPECT_THROW(silhouette_score(D, std::vector<int>(20, 0)), DataError);
}

TEST(SelectDamping, Examples) {
  std::mt19937_64 rng(17);
  const auto pts = blobs(rng, {{0, 0}, {10, 10}}, 8, 0.4);
  const Matrix D = euclid(pts);
  const auto pick = select_damping(neg_sq(D), {0.9, 0.5, 0.7}, D);
  EXPECT_EQ(pick.damping, 0.5);
  EXPECT_EQ(pick.clustering.clusters(), 2u);
  EXPECT_FALSE(pick.fallback);
  EXPECT_EQ(select_damping(neg_sq(D), {0.7}, D).damping, 0.7);
  const Matrix Z = Matrix::Zero(4, 4);
  const auto deg = select_damping(Z, {0.5, 0.9}, Z);
  if (deg.clustering.clusters() < 2) EXPECT_TRUE(deg.fallback);
  APCParams lowpref;
  lowpref.preference = PreferenceRule::Value;
  lowpref.preference_value = -1e4;
  const auto one = select_damping(neg_sq(D), {0.5, 0.6}, D, lowpref);
  EXPECT_TRUE(one.fallback);
  EXPECT_EQ(one.clustering.clusters(), 1u);
  EXPECT_THROW(select_damping(Z, {}, Z), ConfigError);
}

TEST(KMedoids, KEqualsN) {
  const Matrix D = euclid({{0, 0}, {1, 0}, {3, 1}, {7, 2}});
  const auto r = k_medoids(D, 4);
  EXPECT_EQ(r.cost, 0.0);
  EXPECT_EQ(r.clustering.clusters(), 4u);
  EXPECT_THROW(k_medoids(D, 0), ConfigError);
  EXPECT_THROW(k_medoids(D, 5), ConfigError);
}

TEST(KMedoids, MatchesBruteForce) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + trial % 5;
    std::vector<std::array<double, 2>> pts(n);
    for (auto& q : pts) q = {u(rng), u(rng)};
    const Matrix D = euclid(pts);
    for (std::size_t K : {1u, 2u}) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < n; ++a)
        for (int b = (K == 1 ? a : a + 1); b < n; ++b) {
          std::vector<std::size_t> med{static_cast<std::size_t>(a)};
          if (K == 2) med.push_back(b);
          double c = 0;
          for (int i = 0; i < n; ++i) {
            double m = 1e300;
            for (auto k : med) m = std::min(m, D(i, k));
            c += m;
          }
          best = std::min(best, c);
          if (K == 1) break;
        }
      const auto r = k_medoids(D, K);
      if (K == 1) EXPECT_NEAR(r.cost, best, 1e-12);
      // PAM is a local search: the greedy start alone may stop above the optimum, restarts reach it
      EXPECT_GE(r.cost, best - 1e-12);
      EXPECT_NEAR(k_medoids(D, K, 1, 20).cost, best, 1e-12) << "trial " << trial;
      for (std::size_t k = 1; k < r.cost_trace.size(); ++k) EXPECT_LE(r.cost_trace[k], r.cost_trace[k - 1]);
    }
  }
}

TEST(KMedoids, TwoBlobsAndRestarts) {
  std::mt19937_64 rng(19);
  const auto pts = blobs(rng, {{0, 0}, {8, 8}}, 5, 0.7);
  const Matrix D = euclid(pts);
  const auto r = k_medoids(D, 2);
  double best = 1e300;
  for (int a = 0; a < 10; ++a)
    for (int b = a + 1; b < 10; ++b) {
      double c = 0;
      for (int i = 0; i < 10; ++i) c += std::min(D(i, a), D(i, b));
      best = std::min(best, c);
    }
  EXPECT_NEAR(r.cost, best, 1e-12);
  std::vector<int> truth(10);
  for (int i = 0; i < 10; ++i) truth[i] = i / 5;
  EXPECT_EQ(adjusted_rand_index(r.clustering.labels, truth), 1.0);
  const auto r2 = k_medoids(D, 3, 42, 5);
  EXPECT_EQ(r2.clustering.clusters(), 3u);
  EXPECT_EQ(k_medoids(D, 3, 42, 5).clustering.labels, r2.clustering.labels);
}

TEST(Hierarchical, Examples) {
  const Matrix chain = euclid({{0, 0}, {1, 0}, {3, 0}});
  const auto c = hierarchical(chain, 2);
  EXPECT_EQ(c.labels[0], c.labels[1]);
  EXPECT_NE(c.labels[0], c.labels[2]);
  const auto s = hierarchical(chain, 3);
  EXPECT_EQ(s.clusters(), 3u);
  std::mt19937_64 rng(20);
  const auto pts = blobs(rng, {{0, 0}, {8, 8}}, 7, 0.7);
  const auto h = hierarchical(euclid(pts), 2);
  std::vector<int> truth(14);
  for (int i = 0; i < 14; ++i) truth[i] = i / 7;
  EXPECT_EQ(adjusted_rand_index(h.labels, truth), 1.0);
  EXPECT_THROW(hierarchical(chain, 4), ConfigError);
}

TEST(Hierarchical, RepresentativeMinimisesTotalDistance) {
  const Matrix D = euclid({{0, 0}, {1, 0}, {2, 0}, {2.5, 0}, {20, 0}});
  const auto c = hierarchical(D, 2);
  const int big = c.labels[0];
  // members 0..3: totals 5.5, 3.5, 3.5, 5 -> first minimiser is entity 1
  EXPECT_EQ(c.exemplars[big], 1u);
  EXPECT_EQ(c.exemplars[c.labels[4]], 4u);
}

TEST(Ari, Examples) {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1}, r{5, 5, 2, 2};
  EXPECT_EQ(adjusted_rand_index(a, a), 1.0);
  EXPECT_EQ(adjusted_rand_index(a, r), 1.0);
  EXPECT_NEAR(adjusted_rand_index(a, b), -0.5, 1e-12);
  EXPECT_EQ(adjusted_rand_index(b, a), adjusted_rand_index(a, b));
  EXPECT_THROW(adjusted_rand_index(a, {0}), DataError);
}

TEST(Jaccard, Examples) {
  const std::set<int> a{1, 2, 3}, b{2, 3, 4}, c{7};
  EXPECT_EQ(jaccard_similarity(a, a), 1.0);
  EXPECT_EQ(jaccard_similarity(a, c), 0.0);
  EXPECT_EQ(jaccard_similarity(a, b), 0.5);
  EXPECT_EQ(jaccard_similarity(b, a), 0.5);
  EXPECT_EQ(jaccard_similarity(std::set<int>{}, std::set<int>{}), 1.0);
}

TEST(Accuracy, Examples) {
  const std::vector<int> t{0, 0, 0, 1, 1, 1};
  EXPECT_EQ(clustering_accuracy(t, t), 1.0);
  EXPECT_EQ(clustering_accuracy({7, 7, 7, 3, 3, 3}, t), 1.0);
  EXPECT_NEAR(clustering_accuracy({0, 0, 1, 1, 1, 1}, t), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(clustering_accuracy({0, 1, 2, 0, 1, 2}, t), 2.0 / 6.0, 1e-15);
  EXPECT_THROW(clustering_accuracy({0}, t), DataError);
}
