#pragma once

#include "tdaport/clustering.hpp"
#include "tdaport/error.hpp"
#include "tdaport/market_data.hpp"
#include "tdaport/portfolio_opt.hpp"
#include "tdaport/similarity.hpp"
#include "tdaport/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tdaport {

enum class Strategy { IndexTracking, MV, GMV, MaxSimilarity, CardinalityIT, FullReplication, Naive, MVAll, GMVAll };
enum class ClusterAlgo { APC, KMedoids, Hierarchical };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::IndexTracking: return "IndexTracking";
    case Strategy::MV: return "MV";
    case Strategy::GMV: return "GMV";
    case Strategy::MaxSimilarity: return "MaxSimilarity";
    case Strategy::CardinalityIT: return "CardinalityIT";
    case Strategy::FullReplication: return "FullReplication";
    case Strategy::Naive: return "Naive";
    case Strategy::MVAll: return "MVAll";
    case Strategy::GMVAll: return "GMVAll";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  for (auto v : {Strategy::IndexTracking, Strategy::MV, Strategy::GMV, Strategy::MaxSimilarity, Strategy::CardinalityIT,
                 Strategy::FullReplication, Strategy::Naive, Strategy::MVAll, Strategy::GMVAll})
    if (s == strategy_name(v)) return v;
  throw ConfigError("unknown strategy '" + s + "'");
}

inline const char* cluster_algo_name(ClusterAlgo a) {
  switch (a) {
    case ClusterAlgo::APC: return "APC";
    case ClusterAlgo::KMedoids: return "KMedoids";
    case ClusterAlgo::Hierarchical: return "Hierarchical";
  }
  return "?";
}

inline ClusterAlgo parse_cluster_algo(const std::string& s) {
  for (auto v : {ClusterAlgo::APC, ClusterAlgo::KMedoids, ClusterAlgo::Hierarchical})
    if (s == cluster_algo_name(v)) return v;
  throw ConfigError("unknown clustering algorithm '" + s + "'");
}

/// Which entry points use clustering of the kernel matrix.
inline bool uses_clusters(Strategy s) { return s == Strategy::IndexTracking || s == Strategy::MV || s == Strategy::GMV; }
inline bool uses_kernel(Strategy s) { return uses_clusters(s) || s == Strategy::MaxSimilarity; }

struct StrategyConfig {
  Strategy strategy = Strategy::IndexTracking;
  KernelSpec kernel;
  ClusterAlgo clustering = ClusterAlgo::APC;
  APCParams apc;
  /// Non-empty: APC damping chosen per window by silhouette score over this grid.
  std::vector<double> damping_grid{0.5, 0.6, 0.7, 0.8, 0.9};
  /// Target cluster count. 0: APC uses its preference rule; K-medoids and hierarchical pick K in
  /// [k_search_min, k_search_max] by silhouette. For APC a positive value bisects the preference.
  std::size_t n_clusters = 0;
  std::size_t k_search_min = 10;
  std::size_t k_search_max = 50;
  std::uint64_t seed = 0;
  int kmedoids_restarts = 0;
  std::size_t in_len = 125;
  std::size_t out_len = 21;
  std::size_t step = 21;
  double gamma = 1.0;
  std::size_t max_similarity_m = 20;
  CardinalityOptions cardinality;
  unsigned threads = default_threads();

  void validate() const {
    if (!(gamma > 0)) throw ConfigError("gamma must be positive");
    if (in_len < 2) throw ConfigError("in-sample length must be at least 2");
    if (out_len < 1 || step < 1) throw ConfigError("out-of-sample length and step must be positive");
    if (max_similarity_m < 1) throw ConfigError("M must be at least 1");
    if (k_search_min < 2 || k_search_max < k_search_min) throw ConfigError("K search range must satisfy 2 <= min <= max");
    apc.validate();
  }
};

struct WindowResult {
  WindowPlan window;
  std::vector<std::size_t> selected_assets;  // panel asset positions, ascending
  Portfolio weights;                         // assets = selected_assets
  Series oos_portfolio_returns;
  Series oos_index_returns;
  std::optional<Clustering> cluster_snapshot;  // over index + assets, index at position 0
  double in_sample_te = std::numeric_limits<double>::quiet_NaN();
  double damping = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluations = 0;
  bool budget_exhausted = false;
  std::vector<std::string> flags;

  /// Weights spread over all n panel assets.
  Vector full_weights(std::size_t n) const {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < selected_assets.size(); ++k) w(static_cast<Eigen::Index>(selected_assets[k])) = weights.weights(static_cast<Eigen::Index>(k));
    return w;
  }
};

/// Named values; non-finite entries are recorded as undefined and serialised as null.
struct MetricSet {
  std::map<std::string, double> values;
  std::vector<std::string> undefined;

  void set(const std::string& name, double v) {
    values[name] = v;
    if (!std::isfinite(v)) undefined.push_back(name);
  }
  double operator[](const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw DataError("metric '" + name + "' not present");
    return it->second;
  }
  void merge(const MetricSet& o) {
    for (const auto& [k, v] : o.values) set(k, v);
  }
};

struct BacktestReport {
  StrategyConfig config;
  std::vector<std::string> asset_ids;
  std::string index_id;
  std::vector<WindowResult> per_window;
  MetricSet metrics;
  std::map<std::string, TestResult> tests;

  Series portfolio_returns() const {
    Series out;
    for (const auto& w : per_window) out.insert(out.end(), w.oos_portfolio_returns.begin(), w.oos_portfolio_returns.end());
    return out;
  }
  Series index_returns() const {
    Series out;
    for (const auto& w : per_window) out.insert(out.end(), w.oos_index_returns.begin(), w.oos_index_returns.end());
    return out;
  }
};

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// T x k matrix of simple returns of the chosen assets over [a, b).
inline Matrix window_block(const ReturnPanel& p, const std::vector<std::size_t>& assets, std::size_t a, std::size_t b) {
  Matrix R(static_cast<Eigen::Index>(b - a), static_cast<Eigen::Index>(assets.size()));
  for (std::size_t k = 0; k < assets.size(); ++k)
    for (std::size_t t = a; t < b; ++t)
      R(static_cast<Eigen::Index>(t - a), static_cast<Eigen::Index>(k)) = p.asset_returns(static_cast<Eigen::Index>(assets[k]), static_cast<Eigen::Index>(t));
  return R;
}

inline Vector index_block(const ReturnPanel& p, std::size_t a, std::size_t b) {
  return Eigen::Map<const Vector>(p.index_returns.data() + a, static_cast<Eigen::Index>(b - a));
}

inline std::vector<std::size_t> all_assets(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline Portfolio equal_weights(std::size_t k) {
  Portfolio p;
  p.assets = all_assets(k);
  p.weights = Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
  return p;
}

inline Clustering cluster_window(const KernelResult& kr, const StrategyConfig& cfg, WindowResult& wr) {
  switch (cfg.clustering) {
    case ClusterAlgo::APC:
      if (cfg.n_clusters > 0) {
        auto c = affinity_propagation_k(kr.similarity.values, cfg.n_clusters, cfg.apc);
        wr.damping = cfg.apc.damping;
        return c;
      }
      if (!cfg.damping_grid.empty()) {
        auto choice = select_damping(kr.similarity.values, cfg.damping_grid, kr.distances.values, cfg.apc);
        wr.damping = choice.damping;
        if (choice.fallback) wr.flags.push_back("damping_fallback");
        return choice.clustering;
      }
      wr.damping = cfg.apc.damping;
      return affinity_propagation(kr.similarity.values, cfg.apc);
    case ClusterAlgo::KMedoids:
    case ClusterAlgo::Hierarchical: {
      const Matrix& D = kr.distances.values;
      auto run = [&](std::size_t k) {
        return cfg.clustering == ClusterAlgo::KMedoids ? k_medoids(D, k, cfg.seed, cfg.kmedoids_restarts).clustering : hierarchical(D, k);
      };
      if (cfg.n_clusters > 0) return run(cfg.n_clusters);
      // K by silhouette; the range is clipped to [2, n - 1] for small panels.
      const auto n = static_cast<std::size_t>(D.rows());
      if (n < 3) throw DataError("silhouette choice of K needs at least 3 entities");
      const std::size_t hi = std::min(cfg.k_search_max, n - 1), lo = std::min(cfg.k_search_min, hi);
      std::optional<Clustering> best;
      double best_score = -kInfinity;
      for (std::size_t k = lo; k <= hi; ++k) {
        auto c = run(k);
        const double sc = silhouette_score(D, c.labels);
        if (sc > best_score) best_score = sc, best = std::move(c);
      }
      return *best;
    }
  }
  throw ConfigError("unknown clustering algorithm");
}

/// Asset positions (entity - 1) sharing entity 0's cluster.
inline std::vector<std::size_t> index_cluster_assets(const Clustering& c) {
  std::vector<std::size_t> out;
  for (auto e : c.members(c.labels[0]))
    if (e != 0) out.push_back(e - 1);
  return out;
}

/// One representative asset per cluster. A cluster whose exemplar is the index contributes the
/// member with the largest total similarity to the rest of that cluster (ties to the lower
/// position); a cluster holding only the index contributes nothing.
inline std::vector<std::size_t> exemplar_assets(const Clustering& c, const Matrix& S, WindowResult& wr) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < c.exemplars.size(); ++k) {
    const auto ex = c.exemplars[k];
    if (ex != 0) {
      out.push_back(ex - 1);
      continue;
    }
    const auto mem = c.members(static_cast<int>(k));
    std::size_t best = 0;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (auto i : mem) {
      if (i == 0) continue;
      double s = 0;
      for (auto j : mem)
        if (j != i) s += S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (s > best_sum) {
        best_sum = s;
        best = i;
      }
    }
    if (best != 0) {
      out.push_back(best - 1);
      wr.flags.push_back("index_exemplar_substituted");
    } else {
      wr.flags.push_back("index_singleton_cluster");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Series hold(const ReturnPanel& simple, const std::vector<std::size_t>& assets, const Vector& w, const WindowPlan& win) {
  Series out(win.out_end - win.out_start, 0.0);
  for (std::size_t t = win.out_start; t < win.out_end; ++t) {
    double r = 0;
    for (std::size_t k = 0; k < assets.size(); ++k)
      r += w(static_cast<Eigen::Index>(k)) * simple.asset_returns(static_cast<Eigen::Index>(assets[k]), static_cast<Eigen::Index>(t));
    out[t - win.out_start] = r;
  }
  return out;
}

}  // namespace detail

/// Rolling backtest of one strategy. Log returns feed the kernels; simple returns feed the
/// optimisers and the out-of-sample evaluation, with weights held fixed inside each window.
inline BacktestReport run_backtest(const PricePanel& panel, const StrategyConfig& cfg) {
  cfg.validate();
  panel.validate();
  const auto logr = compute_returns(panel, ReturnKind::Log);
  const auto simple = compute_returns(panel, ReturnKind::Simple);
  const std::size_t n = panel.assets();
  if (n == 0) throw DataError("panel has no assets");
  const auto windows = make_windows(simple.periods(), cfg.in_len, cfg.out_len, cfg.step);
  if (cfg.strategy == Strategy::MaxSimilarity && cfg.max_similarity_m > n)
    throw ConfigError("M=" + std::to_string(cfg.max_similarity_m) + " exceeds the asset count " + std::to_string(n));

  BacktestReport rep;
  rep.config = cfg;
  rep.asset_ids = panel.asset_ids;
  rep.index_id = panel.index_id;
  const auto ids = entity_ids(logr);

  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const auto& win = windows[wi];
    WindowResult wr;
    wr.window = win;
    try {
      std::optional<KernelResult> kr;
      if (uses_kernel(cfg.strategy)) {
        std::vector<std::span<const double>> series;
        series.push_back(std::span<const double>(logr.index_returns).subspan(win.in_start, win.in_end - win.in_start));
        for (std::size_t i = 0; i < n; ++i) series.push_back(logr.asset(i).subspan(win.in_start, win.in_end - win.in_start));
        kr = build_kernel(series, ids, cfg.kernel, cfg.threads);
      }
      const Vector r0 = detail::index_block(simple, win.in_start, win.in_end);

      auto track = [&](const std::vector<std::size_t>& assets) {
        wr.selected_assets = assets;
        const Matrix R = detail::window_block(simple, assets, win.in_start, win.in_end);
        wr.weights = solve_index_tracking(R, r0);
        wr.in_sample_te = wr.weights.objective;
      };

      switch (cfg.strategy) {
        case Strategy::IndexTracking: {
          wr.cluster_snapshot = detail::cluster_window(*kr, cfg, wr);
          auto sel = detail::index_cluster_assets(*wr.cluster_snapshot);
          if (sel.empty()) {
            sel = select_max_similarity(kr->similarity.values, std::min(cfg.max_similarity_m, n));
            wr.flags.push_back("singleton_index_cluster_fallback");
          }
          track(sel);
          break;
        }
        case Strategy::MV:
        case Strategy::GMV: {
          wr.cluster_snapshot = detail::cluster_window(*kr, cfg, wr);
          const auto sel = detail::exemplar_assets(*wr.cluster_snapshot, kr->similarity.values, wr);
          if (sel.empty()) throw DataError("every cluster exemplar is the index; no investable exemplar");
          wr.selected_assets = sel;
          const auto est = estimate_moments(detail::window_block(simple, sel, win.in_start, win.in_end));
          wr.weights = cfg.strategy == Strategy::MV ? solve_mv(est, cfg.gamma) : solve_gmv(est);
          break;
        }
        case Strategy::MaxSimilarity:
          track(select_max_similarity(kr->similarity.values, cfg.max_similarity_m));
          break;
        case Strategy::CardinalityIT: {
          const auto all = detail::all_assets(n);
          auto opt = cfg.cardinality;
          opt.k_max = std::min(opt.k_max, n);
          auto res = solve_it_cardinality(detail::window_block(simple, all, win.in_start, win.in_end), r0, opt);
          wr.evaluations = res.evaluations;
          wr.budget_exhausted = res.budget_exhausted;
          if (res.budget_exhausted) wr.flags.push_back("cardinality_budget_exhausted");
          std::vector<std::size_t> sel;
          std::vector<double> w;
          for (std::size_t i = 0; i < n; ++i)
            if (res.portfolio.weights(static_cast<Eigen::Index>(i)) > 0) {
              sel.push_back(i);
              w.push_back(res.portfolio.weights(static_cast<Eigen::Index>(i)));
            }
          wr.selected_assets = sel;
          wr.weights.assets = detail::all_assets(sel.size());
          wr.weights.weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
          wr.weights.objective = res.portfolio.objective;
          wr.weights.iterations = res.portfolio.iterations;
          wr.in_sample_te = res.portfolio.objective;
          break;
        }
        case Strategy::FullReplication:
          track(detail::all_assets(n));
          break;
        case Strategy::Naive:
          wr.selected_assets = detail::all_assets(n);
          wr.weights = detail::equal_weights(n);
          break;
        case Strategy::MVAll:
        case Strategy::GMVAll: {
          wr.selected_assets = detail::all_assets(n);
          const auto est = estimate_moments(detail::window_block(simple, wr.selected_assets, win.in_start, win.in_end));
          wr.weights = cfg.strategy == Strategy::MVAll ? solve_mv(est, cfg.gamma) : solve_gmv(est);
          break;
        }
      }
      if (!std::isfinite(wr.in_sample_te)) {
        const Matrix R = detail::window_block(simple, wr.selected_assets, win.in_start, win.in_end);
        wr.in_sample_te = tracking_error_variance(R, r0, wr.weights.weights);
      }
      wr.oos_portfolio_returns = detail::hold(simple, wr.selected_assets, wr.weights.weights, win);
      wr.oos_index_returns.assign(simple.index_returns.begin() + static_cast<std::ptrdiff_t>(win.out_start),
                                  simple.index_returns.begin() + static_cast<std::ptrdiff_t>(win.out_end));
    } catch (const Error& e) {
      rethrow_with_context(e, "window " + std::to_string(wi));
    }
    rep.per_window.push_back(std::move(wr));
  }
  return rep;
}

/// Tracking metrics over concatenated out-of-sample returns; TR skips the first window, which has
/// no predecessor.
inline MetricSet tracking_metrics(const Series& port, const Series& index, const std::vector<Vector>& weight_history) {
  if (port.size() != index.size()) throw DataError("portfolio and index series lengths differ");
  if (port.empty()) throw DataError("no out-of-sample returns");
  const auto T = static_cast<double>(port.size());
  double sq = 0, ex = 0;
  for (std::size_t t = 0; t < port.size(); ++t) {
    const double d = port[t] - index[t];
    sq += d * d;
    ex += d;
  }
  MetricSet m;
  m.set("TE", sq / T);
  m.set("EMR", ex / T);
  double cor = detail::nan();
  if (port.size() >= 2) {
    const double vp = variance(port), vi = variance(index);
    if (vp > 0 && vi > 0) cor = covariance(port, index) / std::sqrt(vp * vi);
  }
  m.set("COR", cor);
  m.set("INFO", sq > 0 ? (ex / T) / (sq / T) : detail::nan());
  double tr = detail::nan();
  if (weight_history.size() >= 2) {
    tr = 0;
    for (std::size_t r = 1; r < weight_history.size(); ++r) tr += (weight_history[r] - weight_history[r - 1]).lpNorm<1>();
    tr /= static_cast<double>(weight_history.size() - 1);
  }
  m.set("TR", tr);
  m.set("TE_beas", std::sqrt(sq) / T);
  return m;
}

/// Out-of-sample mean, standard deviation (n-1), SR, CEQ and tail measures.
inline MetricSet wealth_metrics(const Series& port, double gamma = 1.0) {
  if (port.size() < 2) throw DataError("wealth metrics need at least 2 out-of-sample returns");
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  MetricSet m;
  const double mu = mean(port), var = variance(port), sd = std::sqrt(var);
  m.set("mean", mu);
  m.set("sd", sd);
  m.set("SR", sd > 0 ? mu / sd : detail::nan());
  m.set("CEQ", mu - 0.5 * gamma * var);
  // historical 95% VaR / CVaR as positive losses
  Series s = port;
  std::sort(s.begin(), s.end());
  const auto k = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(s.size())));
  const std::size_t tail = std::max<std::size_t>(1, k);
  m.set("VaR95", -s[tail - 1]);
  double cv = 0;
  for (std::size_t i = 0; i < tail; ++i) cv += s[i];
  m.set("CVaR95", -cv / static_cast<double>(tail));
  double dd = 0;
  for (double r : port) dd += std::min(r, 0.0) * std::min(r, 0.0);
  m.set("downside_dev", std::sqrt(dd / static_cast<double>(port.size())));
  return m;
}

inline std::vector<Vector> weight_history(const BacktestReport& rep) {
  std::vector<Vector> h;
  for (const auto& w : rep.per_window) h.push_back(w.full_weights(rep.asset_ids.size()));
  return h;
}

/// Fills report.metrics with tracking and wealth measures plus window averages.
inline void compute_metrics(BacktestReport& rep) {
  if (rep.per_window.empty()) throw DataError("report has no windows");
  const auto port = rep.portfolio_returns(), index = rep.index_returns();
  MetricSet m = tracking_metrics(port, index, weight_history(rep));
  if (port.size() >= 2) m.merge(wealth_metrics(port, rep.config.gamma));
  double hhi = 0, hold = 0, in_te = 0;
  for (const auto& w : rep.per_window) {
    hhi += w.weights.hhi();
    hold += static_cast<double>(w.weights.holdings());
    in_te += w.in_sample_te;
  }
  const auto N = static_cast<double>(rep.per_window.size());
  m.set("HHI", hhi / N);
  m.set("holdings", hold / N);
  m.set("in_sample_TE", in_te / N);
  m.set("windows", N);
  rep.metrics = m;
}

inline BacktestReport run_strategy1(const PricePanel& panel, StrategyConfig cfg) {
  if (cfg.strategy != Strategy::IndexTracking) throw ConfigError("strategy 1 requires strategy=IndexTracking");
  auto r = run_backtest(panel, cfg);
  compute_metrics(r);
  return r;
}

inline BacktestReport run_strategy2(const PricePanel& panel, StrategyConfig cfg) {
  if (cfg.strategy != Strategy::MV && cfg.strategy != Strategy::GMV) throw ConfigError("strategy 2 requires strategy=MV or GMV");
  auto r = run_backtest(panel, cfg);
  compute_metrics(r);
  return r;
}

inline BacktestReport run_benchmark(const PricePanel& panel, StrategyConfig cfg) {
  if (uses_clusters(cfg.strategy)) throw ConfigError(std::string("'") + strategy_name(cfg.strategy) + "' is not a benchmark strategy");
  auto r = run_backtest(panel, cfg);
  compute_metrics(r);
  return r;
}

/// Any strategy.
inline BacktestReport run_strategy(const PricePanel& panel, const StrategyConfig& cfg) {
  auto r = run_backtest(panel, cfg);
  compute_metrics(r);
  return r;
}

/// One-tailed comparisons of a against b on their out-of-sample returns: TE (H_a: TE_a > TE_b),
/// mean, Sharpe ratio and CEQ (H_a: a > b). A test that is undefined on the data is stored with
/// NaN statistic and p-value.
inline std::map<std::string, TestResult> compare_reports(const BacktestReport& a, const BacktestReport& b, double gamma = 1.0) {
  const auto pa = a.portfolio_returns(), pb = b.portfolio_returns(), ia = a.index_returns(), ib = b.index_returns();
  if (pa.size() != pb.size() || ia != ib) throw DataError("reports cover different out-of-sample periods");
  std::map<std::string, TestResult> out;
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      out[name] = fn();
    } catch (const NumericalError&) {
      out[name] = {detail::nan(), detail::nan()};
    }
  };
  guarded("TE", [&] { return tracking_error_test(pa, pb, ia); });
  guarded("mean", [&] { return paired_mean_test(pa, pb); });
  guarded("SR", [&] { return sharpe_z_test(pa, pb); });
  guarded("CEQ", [&] { return ceq_test(pa, pb, gamma); });
  return out;
}

// ---- serialisation ----

inline nlohmann::ordered_json to_json(const MetricSet& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.values) j[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); }

inline nlohmann::ordered_json to_json(const BacktestReport& rep) {
  using J = nlohmann::ordered_json;
  J j;
  const auto& c = rep.config;
  j["strategy"] = strategy_name(c.strategy);
  j["index_id"] = rep.index_id;
  J cfg;
  if (uses_kernel(c.strategy)) {
    cfg["kernel"] = kernel_name(c.kernel.id);
    cfg["p"] = finite_or_null(c.kernel.distance.p);
    cfg["embed_dim"] = c.kernel.distance.embed_dim;
    cfg["delay"] = c.kernel.distance.delay;
    cfg["homology_dim"] = c.kernel.distance.homology_dim;
    cfg["neighbor"] = c.kernel.neighbor;
  }
  if (uses_clusters(c.strategy)) {
    cfg["clustering"] = cluster_algo_name(c.clustering);
    cfg["n_clusters"] = c.n_clusters;
  }
  cfg["in_len"] = c.in_len;
  cfg["out_len"] = c.out_len;
  cfg["step"] = c.step;
  cfg["gamma"] = c.gamma;
  j["config"] = cfg;
  j["metrics"] = to_json(rep.metrics);
  j["undefined_metrics"] = rep.metrics.undefined;
  J tests = J::object();
  for (const auto& [k, t] : rep.tests) tests[k] = {{"statistic", finite_or_null(t.statistic)}, {"p_value", finite_or_null(t.p_value)}};
  j["tests"] = tests;
  J wins = J::array();
  for (std::size_t k = 0; k < rep.per_window.size(); ++k) {
    const auto& w = rep.per_window[k];
    J jw;
    jw["window"] = k;
    jw["in_start"] = w.window.in_start;
    jw["in_end"] = w.window.in_end;
    jw["out_start"] = w.window.out_start;
    jw["out_end"] = w.window.out_end;
    J weights = J::object();
    for (std::size_t a = 0; a < w.selected_assets.size(); ++a) {
      const double v = w.weights.weights(static_cast<Eigen::Index>(a));
      if (v >= 1e-10) weights[rep.asset_ids[w.selected_assets[a]]] = v;
    }
    J sel = J::array();
    for (auto a : w.selected_assets) sel.push_back(rep.asset_ids[a]);
    jw["selected"] = sel;
    jw["weights"] = weights;
    jw["in_sample_te"] = finite_or_null(w.in_sample_te);
    if (w.cluster_snapshot) {
      jw["clusters"] = w.cluster_snapshot->clusters();
      jw["apc_converged"] = w.cluster_snapshot->converged;
    }
    if (std::isfinite(w.damping)) jw["damping"] = w.damping;
    if (c.strategy == Strategy::CardinalityIT) {
      jw["evaluations"] = w.evaluations;
      jw["budget_exhausted"] = w.budget_exhausted;
    }
    jw["flags"] = w.flags;
    jw["oos_portfolio_returns"] = w.oos_portfolio_returns;
    jw["oos_index_returns"] = w.oos_index_returns;
    wins.push_back(jw);
  }
  j["windows"] = wins;
  return j;
}

/// metric,value rows; undefined values are left empty.
inline void write_metrics_csv(std::ostream& os, const MetricSet& m) {
  os.precision(17);
  os << "metric,value\n";
  for (const auto& [k, v] : m.values) {
    os << k << ',';
    if (std::isfinite(v)) os << v;
    os << '\n';
  }
}

}  // namespace tdaport
