// Batch front end: distances, cluster, backtest, casestudy, report-merge.

#include "tdaport/backtest.hpp"
#include "tdaport/casestudy.hpp"
#include "tdaport/config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tdaport;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
};

/// File, then TDAPORT_OUTPUT_DIR, then --set, then --output.
RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (const char* env = std::getenv("TDAPORT_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  for (const auto& o : c.overrides) cfg.apply_assignment(o, "--set " + o + ": ");
  if (!c.output.empty()) cfg.output_dir = c.output;
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key = value config file");
  cmd->add_option("-s,--set", c.overrides, "override, e.g. --set kernel=K2 (repeatable)");
  cmd->add_option("-o,--output", c.output, "output directory");
}

std::string to_string(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

KernelResult panel_kernel(const RunConfig& cfg, const PricePanel& panel) {
  return build_kernel_matrix(compute_returns(panel, ReturnKind::Log), cfg.strategy.kernel, cfg.strategy.threads);
}

int cmd_distances(const RunConfig& cfg) {
  const auto panel = load_panel(cfg);
  const auto kr = panel_kernel(cfg, panel);
  const fs::path out = cfg.output_dir;
  write_file_atomic(out / "distances.csv", to_string([&](std::ostream& os) { write_square_csv(os, kr.distances); }));
  write_file_atomic(out / "similarity.csv", to_string([&](std::ostream& os) { write_square_csv(os, kr.similarity); }));
  write_file_atomic(out / "run.conf", cfg.to_text());
  std::cout << "wrote " << (out / "distances.csv").string() << " and " << (out / "similarity.csv").string() << "\n";
  return 0;
}

int cmd_cluster(const RunConfig& cfg) {
  const auto panel = load_panel(cfg);
  const auto kr = panel_kernel(cfg, panel);
  cfg.strategy.validate();
  WindowResult wr;
  const Clustering c = detail::cluster_window(kr, cfg.strategy, wr);
  const fs::path out = cfg.output_dir;
  write_file_atomic(out / "clusters.csv", to_string([&](std::ostream& os) { write_clustering_csv(os, c, kr.similarity.entities); }));
  write_file_atomic(out / "run.conf", cfg.to_text());
  std::cout << c.clusters() << " clusters" << (c.converged ? "" : " (not converged)");
  if (!std::isnan(wr.damping)) std::cout << ", damping " << wr.damping;
  std::cout << "; wrote " << (out / "clusters.csv").string() << "\n";
  return 0;
}

int cmd_backtest(const RunConfig& cfg) {
  const auto panel = load_panel(cfg);
  const auto rep = run_strategy(panel, cfg.strategy);
  const fs::path out = cfg.output_dir;
  write_file_atomic(out / "report.json", to_json(rep).dump(2) + "\n");
  write_file_atomic(out / "metrics.csv", to_string([&](std::ostream& os) { write_metrics_csv(os, rep.metrics); }));
  write_file_atomic(out / "weights.csv", to_string([&](std::ostream& os) {
                      os.precision(17);
                      os << "window,asset_id,weight\n";
                      for (std::size_t w = 0; w < rep.per_window.size(); ++w) {
                        const auto& r = rep.per_window[w];
                        for (std::size_t k = 0; k < r.selected_assets.size(); ++k) {
                          const double v = r.weights.weights(static_cast<Eigen::Index>(k));
                          if (v >= 1e-10) os << w << ',' << rep.asset_ids[r.selected_assets[k]] << ',' << v << '\n';
                        }
                      }
                    }));
  std::vector<std::string> ids{rep.index_id};
  ids.insert(ids.end(), rep.asset_ids.begin(), rep.asset_ids.end());
  for (std::size_t w = 0; w < rep.per_window.size(); ++w) {
    const auto& snap = rep.per_window[w].cluster_snapshot;
    if (!snap) continue;
    char name[32];
    std::snprintf(name, sizeof name, "window_%03zu.csv", w);
    write_file_atomic(out / "clusters" / name, to_string([&](std::ostream& os) { write_clustering_csv(os, *snap, ids); }));
  }
  write_file_atomic(out / "run.conf", cfg.to_text());
  std::cout << strategy_name(cfg.strategy.strategy) << ": " << rep.per_window.size() << " windows; wrote " << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_casestudy(const RunConfig& cfg, const std::string& data, std::optional<std::uint64_t> surrogate, std::size_t per_class,
                  const std::vector<std::string>& distances) {
  LabeledSeries ls;
  if (surrogate) {
    ls = control_chart_surrogate(*surrogate, per_class);
  } else {
    const std::string path = data.empty() ? cfg.data_path : data;
    if (path.empty()) throw ConfigError("casestudy needs --data PATH or --surrogate SEED");
    if (!fs::exists(path)) throw DataError("data file not found: '" + path + "'");
    ls = load_control_charts(path);
  }
  CaseStudyOptions opt;
  opt.seed = cfg.seed;
  opt.threads = cfg.strategy.threads;
  opt.distances = distances;
  if (cfg.strategy.kernel.fixed_sigma2) opt.sigma2 = *cfg.strategy.kernel.fixed_sigma2;
  if (cfg.strategy.n_clusters > 0) opt.clusters = cfg.strategy.n_clusters;
  opt.kmedoids_restarts = cfg.strategy.kmedoids_restarts > 0 ? cfg.strategy.kmedoids_restarts : opt.kmedoids_restarts;
  const auto rows = run_casestudy(ls, opt);
  const fs::path out = cfg.output_dir;
  const std::string csv = to_string([&](std::ostream& os) { write_casestudy_csv(os, rows); });
  write_file_atomic(out / "casestudy.csv", csv);
  std::cout << csv;
  return 0;
}

struct LoadedReport {
  std::string name;
  Json json;
  Series port, index;
};

LoadedReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path + "'");
  LoadedReport r;
  r.name = path;
  try {
    r.json = Json::parse(in);
    for (const auto& w : r.json.at("windows")) {
      for (const auto& v : w.at("oos_portfolio_returns")) r.port.push_back(v.get<double>());
      for (const auto& v : w.at("oos_index_returns")) r.index.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report '" + path + "': " + e.what());
  }
  return r;
}

/// Metric table across reports plus one-tailed tests of the first report against each other one.
int cmd_report_merge(const RunConfig& cfg, const std::vector<std::string>& inputs) {
  if (inputs.size() < 2) throw ConfigError("report-merge needs at least two report files");
  std::vector<LoadedReport> reps;
  for (const auto& p : inputs) reps.push_back(load_report(p));
  std::vector<std::string> metrics;
  for (const auto& r : reps)
    for (const auto& [k, v] : r.json.at("metrics").items())
      if (std::find(metrics.begin(), metrics.end(), k) == metrics.end()) metrics.push_back(k);
  std::ostringstream table;
  table << "metric";
  for (const auto& r : reps) table << ',' << r.name;
  table << '\n';
  for (const auto& m : metrics) {
    table << m;
    for (const auto& r : reps) {
      table << ',';
      const auto& ms = r.json.at("metrics");
      if (ms.contains(m) && ms.at(m).is_number()) table << format_double(ms.at(m).get<double>());
    }
    table << '\n';
  }
  Json tests = Json::array();
  const auto& a = reps.front();
  for (std::size_t k = 1; k < reps.size(); ++k) {
    const auto& b = reps[k];
    if (a.port.size() != b.port.size() || a.index != b.index) throw DataError("'" + a.name + "' and '" + b.name + "' cover different periods");
    Json t;
    t["a"] = a.name;
    t["b"] = b.name;
    auto put = [&](const char* name, auto&& fn) {
      try {
        const TestResult r = fn();
        t[name] = {{"statistic", finite_or_null(r.statistic)}, {"p_value", finite_or_null(r.p_value)}};
      } catch (const NumericalError&) {
        t[name] = nullptr;
      }
    };
    const double gamma = cfg.strategy.gamma;
    put("TE", [&] { return tracking_error_test(a.port, b.port, a.index); });
    put("mean", [&] { return paired_mean_test(a.port, b.port); });
    put("SR", [&] { return sharpe_z_test(a.port, b.port); });
    put("CEQ", [&] { return ceq_test(a.port, b.port, gamma); });
    tests.push_back(t);
  }
  const fs::path out = cfg.output_dir;
  write_file_atomic(out / "merged_metrics.csv", table.str());
  write_file_atomic(out / "tests.json", tests.dump(2) + "\n");
  std::cout << table.str();
  return 0;
}

void print_error(ErrorKind kind, const std::string& msg) {
  std::cerr << "error: kind=" << kind_name(kind) << " code=" << static_cast<int>(kind) << " message=" << Json(msg).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological clustering portfolio backtests"};
  app.require_subcommand(1);
  Common common;

  auto* dist = app.add_subcommand("distances", "write distance and kernel matrices over index + assets");
  add_common(dist, common);
  auto* clus = app.add_subcommand("cluster", "cluster index + assets under the configured kernel");
  add_common(clus, common);
  auto* back = app.add_subcommand("backtest", "rolling backtest of the configured strategy");
  add_common(back, common);
  auto* cs = app.add_subcommand("casestudy", "control-chart clustering accuracy table");
  add_common(cs, common);
  std::string cs_data;
  std::optional<std::uint64_t> cs_surrogate;
  std::size_t cs_per_class = 100;
  std::vector<std::string> cs_distances;
  cs->add_option("-d,--data", cs_data, "control-chart data file");
  cs->add_option("--surrogate", cs_surrogate, "generate surrogate charts with this seed instead of reading a file");
  cs->add_option("--per-class", cs_per_class, "surrogate series per class");
  cs->add_option("--distance", cs_distances, "restrict to these distances (repeatable)");
  auto* merge = app.add_subcommand("report-merge", "metric table and pairwise tests across report.json files");
  add_common(merge, common);
  std::vector<std::string> merge_inputs;
  merge->add_option("reports", merge_inputs, "report.json files; the first is tested against each other one")->required();
  auto* show = app.add_subcommand("show-config", "print the effective configuration");
  add_common(show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(ErrorKind::Config, e.what());
    std::cerr << app.help();
    return static_cast<int>(ErrorKind::Config);
  }

  try {
    const RunConfig cfg = resolve(common);
    if (*dist) return cmd_distances(cfg);
    if (*clus) return cmd_cluster(cfg);
    if (*back) return cmd_backtest(cfg);
    if (*cs) return cmd_casestudy(cfg, cs_data, cs_surrogate, cs_per_class, cs_distances);
    if (*merge) return cmd_report_merge(cfg, merge_inputs);
    if (*show) {
      std::cout << cfg.to_text();
      return 0;
    }
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    print_error(ErrorKind::Data, e.what());
    return static_cast<int>(ErrorKind::Data);
  } catch (const std::exception& e) {
    print_error(ErrorKind::Numerical, e.what());
    return static_cast<int>(ErrorKind::Numerical);
  }
  return 0;
}
