#pragma once

#include "tdaport/backtest.hpp"
#include "tdaport/error.hpp"
#include "tdaport/market_data.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace tdaport {

/// Shortest-safe text for a double: 17 significant digits.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double_value(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

inline long long parse_int_value(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
}

inline std::size_t parse_count_value(const std::string& key, const std::string& v) {
  const auto d = parse_int_value(key, v);
  if (d < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(d);
}

inline bool parse_bool_value(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double_value(key, std::string(detail::trim(tok))));
  return out;
}

inline std::string format_double_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

enum class DataFormat { Csv, OrLib };

/// Everything a CLI run needs. On disk: one `key = value` per line, '#' comments.
struct RunConfig {
  std::string data_path;
  DataFormat data_format = DataFormat::Csv;
  std::string index_column = "INDEX";
  IndtrackLayout orlib_layout;
  StrategyConfig strategy;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  bool operator==(const RunConfig& o) const { return to_text() == o.to_text(); }

  struct Field {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
  };

  static const std::vector<Field>& fields();

  std::string to_text() const {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
    return out;
  }

  void set(const std::string& key, const std::string& value) {
    for (const auto& f : fields())
      if (key == f.key) {
        f.set(*this, value);
        return;
      }
    throw ConfigError("unknown config key '" + key + "'");
  }

  /// Applies "key=value" (spaces around '=' allowed).
  void apply_assignment(const std::string& line, const std::string& where = "") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value, got '" + line + "'");
    try {
      set(std::string(detail::trim(std::string_view(line).substr(0, eq))), std::string(detail::trim(std::string_view(line).substr(eq + 1))));
    } catch (const Error& e) {
      if (where.empty()) throw;
      rethrow_with_context(e, where.substr(0, where.find_last_not_of(": ") + 1));
    }
  }

  static RunConfig parse(std::istream& in, const std::string& name = "config") {
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (detail::trim(line).empty()) continue;
      c.apply_assignment(line, name + ": line " + std::to_string(lineno) + ": ");
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }
};

inline const std::vector<RunConfig::Field>& RunConfig::fields() {
  using C = RunConfig;
  auto str = [](std::string C::*m) {
    return std::make_pair<std::function<std::string(const C&)>, std::function<void(C&, const std::string&)>>(
        [m](const C& c) { return c.*m; }, [m](C& c, const std::string& v) { c.*m = v; });
  };
  static const std::vector<Field> f = [&] {
    std::vector<Field> v;
    auto add = [&](const char* key, std::function<std::string(const C&)> g, std::function<void(C&, const std::string&)> s) {
      v.push_back({key, std::move(g), std::move(s)});
    };
    auto [pg, ps] = str(&C::data_path);
    add("data.path", pg, ps);
    add("data.format", [](const C& c) { return std::string(c.data_format == DataFormat::Csv ? "csv" : "orlib"); },
        [](C& c, const std::string& s) {
          if (s == "csv") c.data_format = DataFormat::Csv;
          else if (s == "orlib") c.data_format = DataFormat::OrLib;
          else throw ConfigError("data.format must be csv or orlib");
        });
    auto [ig, is] = str(&C::index_column);
    add("data.index_column", ig, is);
    add("orlib.major", [](const C& c) { return std::string(c.orlib_layout.major == IndtrackLayout::Major::Series ? "series" : "time"); },
        [](C& c, const std::string& s) {
          if (s == "series") c.orlib_layout.major = IndtrackLayout::Major::Series;
          else if (s == "time") c.orlib_layout.major = IndtrackLayout::Major::Time;
          else throw ConfigError("orlib.major must be series or time");
        });
    add("orlib.index_first", [](const C& c) { return std::string(c.orlib_layout.index_first ? "true" : "false"); },
        [](C& c, const std::string& s) { c.orlib_layout.index_first = parse_bool_value("orlib.index_first", s); });
    add("orlib.periods", [](const C& c) { return std::to_string(c.orlib_layout.default_periods); },
        [](C& c, const std::string& s) { c.orlib_layout.default_periods = parse_count_value("orlib.periods", s); });
    add("strategy", [](const C& c) { return std::string(strategy_name(c.strategy.strategy)); },
        [](C& c, const std::string& s) { c.strategy.strategy = parse_strategy(s); });
    add("kernel", [](const C& c) { return kernel_name(c.strategy.kernel.id); },
        [](C& c, const std::string& s) { c.strategy.kernel.id = parse_kernel_id(s); });
    add("kernel.neighbor", [](const C& c) { return std::to_string(c.strategy.kernel.neighbor); },
        [](C& c, const std::string& s) { c.strategy.kernel.neighbor = static_cast<int>(parse_int_value("kernel.neighbor", s)); });
    add("kernel.sigma2", [](const C& c) { return c.strategy.kernel.fixed_sigma2 ? format_double(*c.strategy.kernel.fixed_sigma2) : std::string(); },
        [](C& c, const std::string& s) {
          if (s.empty()) c.strategy.kernel.fixed_sigma2.reset();
          else c.strategy.kernel.fixed_sigma2 = parse_double_value("kernel.sigma2", s);
        });
    add("distance.p", [](const C& c) { return format_double(c.strategy.kernel.distance.p); },
        [](C& c, const std::string& s) { c.strategy.kernel.distance.p = parse_double_value("distance.p", s); });
    add("distance.embed_dim", [](const C& c) { return std::to_string(c.strategy.kernel.distance.embed_dim); },
        [](C& c, const std::string& s) { c.strategy.kernel.distance.embed_dim = static_cast<int>(parse_int_value("distance.embed_dim", s)); });
    add("distance.delay", [](const C& c) { return std::to_string(c.strategy.kernel.distance.delay); },
        [](C& c, const std::string& s) { c.strategy.kernel.distance.delay = static_cast<int>(parse_int_value("distance.delay", s)); });
    add("distance.homology_dim",
        [](const C& c) { return c.strategy.kernel.distance.homology_dim == kBothDims ? std::string("both") : std::to_string(c.strategy.kernel.distance.homology_dim); },
        [](C& c, const std::string& s) {
          c.strategy.kernel.distance.homology_dim = s == "both" ? kBothDims : static_cast<int>(parse_int_value("distance.homology_dim", s));
        });
    add("distance.subseries_length", [](const C& c) { return c.strategy.kernel.distance.subseries ? std::to_string(c.strategy.kernel.distance.subseries->length) : std::string(); },
        [](C& c, const std::string& s) {
          auto& d = c.strategy.kernel.distance;
          if (s.empty()) {
            d.subseries.reset();
            return;
          }
          if (!d.subseries) d.subseries = SubSeriesPlan{};
          d.subseries->length = parse_count_value("distance.subseries_length", s);
        });
    add("distance.subseries_shift", [](const C& c) { return c.strategy.kernel.distance.subseries ? std::to_string(c.strategy.kernel.distance.subseries->shift) : std::string(); },
        [](C& c, const std::string& s) {
          auto& d = c.strategy.kernel.distance;
          if (s.empty()) {
            d.subseries.reset();
            return;
          }
          if (!d.subseries) d.subseries = SubSeriesPlan{};
          d.subseries->shift = parse_count_value("distance.subseries_shift", s);
        });
    add("distance.weights", [](const C& c) { return format_double_list(c.strategy.kernel.distance.weights); },
        [](C& c, const std::string& s) { c.strategy.kernel.distance.weights = parse_double_list("distance.weights", s); });
    add("cluster.algo", [](const C& c) { return std::string(cluster_algo_name(c.strategy.clustering)); },
        [](C& c, const std::string& s) { c.strategy.clustering = parse_cluster_algo(s); });
    add("cluster.k", [](const C& c) { return std::to_string(c.strategy.n_clusters); },
        [](C& c, const std::string& s) { c.strategy.n_clusters = parse_count_value("cluster.k", s); });
    add("cluster.k_min", [](const C& c) { return std::to_string(c.strategy.k_search_min); },
        [](C& c, const std::string& s) { c.strategy.k_search_min = parse_count_value("cluster.k_min", s); });
    add("cluster.k_max", [](const C& c) { return std::to_string(c.strategy.k_search_max); },
        [](C& c, const std::string& s) { c.strategy.k_search_max = parse_count_value("cluster.k_max", s); });
    add("apc.damping", [](const C& c) { return format_double(c.strategy.apc.damping); },
        [](C& c, const std::string& s) { c.strategy.apc.damping = parse_double_value("apc.damping", s); });
    add("apc.damping_grid", [](const C& c) { return format_double_list(c.strategy.damping_grid); },
        [](C& c, const std::string& s) { c.strategy.damping_grid = parse_double_list("apc.damping_grid", s); });
    add("apc.preference",
        [](const C& c) {
          switch (c.strategy.apc.preference) {
            case PreferenceRule::Median: return std::string("median");
            case PreferenceRule::Minimum: return std::string("minimum");
            case PreferenceRule::Value: return std::string("value");
          }
          return std::string();
        },
        [](C& c, const std::string& s) {
          if (s == "median") c.strategy.apc.preference = PreferenceRule::Median;
          else if (s == "minimum") c.strategy.apc.preference = PreferenceRule::Minimum;
          else if (s == "value") c.strategy.apc.preference = PreferenceRule::Value;
          else throw ConfigError("apc.preference must be median, minimum or value");
        });
    add("apc.preference_value", [](const C& c) { return format_double(c.strategy.apc.preference_value); },
        [](C& c, const std::string& s) { c.strategy.apc.preference_value = parse_double_value("apc.preference_value", s); });
    add("apc.max_iterations", [](const C& c) { return std::to_string(c.strategy.apc.max_iterations); },
        [](C& c, const std::string& s) { c.strategy.apc.max_iterations = static_cast<int>(parse_int_value("apc.max_iterations", s)); });
    add("apc.stable_iterations", [](const C& c) { return std::to_string(c.strategy.apc.stable_iterations); },
        [](C& c, const std::string& s) { c.strategy.apc.stable_iterations = static_cast<int>(parse_int_value("apc.stable_iterations", s)); });
    add("kmedoids.restarts", [](const C& c) { return std::to_string(c.strategy.kmedoids_restarts); },
        [](C& c, const std::string& s) { c.strategy.kmedoids_restarts = static_cast<int>(parse_int_value("kmedoids.restarts", s)); });
    add("window.in", [](const C& c) { return std::to_string(c.strategy.in_len); },
        [](C& c, const std::string& s) { c.strategy.in_len = parse_count_value("window.in", s); });
    add("window.out", [](const C& c) { return std::to_string(c.strategy.out_len); },
        [](C& c, const std::string& s) { c.strategy.out_len = parse_count_value("window.out", s); });
    add("window.step", [](const C& c) { return std::to_string(c.strategy.step); },
        [](C& c, const std::string& s) { c.strategy.step = parse_count_value("window.step", s); });
    add("gamma", [](const C& c) { return format_double(c.strategy.gamma); },
        [](C& c, const std::string& s) { c.strategy.gamma = parse_double_value("gamma", s); });
    add("max_similarity.m", [](const C& c) { return std::to_string(c.strategy.max_similarity_m); },
        [](C& c, const std::string& s) { c.strategy.max_similarity_m = parse_count_value("max_similarity.m", s); });
    add("cardinality.k_max", [](const C& c) { return std::to_string(c.strategy.cardinality.k_max); },
        [](C& c, const std::string& s) { c.strategy.cardinality.k_max = parse_count_value("cardinality.k_max", s); });
    add("cardinality.time_budget", [](const C& c) { return format_double(c.strategy.cardinality.time_budget_seconds); },
        [](C& c, const std::string& s) { c.strategy.cardinality.time_budget_seconds = parse_double_value("cardinality.time_budget", s); });
    add("cardinality.max_evaluations", [](const C& c) { return std::to_string(c.strategy.cardinality.max_evaluations); },
        [](C& c, const std::string& s) { c.strategy.cardinality.max_evaluations = parse_count_value("cardinality.max_evaluations", s); });
    add("threads", [](const C& c) { return std::to_string(c.strategy.threads); },
        [](C& c, const std::string& s) {
          const auto t = parse_count_value("threads", s);
          c.strategy.threads = t == 0 ? default_threads() : static_cast<unsigned>(t);
        });
    auto [og, os] = str(&C::output_dir);
    add("output.dir", og, os);
    add("seed", [](const C& c) { return std::to_string(c.seed); },
        [](C& c, const std::string& s) {
          c.seed = static_cast<std::uint64_t>(parse_count_value("seed", s));
          c.strategy.seed = c.seed;
        });
    return v;
  }();
  return f;
}

/// Loads the panel named by the config; a missing file is a data error naming the path.
inline PricePanel load_panel(const RunConfig& c) {
  if (c.data_path.empty()) throw ConfigError("data.path is not set");
  if (!std::filesystem::exists(c.data_path)) throw DataError("data file not found: '" + c.data_path + "'");
  return c.data_format == DataFormat::Csv ? load_csv_prices(c.data_path, c.index_column) : load_orlib_indtrack(c.data_path, c.orlib_layout);
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace tdaport
