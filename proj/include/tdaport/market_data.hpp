#pragma once

#include "tdaport/error.hpp"
#include "tdaport/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tdaport {

/// Aligned date x asset price matrix plus the benchmark index series.
struct PricePanel {
  std::vector<std::string> dates;
  std::string index_id = "INDEX";
  Series index_prices;
  RowMatrix asset_prices;  // n x T, one row per asset
  std::vector<std::string> asset_ids;

  std::size_t periods() const { return index_prices.size(); }
  std::size_t assets() const { return static_cast<std::size_t>(asset_prices.rows()); }

  /// Throws DataError when any panel invariant is violated.
  void validate() const;
};

enum class ReturnKind { Log, Simple };

struct ReturnPanel {
  ReturnKind kind = ReturnKind::Log;
  Series index_returns;
  RowMatrix asset_returns;  // n x (T-1)
  std::vector<std::string> asset_ids;
  std::string index_id = "INDEX";

  std::size_t periods() const { return index_returns.size(); }
  std::size_t assets() const { return static_cast<std::size_t>(asset_returns.rows()); }
  std::span<const double> asset(std::size_t i) const { return row_span(asset_returns, static_cast<Eigen::Index>(i)); }
};

/// Half-open index ranges [in_start, in_end) and [out_start, out_end) over a return series.
struct WindowPlan {
  std::size_t in_start = 0;
  std::size_t in_end = 0;
  std::size_t out_start = 0;
  std::size_t out_end = 0;
};

/// Overlapping sub-series of length `length`, consecutive starts `shift` apart.
struct SubSeriesPlan {
  std::size_t length = 1;
  std::size_t shift = 1;
  std::size_t count = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

inline bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "." || s == "#N/A";
}

/// Numeric labels compare numerically, anything else lexicographically.
inline bool label_less(const std::string& a, const std::string& b) {
  double x = 0, y = 0;
  if (parse_double(a, x) && parse_double(b, y)) return x < y;
  return a < b;
}

}  // namespace detail

inline void PricePanel::validate() const {
  const std::size_t T = periods();
  if (T < 2) throw DataError("price panel needs at least 2 periods");
  if (static_cast<std::size_t>(asset_prices.cols()) != T && asset_prices.rows() > 0)
    throw DataError("asset price series length differs from index length");
  if (asset_ids.size() != assets()) throw DataError("asset id count differs from asset rows");
  if (dates.size() != T) throw DataError("date count differs from price count");
  for (std::size_t t = 1; t < T; ++t)
    if (!detail::label_less(dates[t - 1], dates[t])) throw DataError("dates not increasing at row " + std::to_string(t));
  for (double p : index_prices)
    if (!(p > 0.0)) throw DataError("non-positive price in index series");
  for (Eigen::Index i = 0; i < asset_prices.rows(); ++i)
    for (Eigen::Index t = 0; t < asset_prices.cols(); ++t)
      if (!(asset_prices(i, t) > 0.0)) throw DataError("non-positive price for asset " + asset_ids[i]);
}

/// Reads a header-led CSV (first column = date label). Rows with a missing cell are
/// dropped; any other malformed or non-positive cell is an error naming its line.
inline PricePanel load_csv_prices(const std::string& path, const std::string& index_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file: " + path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    for (auto f : detail::split(line, ',')) header.emplace_back(f);
    break;
  }
  if (header.size() < 3) throw DataError(path + ": header needs a date column, the index column and at least one asset");
  std::size_t index_col = header.size();
  for (std::size_t c = 1; c < header.size(); ++c)
    if (header[c] == index_column) index_col = c;
  if (index_col == header.size()) throw DataError(path + ": index column '" + index_column + "' absent");

  PricePanel panel;
  panel.index_id = index_column;
  for (std::size_t c = 1; c < header.size(); ++c)
    if (c != index_col) panel.asset_ids.push_back(header[c]);
  const std::size_t n = panel.asset_ids.size();

  std::vector<std::vector<double>> asset_cols(n);
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() != header.size())
      throw DataError(path + ": line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    bool missing = false;
    std::vector<double> row(header.size(), 0.0);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (detail::is_missing(fields[c])) {
        missing = true;
        continue;
      }
      if (!detail::parse_double(fields[c], row[c]))
        throw DataError(path + ": line " + std::to_string(lineno) + ": unparseable cell '" + std::string(fields[c]) + "'");
      if (!(row[c] > 0.0))
        throw DataError(path + ": line " + std::to_string(lineno) + ": non-positive price in column " + header[c]);
    }
    if (missing) continue;
    std::string date(fields[0]);
    if (!panel.dates.empty() && !detail::label_less(panel.dates.back(), date))
      throw DataError(path + ": line " + std::to_string(lineno) + ": dates not increasing");
    panel.dates.push_back(std::move(date));
    panel.index_prices.push_back(row[index_col]);
    std::size_t a = 0;
    for (std::size_t c = 1; c < header.size(); ++c)
      if (c != index_col) asset_cols[a++].push_back(row[c]);
  }
  if (panel.index_prices.size() < 2) throw DataError(path + ": fewer than 2 usable rows");
  const std::size_t T = panel.index_prices.size();
  panel.asset_prices.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t) panel.asset_prices(i, t) = asset_cols[i][t];
  return panel;
}

/// Inverse of load_csv_prices: date column, index column, then assets.
inline void write_csv_prices(std::ostream& os, const PricePanel& panel) {
  os.precision(17);
  os << "date," << panel.index_id;
  for (const auto& a : panel.asset_ids) os << ',' << a;
  os << '\n';
  for (std::size_t t = 0; t < panel.periods(); ++t) {
    os << panel.dates[t] << ',' << panel.index_prices[t];
    for (std::size_t i = 0; i < panel.assets(); ++i) os << ',' << panel.asset_prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
    os << '\n';
  }
}

/// How the price values inside an OR-Library indtrack file are arranged.
struct IndtrackLayout {
  enum class Major { Series, Time };
  /// Series: all T prices of one series, then the next. Time: every series' price for t, then t+1.
  Major major = Major::Series;
  bool index_first = true;
  std::size_t default_periods = 291;
};

/// Parses an OR-Library index-tracking instance. The header is the stock count N,
/// optionally followed by the period count T; then (N+1)*T prices follow.
inline PricePanel load_orlib_indtrack(const std::string& path, const IndtrackLayout& layout = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open indtrack file: " + path);
  std::vector<double> tokens;
  std::string tok;
  std::size_t pos = 0;
  while (in >> tok) {
    ++pos;
    double v = 0;
    if (!detail::parse_double(tok, v)) throw DataError(path + ": token " + std::to_string(pos) + " is not numeric: '" + tok + "'");
    tokens.push_back(v);
  }
  if (tokens.empty()) throw DataError(path + ": empty file");
  const double nd = tokens[0];
  if (nd < 1 || nd != std::floor(nd)) throw DataError(path + ": token 1: stock count must be a positive integer");
  const auto N = static_cast<std::size_t>(nd);
  std::size_t T = layout.default_periods;
  std::size_t offset = 1;
  const std::size_t rest = tokens.size() - 1;
  if (rest != (N + 1) * T) {
    // An explicit period count may follow the stock count.
    if (tokens.size() >= 2 && tokens[1] >= 2 && tokens[1] == std::floor(tokens[1]) &&
        rest - 1 == (N + 1) * static_cast<std::size_t>(tokens[1])) {
      T = static_cast<std::size_t>(tokens[1]);
      offset = 2;
    } else {
      throw DataError(path + ": token count mismatch: " + std::to_string(rest) + " values after header, expected " +
                      std::to_string((N + 1) * T));
    }
  }
  auto value = [&](std::size_t series, std::size_t t) {
    const std::size_t k = layout.major == IndtrackLayout::Major::Series ? series * T + t : t * (N + 1) + series;
    return tokens[offset + k];
  };
  const std::size_t index_series = layout.index_first ? 0 : N;
  PricePanel panel;
  panel.index_id = "INDEX";
  panel.asset_prices.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t) {
    panel.dates.push_back(std::to_string(t + 1));
    panel.index_prices.push_back(value(index_series, t));
  }
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t s = layout.index_first ? i + 1 : i;
    panel.asset_ids.push_back("S" + std::to_string(i + 1));
    for (std::size_t t = 0; t < T; ++t) panel.asset_prices(i, t) = value(s, t);
  }
  panel.validate();
  return panel;
}

inline Series series_returns(std::span<const double> prices, ReturnKind kind) {
  Series r(prices.size() > 0 ? prices.size() - 1 : 0);
  for (std::size_t t = 1; t < prices.size(); ++t)
    r[t - 1] = kind == ReturnKind::Log ? std::log(prices[t] / prices[t - 1]) : (prices[t] - prices[t - 1]) / prices[t - 1];
  return r;
}

inline ReturnPanel compute_returns(const PricePanel& panel, ReturnKind kind) {
  if (panel.periods() < 2) throw DataError("returns need at least 2 price periods");
  ReturnPanel out;
  out.kind = kind;
  out.asset_ids = panel.asset_ids;
  out.index_id = panel.index_id;
  out.index_returns = series_returns(panel.index_prices, kind);
  const auto T1 = static_cast<Eigen::Index>(panel.periods() - 1);
  out.asset_returns.resize(panel.asset_prices.rows(), T1);
  for (Eigen::Index i = 0; i < panel.asset_prices.rows(); ++i) {
    auto r = series_returns(row_span(panel.asset_prices, i), kind);
    for (Eigen::Index t = 0; t < T1; ++t) out.asset_returns(i, t) = r[t];
  }
  return out;
}

/// Rolling windows over a series of length T: in-sample block then out-of-sample block,
/// starting at offsets 0, step, 2*step, ... while a full window fits.
inline std::vector<WindowPlan> make_windows(std::size_t T, std::size_t in_len, std::size_t out_len, std::size_t step) {
  if (in_len == 0 || out_len == 0) throw ConfigError("window lengths must be positive");
  if (step == 0) throw ConfigError("window step must be >= 1");
  if (in_len + out_len > T)
    throw ConfigError("window of " + std::to_string(in_len + out_len) + " points does not fit a series of " + std::to_string(T));
  std::vector<WindowPlan> out;
  for (std::size_t o = 0; o + in_len + out_len <= T; o += step)
    out.push_back({o, o + in_len, o + in_len, o + in_len + out_len});
  return out;
}

inline SubSeriesPlan make_subseries_plan(std::size_t T, std::size_t length, std::size_t shift) {
  if (length < 1 || length > T) throw ConfigError("sub-series length must lie in [1, T]");
  if (shift < 1 || shift > length) throw ConfigError("sub-series shift must lie in [1, length]");
  if ((T - length) % shift != 0)
    throw ConfigError("T - length (" + std::to_string(T - length) + ") is not divisible by shift " + std::to_string(shift));
  return {length, shift, (T - length) / shift + 1};
}

/// Default plan: length near ceil(T/3) and shift near half the length, nudged until the
/// divisibility constraint T - length = shift * (count - 1) holds.
inline SubSeriesPlan default_subseries_plan(std::size_t T) {
  if (T == 0) throw ConfigError("empty series");
  const std::size_t l0 = (T + 2) / 3;
  auto try_length = [&](std::size_t l, SubSeriesPlan& plan) {
    if (l < 1 || l > T) return false;
    if (l == T) {
      plan = {l, l, 1};
      return true;
    }
    const std::size_t target = (l + 1) / 2;
    const std::size_t slack = std::max<std::size_t>(1, (l + 3) / 4);
    for (std::size_t d = 0; d <= slack; ++d) {
      for (std::size_t eta : {target + d, target >= d ? target - d : 0}) {
        if (eta < 1 || eta > l) continue;
        if ((T - l) % eta == 0) {
          plan = {l, eta, (T - l) / eta + 1};
          return true;
        }
      }
    }
    return false;
  };
  SubSeriesPlan plan;
  for (std::size_t delta = 0; delta <= T; ++delta) {
    if (try_length(l0 + delta, plan)) return plan;
    if (delta <= l0 && try_length(l0 - delta, plan)) return plan;
  }
  return {T, T, 1};
}

inline std::vector<Series> make_subseries(std::span<const double> series, std::size_t length, std::size_t shift) {
  const auto plan = make_subseries_plan(series.size(), length, shift);
  std::vector<Series> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    auto first = series.begin() + static_cast<std::ptrdiff_t>(i * shift);
    out.emplace_back(first, first + static_cast<std::ptrdiff_t>(length));
  }
  return out;
}

inline std::vector<double> uniform_weights(std::size_t m) { return std::vector<double>(m, 1.0 / static_cast<double>(m)); }

inline void validate_weights(const std::vector<double>& w, std::size_t m) {
  if (w.size() != m) throw ConfigError("sub-series weight count " + std::to_string(w.size()) + " differs from count " + std::to_string(m));
  double s = 0;
  for (double x : w) {
    if (!(x > 0)) throw ConfigError("sub-series weights must be positive");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError("sub-series weights must sum to 1");
}

}  // namespace tdaport
