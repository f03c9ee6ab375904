#pragma once

#include "tdaport/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace tdaport {

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.5;  // upper tail
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double mean(std::span<const double> x) {
  if (x.empty()) throw DataError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance, denominator n-1.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) throw DataError("variance needs at least 2 observations");
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("series lengths differ");
  if (x.size() < 2) throw DataError("covariance needs at least 2 observations");
  const double mx = mean(x), my = mean(y);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

/// H0: mean <= mu0 against mean > mu0; p = P(t_{N-1} > t).
inline TestResult ttest_one_tailed(std::span<const double> sample, double mu0) {
  const auto N = sample.size();
  if (N < 2) throw DataError("t-test needs at least 2 observations");
  const double m = mean(sample);
  const double S = std::sqrt(variance(sample));
  if (!(S > 0)) throw NumericalError("t-test: zero sample variance");
  TestResult r;
  r.statistic = (m - mu0) / (S / std::sqrt(static_cast<double>(N)));
  boost::math::students_t dist(static_cast<double>(N - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

namespace detail {

inline std::vector<double> paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired series lengths differ");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

inline bool identical(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace detail

/// One-tailed paired test that series a has a larger mean than b.
inline TestResult paired_mean_test(std::span<const double> a, std::span<const double> b) {
  if (detail::identical(a, b)) return {};
  return ttest_one_tailed(detail::paired_difference(a, b), 0.0);
}

/// One-tailed test of TE(a) > TE(b) on the per-period squared deviations from the index.
inline TestResult tracking_error_test(std::span<const double> a, std::span<const double> b, std::span<const double> index) {
  if (a.size() != index.size() || b.size() != index.size()) throw DataError("tracking series lengths differ");
  if (detail::identical(a, b)) return {};
  std::vector<double> d(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) d[t] = (a[t] - index[t]) * (a[t] - index[t]) - (b[t] - index[t]) * (b[t] - index[t]);
  return ttest_one_tailed(d, 0.0);
}

enum class UpsilonForm {
  Memmel,   // 0.5 mu1^2 sigma2^2 + 0.5 mu2^2 sigma1^2 terms
  Printed,  // the same terms with unsquared means
};

/// Asymptotic variance term of the Sharpe-ratio difference statistic.
inline double sharpe_upsilon(double m1, double m2, double s1, double s2, double s12, std::size_t n, UpsilonForm form) {
  const double a = form == UpsilonForm::Memmel ? m1 * m1 : m1;
  const double b = form == UpsilonForm::Memmel ? m2 * m2 : m2;
  return (2 * s1 * s1 * s2 * s2 - 2 * s1 * s2 * s12 + 0.5 * a * s2 * s2 + 0.5 * b * s1 * s1 - m1 * m2 / (s1 * s2) * s12 * s12) /
         static_cast<double>(n);
}

/// z = (sigma2 mu1 - sigma1 mu2) / sqrt(Upsilon), upper-tail normal p-value (H_a: SR1 > SR2).
/// Moments use n-1 denominators.
inline TestResult sharpe_z_test(std::span<const double> r1, std::span<const double> r2, UpsilonForm form = UpsilonForm::Memmel) {
  if (r1.size() != r2.size()) throw DataError("Sharpe test series lengths differ");
  if (r1.size() < 2) throw DataError("Sharpe test needs at least 2 observations");
  const double s1 = std::sqrt(variance(r1)), s2 = std::sqrt(variance(r2));
  if (!(s1 > 0) || !(s2 > 0)) throw NumericalError("Sharpe test: zero variance");
  if (detail::identical(r1, r2)) return {};
  const double m1 = mean(r1), m2 = mean(r2), s12 = covariance(r1, r2);
  const double ups = sharpe_upsilon(m1, m2, s1, s2, s12, r1.size(), form);
  if (!(ups > 0)) throw NumericalError("Sharpe test: non-positive variance term " + std::to_string(ups));
  TestResult r;
  r.statistic = (s2 * m1 - s1 * m2) / std::sqrt(ups);
  r.p_value = 1.0 - normal_cdf(r.statistic);
  return r;
}

inline double ceq(std::span<const double> r, double gamma) { return mean(r) - 0.5 * gamma * variance(r); }

/// Delta-method z-test of CEQ1 > CEQ2. Under joint normality the moment vector
/// (mu1, mu2, s1^2, s2^2) has asymptotic covariance Theta/n with
/// Theta = [[s1^2, s12, 0, 0], [s12, s2^2, 0, 0], [0, 0, 2 s1^4, 2 s12^2], [0, 0, 2 s12^2, 2 s2^4]],
/// and the gradient of CEQ1 - CEQ2 is (1, -1, -gamma/2, gamma/2).
inline TestResult ceq_test(std::span<const double> r1, std::span<const double> r2, double gamma = 1.0) {
  if (r1.size() != r2.size()) throw DataError("CEQ test series lengths differ");
  if (r1.size() < 3) throw DataError("CEQ test needs at least 3 observations");
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (detail::identical(r1, r2)) return {};
  const double v1 = variance(r1), v2 = variance(r2), c = covariance(r1, r2);
  const double g = 0.5 * gamma;
  const double var = (v1 + v2 - 2 * c) + g * g * (2 * v1 * v1 + 2 * v2 * v2 - 4 * c * c);
  const double se = std::sqrt(var / static_cast<double>(r1.size()));
  if (!(se > 0)) throw NumericalError("CEQ test: degenerate variance");
  TestResult r;
  r.statistic = (ceq(r1, gamma) - ceq(r2, gamma)) / se;
  r.p_value = 1.0 - normal_cdf(r.statistic);
  return r;
}

}  // namespace tdaport
