#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace tdaport {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Row-major storage keeps each row (one asset's series) contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Series = std::vector<double>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline Series to_series(std::span<const double> s) { return Series(s.begin(), s.end()); }

}  // namespace tdaport
