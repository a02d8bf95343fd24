#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "metaboost/matrix.hpp"

namespace metaboost {

/// Top-two principal components of standardized data.
struct Pca2 {
  /// Columns of the input that had nonzero variance and were used.
  std::vector<std::size_t> kept;
  /// Mean/std of the kept columns.
  Standardizer scaling;
  /// Unit-length, mutually orthogonal, in standardized kept-column space.
  std::array<std::vector<double>, 2> components;
  /// Variance captured by each component; variances[0] >= variances[1].
  std::array<double, 2> variances{};
  std::vector<std::string> warnings;

  std::array<double, 2> project(std::span<const double> raw_row) const;
  /// Point in standardized kept-column space that projects to (u, v).
  std::vector<double> reconstruct(double u, double v) const;
};

/// Drops zero-variance columns (with a warning), standardizes the rest and
/// takes the two leading eigenvectors of their covariance. Each component's
/// largest-magnitude entry is made positive. Throws DataError with fewer than
/// two usable columns or three rows.
Pca2 fit_pca2(const Matrix& x);

}  // namespace metaboost
