#pragma once

#include <cstddef>
#include <vector>

#include "metaboost/matrix.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

/// Gaussian copula over empirical marginals.
///
/// Fitting maps every column to normal scores through its rank, estimates the
/// correlation of those scores and keeps the sorted column values. Sampling
/// draws correlated normals, maps them back to uniforms and reads each
/// marginal through the inverse of its empirical CDF, so every generated
/// value is one of the observed values of that column.
class GaussianCopula {
 public:
  static GaussianCopula fit(const Matrix& rows);

  std::size_t dims() const { return sorted_.size(); }
  /// Lower-triangular Cholesky factor of the normal-score correlation, row-major d x d.
  const std::vector<double>& cholesky() const { return chol_; }

  Matrix sample(std::size_t n, Rng& rng) const;

 private:
  std::vector<std::vector<double>> sorted_;
  std::vector<double> chol_;
};

double normal_cdf(double z);
double normal_quantile(double p);
double standard_normal(Rng& rng);

}  // namespace metaboost
