#include "metaboost/copula.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "metaboost/error.hpp"

namespace metaboost {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double standard_normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Average ranks (1-based) so tied values share a normal score.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

GaussianCopula GaussianCopula::fit(const Matrix& rows) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  if (n < 2) throw BalanceError("Gaussian copula needs at least two rows to fit");

  GaussianCopula cop;
  Eigen::MatrixXd scores(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    auto col = rows.column(c);
    auto ranks = average_ranks(col);
    for (std::size_t r = 0; r < n; ++r)
      scores(r, c) = normal_quantile(ranks[r] / static_cast<double>(n + 1));
    std::sort(col.begin(), col.end());
    cop.sorted_.push_back(std::move(col));
  }

  Eigen::MatrixXd centered = scores.rowwise() - scores.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      if (i != j && denom > 0.0) corr(i, j) = cov(i, j) / denom;
    }

  // Near-duplicate columns make the correlation singular; shrink towards the
  // identity until the factorisation succeeds.
  double ridge = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::MatrixXd shrunk = (1.0 - ridge) * corr + ridge * Eigen::MatrixXd::Identity(d, d);
    llt.compute(shrunk);
    if (llt.info() == Eigen::Success) break;
    ridge = ridge == 0.0 ? 1e-8 : ridge * 4.0;
  }
  if (llt.info() != Eigen::Success) throw BalanceError("Gaussian copula: correlation is not positive definite");
  Eigen::MatrixXd lower = llt.matrixL();
  cop.chol_.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) cop.chol_[i * d + j] = lower(i, j);
  return cop;
}

Matrix GaussianCopula::sample(std::size_t n, Rng& rng) const {
  const std::size_t d = dims();
  Matrix out(n, d);
  std::vector<double> e(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : e) v = standard_normal(rng);
    for (std::size_t i = 0; i < d; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) z += chol_[i * d + j] * e[j];
      const auto& col = sorted_[i];
      const double m = static_cast<double>(col.size());
      // Generalised inverse of the empirical CDF: smallest x with F(x) >= u.
      const double u = normal_cdf(z);
      auto idx = static_cast<std::size_t>(std::ceil(u * m));
      idx = std::clamp<std::size_t>(idx, 1, col.size());
      out(r, i) = col[idx - 1];
    }
  }
  return out;
}

}  // namespace metaboost
