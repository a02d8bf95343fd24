#include "metaboost/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "metaboost/error.hpp"

namespace metaboost {

std::array<double, 2> Pca2::project(std::span<const double> raw_row) const {
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double z = scaling.transform(i, raw_row[kept[i]]);
    out[0] += components[0][i] * z;
    out[1] += components[1][i] * z;
  }
  return out;
}

std::vector<double> Pca2::reconstruct(double u, double v) const {
  std::vector<double> out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) out[i] = u * components[0][i] + v * components[1][i];
  return out;
}

Pca2 fit_pca2(const Matrix& x) {
  if (x.rows() < 3) throw DataError("PCA needs at least three rows");
  Pca2 pca;
  const auto full = Standardizer::fit(x);
  std::vector<double> mean, scale;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    bool constant = true;
    for (std::size_t r = 1; r < x.rows() && constant; ++r) constant = x(r, c) == x(0, c);
    if (constant) {
      pca.warnings.push_back("dropping zero-variance column " + std::to_string(c) + " before PCA");
      continue;
    }
    pca.kept.push_back(c);
    mean.push_back(full.mean()[c]);
    scale.push_back(full.scale()[c]);
  }
  const std::size_t d = pca.kept.size();
  if (d < 2) throw DataError("PCA needs at least two columns with nonzero variance");
  pca.scaling = Standardizer(mean, scale);

  Eigen::MatrixXd z(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) z(r, i) = pca.scaling.transform(i, x(r, pca.kept[i]));
  const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

  for (int k = 0; k < 2; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - k;  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(col).normalized();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    pca.components[k].assign(v.data(), v.data() + d);
    pca.variances[k] = solver.eigenvalues()(col);
  }
  return pca;
}

}  // namespace metaboost
