#include "metaboost/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace metaboost {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  }
  if (values.size() != cols_) {
    throw std::invalid_argument("Matrix::append_row: width mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) {
    throw std::invalid_argument("Standardizer: mean/scale size mismatch");
  }
}

Standardizer Standardizer::fit(const Matrix& x) {
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 1.0);
  if (x.rows() == 0) return Standardizer(mean, scale);
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
  for (auto& m : mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = x(r, c) - mean[c];
      var[c] += dv * dv;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / n);
    scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return Standardizer(std::move(mean), std::move(scale));
}

std::vector<double> Standardizer::transform(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) out[c] = transform(c, row[c]);
  return out;
}

Matrix Standardizer::transform(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = transform(c, x(r, c));
  return out;
}

double Standardizer::squared_distance(std::span<const double> a,
                                      std::span<const double> b) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double dv = (a[c] - b[c]) / scale_[c];
    acc += dv * dv;
  }
  return acc;
}

double Standardizer::l1_distance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += std::abs(a[c] - b[c]) / scale_[c];
  return acc;
}

}  // namespace metaboost
