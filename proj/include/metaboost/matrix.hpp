#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metaboost {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  /// Appends a row; the first append on an empty 0-column matrix fixes the width.
  void append_row(std::span<const double> values);

  std::vector<double> column(std::size_t c) const;
  Matrix select_rows(std::span<const std::size_t> indices) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-column mean/standard-deviation scaling. Columns with zero spread keep
/// scale 1 so they pass through centred but unscaled.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> scale);

  static Standardizer fit(const Matrix& x);

  std::size_t dims() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

  double transform(std::size_t col, double value) const {
    return (value - mean_[col]) / scale_[col];
  }
  std::vector<double> transform(std::span<const double> row) const;
  Matrix transform(const Matrix& x) const;

  /// Euclidean distance between two raw rows measured in standardized units.
  double squared_distance(std::span<const double> a, std::span<const double> b) const;
  /// L1 distance between two raw rows measured in standardized units.
  double l1_distance(std::span<const double> a, std::span<const double> b) const;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace metaboost
