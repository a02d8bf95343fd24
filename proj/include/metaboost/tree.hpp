#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metaboost/matrix.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

/// A node is internal when `feature >= 0`; rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct CartParams {
  int max_depth = -1;               ///< negative means unlimited
  std::size_t max_features = 0;     ///< features tried per split; 0 means all
  std::size_t min_samples_split = 2;
};

/// Gini-impurity classification tree. `rows` may repeat indices (bootstrap).
/// Leaves hold the fraction of class-1 rows. Ties in split quality go to the
/// lowest feature index, then the lowest threshold.
Tree build_cart(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows, const CartParams& params,
                Rng& rng);

struct BoostTreeParams {
  int max_depth = 4;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  double learning_rate = 0.1;
};

/// Second-order regression tree on gradient/hessian statistics. A split is
/// kept only if ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ > 0; leaves hold
/// −η·G/(H+λ).
Tree build_boost_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                      const BoostTreeParams& params);

}  // namespace metaboost
