#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "metaboost/matrix.hpp"

namespace metaboost {

double squared_euclidean(std::span<const double> a, std::span<const double> b);

/// Brute-force k nearest neighbours of `query` among the rows of `points`
/// (both already in the same scaled space). Ties go to the lower row index.
/// `exclude` removes one row (the query itself) from consideration.
std::vector<std::size_t> k_nearest(const Matrix& points, std::span<const double> query, std::size_t k,
                                   std::optional<std::size_t> exclude = std::nullopt);

/// Single nearest row; ties go to the lower row index.
std::size_t nearest(const Matrix& points, std::span<const double> query);

}  // namespace metaboost
