#include "metaboost/neighbors.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "metaboost/error.hpp"

namespace metaboost {

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::vector<std::size_t> k_nearest(const Matrix& points, std::span<const double> query, std::size_t k,
                                   std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (exclude && *exclude == r) continue;
    dist.emplace_back(squared_euclidean(points.row(r), query), r);
  }
  if (dist.size() < k)
    throw NeighborError("requested " + std::to_string(k) + " neighbours but only " +
                        std::to_string(dist.size()) + " candidates exist");
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::size_t nearest(const Matrix& points, std::span<const double> query) {
  if (points.rows() == 0) throw NeighborError("nearest: empty candidate set");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_row = 0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    const double d = squared_euclidean(points.row(r), query);
    if (d < best) {
      best = d;
      best_row = r;
    }
  }
  return best_row;
}

}  // namespace metaboost
