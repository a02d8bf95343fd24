/**
 * @file balance.hpp
 * @brief Minority oversampling: random oversampling, SMOTE, ADASYN, a
 * pluggable generative source and the nearest-match weighted hybrid.
 *
 * Every synthetic generator returns a SyntheticPool of minority-class rows in
 * raw feature units. Neighbour searches run on features standardized by the
 * training set; that scaling travels with the pool. Pools keep interpolated
 * values as-is; categorical columns are snapped to admissible codes only when
 * a pool is merged into a training set by top_up().
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaboost/ingest.hpp"
#include "metaboost/matrix.hpp"

namespace metaboost {

enum class Method { ros, smote, adasyn, generative, hybrid };

std::string_view method_name(Method m);
/// Accepts ROS, SMOTE, ADASYN, GENERATIVE (alias CTGAN), case-insensitive.
Method parse_method(std::string_view name);

/// Where generative samples come from. An empty path selects the built-in
/// Gaussian copula; otherwise rows are read from that CSV.
struct GenerativeSource {
  std::filesystem::path external;
  bool is_external() const { return !external.empty(); }
};

struct BalancerSpec {
  Method method = Method::smote;
  std::size_t k = 5;
  GenerativeSource source;
};

struct SyntheticPool {
  Matrix samples;
  Method method = Method::smote;
  std::uint64_t seed = 0;
  Standardizer scaling;
  /// Per sample: SMOTE/ADASYN {anchor row, neighbour row} as training-set row
  /// indices; hybrid: the matched row in each active pool. Empty otherwise.
  std::vector<std::vector<std::size_t>> lineage;
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.rows(); }
};

/// Convex weights over the constituent methods of a hybrid.
class HybridWeights {
 public:
  explicit HybridWeights(std::vector<double> values);
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

struct ClassCounts {
  int minority_label = 1;
  std::size_t minority = 0;
  std::size_t majority = 0;
  std::size_t deficit() const { return majority - minority; }
};

/// Throws BalanceError unless both classes are present.
ClassCounts class_counts(const Dataset& train);

Dataset random_oversample(const Dataset& train, std::uint64_t seed);

struct SmoteOptions {
  std::size_t k = 5;
  /// Fixes the interpolation factor instead of drawing it from U(0,1).
  std::optional<double> fixed_delta;
};

SyntheticPool smote(const Dataset& train, std::size_t n_new, std::uint64_t seed, const SmoteOptions& opts = {});

/// Fraction of majority rows among each minority row's k nearest neighbours
/// over the whole training set, in minority-row order.
std::vector<double> adasyn_ratios(const Dataset& train, std::size_t k);

struct AdasynAllocation {
  std::vector<std::size_t> counts;
  bool uniform_fallback = false;
};

/// g_i = round(r_i / sum(r) * total); spreads `total` evenly when every ratio is zero.
AdasynAllocation adasyn_allocation(std::span<const double> ratios, std::size_t total);

SyntheticPool adasyn(const Dataset& train, std::uint64_t seed, std::size_t k = 5);

/// Reads externally generated minority rows whose header matches the schema.
Matrix read_external_samples(const std::filesystem::path& path, const FeatureSchema& schema);

SyntheticPool generative_sample(const Dataset& train, const GenerativeSource& source, std::size_t n_new,
                                std::uint64_t seed);

/// Weighted average of nearest-matched tuples. Anchors are drawn uniformly
/// from the first pool with nonzero weight; every other active pool
/// contributes its nearest row to the anchor. Zero-weight pools are ignored,
/// and a single active pool is returned row for row (cycling if n_new exceeds it).
SyntheticPool hybrid_combine(const std::vector<SyntheticPool>& pools, const HybridWeights& weights,
                             std::size_t n_new, std::uint64_t seed);

/// Exactly n_new synthetic rows from the method in `spec` (ROS is not a pool method).
SyntheticPool generate_pool(const Dataset& train, const BalancerSpec& spec, std::size_t n_new,
                            std::uint64_t seed);

/// Appends every pool row as the minority class, snapping categorical codes.
/// Synthetic rows get ids -1, -2, ...
Dataset top_up(const Dataset& train, const SyntheticPool& pool);

/// Oversamples the minority class to exact parity with the given method.
Dataset balance_to_parity(const Dataset& train, const BalancerSpec& spec, std::uint64_t seed);

}  // namespace metaboost
