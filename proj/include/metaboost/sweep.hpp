#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metaboost/balance.hpp"
#include "metaboost/evaluate.hpp"

namespace metaboost {

struct SweepResult {
  HybridWeights weights;
  Metrics metrics;
  std::vector<std::uint64_t> seeds;
  std::size_t grid_index = 0;
  /// Set when balancing or evaluation failed at this grid point.
  std::optional<std::string> error;
};

/// All weight vectors over `n_methods` methods with components in multiples
/// of `step` that sum to 1. Throws BalanceError unless 1/step is an integer.
/// Order: the first component varies slowest, the last takes the remainder.
std::vector<HybridWeights> simplex_grid(std::size_t n_methods, double step);

/// Scores a balanced training set, typically with the multi-run protocol.
using SweepEvaluator = std::function<Evaluation(const Dataset& balanced_train, std::uint64_t seed)>;

/// Seed used to draw the constituent pool of `method` for a sweep with master seed `seed`.
std::uint64_t pool_seed(std::uint64_t seed, Method method);

/// Each method generates the full deficit once; every grid point then tops up
/// the training set with a hybrid of those pools. Results are sorted by F1
/// (descending, ties by grid order) with failed points last.
std::vector<SweepResult> sweep_weights(const Dataset& train, const std::vector<SyntheticPool>& pools,
                                       const std::vector<HybridWeights>& grid, const SweepEvaluator& evaluator,
                                       std::uint64_t seed);

/// Builds the per-method pools with pool_seed().
std::vector<SyntheticPool> sweep_pools(const Dataset& train, const std::vector<BalancerSpec>& methods,
                                       std::uint64_t seed);

std::vector<SweepResult> sweep_pair(const Dataset& train, const BalancerSpec& a, const BalancerSpec& b, double step,
                                    const SweepEvaluator& evaluator, std::uint64_t seed);

/// Weights are ordered (SMOTE, GENERATIVE, ADASYN).
std::vector<SweepResult> sweep_triple(const Dataset& train, double step, const SweepEvaluator& evaluator,
                                      std::uint64_t seed, std::size_t k = 5, const GenerativeSource& source = {});

}  // namespace metaboost
