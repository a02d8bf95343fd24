#include "metaboost/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "metaboost/error.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

namespace {

std::size_t grid_divisions(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw BalanceError("sweep step must lie in (0, 1]");
  const double inv = 1.0 / step;
  const auto n = static_cast<std::size_t>(std::llround(inv));
  if (n == 0 || std::abs(static_cast<double>(n) * step - 1.0) > 1e-9)
    throw BalanceError("sweep step " + std::to_string(step) + " does not divide 1");
  return n;
}

void compositions(std::size_t parts, std::size_t total, std::vector<std::size_t>& prefix,
                  std::vector<std::vector<std::size_t>>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (std::size_t i = 0; i <= total; ++i) {
    prefix.push_back(i);
    compositions(parts - 1, total - i, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<HybridWeights> simplex_grid(std::size_t n_methods, double step) {
  if (n_methods == 0) throw BalanceError("simplex_grid: no methods");
  const std::size_t n = grid_divisions(step);
  std::vector<std::vector<std::size_t>> parts;
  std::vector<std::size_t> prefix;
  compositions(n_methods, n, prefix, parts);
  std::vector<HybridWeights> grid;
  grid.reserve(parts.size());
  for (const auto& p : parts) {
    std::vector<double> w(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) w[i] = static_cast<double>(p[i]) / static_cast<double>(n);
    grid.emplace_back(std::move(w));
  }
  return grid;
}

std::uint64_t pool_seed(std::uint64_t seed, Method method) {
  return derive_seed(seed, {0x9001, static_cast<std::uint64_t>(method)});
}

std::vector<SyntheticPool> sweep_pools(const Dataset& train, const std::vector<BalancerSpec>& methods,
                                       std::uint64_t seed) {
  const auto deficit = class_counts(train).deficit();
  std::vector<SyntheticPool> pools;
  for (const auto& spec : methods) pools.push_back(generate_pool(train, spec, deficit, pool_seed(seed, spec.method)));
  return pools;
}

std::vector<SweepResult> sweep_weights(const Dataset& train, const std::vector<SyntheticPool>& pools,
                                       const std::vector<HybridWeights>& grid, const SweepEvaluator& evaluator,
                                       std::uint64_t seed) {
  const auto deficit = class_counts(train).deficit();
  std::vector<SweepResult> results;
  results.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepResult r{grid[g], {}, {}, g, std::nullopt};
    const std::uint64_t point_seed = derive_seed(seed, {0x5EE9, g});
    try {
      const auto hybrid = hybrid_combine(pools, grid[g], deficit, point_seed);
      const auto ev = evaluator(top_up(train, hybrid), point_seed);
      r.metrics = ev.mean;
      r.seeds = ev.seeds;
    } catch (const Error& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(), [](const SweepResult& a, const SweepResult& b) {
    if (a.error.has_value() != b.error.has_value()) return !a.error.has_value();
    return a.metrics.f1 > b.metrics.f1;
  });
  return results;
}

std::vector<SweepResult> sweep_pair(const Dataset& train, const BalancerSpec& a, const BalancerSpec& b, double step,
                                    const SweepEvaluator& evaluator, std::uint64_t seed) {
  const auto grid = simplex_grid(2, step);
  return sweep_weights(train, sweep_pools(train, {a, b}, seed), grid, evaluator, seed);
}

std::vector<SweepResult> sweep_triple(const Dataset& train, double step, const SweepEvaluator& evaluator,
                                      std::uint64_t seed, std::size_t k, const GenerativeSource& source) {
  const std::vector<BalancerSpec> methods = {
      {Method::smote, k, {}}, {Method::generative, k, source}, {Method::adasyn, k, {}}};
  const auto grid = simplex_grid(3, step);
  return sweep_weights(train, sweep_pools(train, methods, seed), grid, evaluator, seed);
}

}  // namespace metaboost
