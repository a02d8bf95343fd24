/**
 * @file counterfactual.hpp
 * @brief Nearest-instance counterfactuals, their summary statistics and a
 * two-component PCA view of the decision boundary.
 *
 * A counterfactual for x starts at x and greedily copies feature values from
 * the nearest training instance that the model assigns to the other class
 * (its nearest unlike neighbour) until the predicted class flips. Distances
 * are L1 over features standardized by the training set.
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metaboost/ingest.hpp"
#include "metaboost/models.hpp"
#include "metaboost/pca.hpp"

namespace metaboost {

struct CfResult {
  std::int64_t id = 0;
  std::vector<double> original;
  std::vector<double> counterfactual;
  std::vector<bool> changed;
  double l1 = 0.0;  ///< standardized L1 distance original -> counterfactual
  std::size_t l0 = 0;
  int original_class = 0;
  int counterfactual_class = 0;
  bool valid = false;
  std::size_t neighbour_row = 0;  ///< training row the values were copied from
};

struct CfConfig {
  /// Penalty added to a candidate's distance when it does not flip the class.
  double lambda = 1.0;
};

enum class CfPopulation { all, correct };

/// Binds a model to the training set searched for unlike neighbours. The
/// model and dataset must outlive the explainer.
class CounterfactualExplainer {
 public:
  CounterfactualExplainer(const Model& model, const Dataset& train);

  const Standardizer& scaling() const { return scaling_; }

  /// Training row with minimal standardized L1 distance among rows the model
  /// places in the other class; ties go to the lowest row. Throws SearchError
  /// if there is none.
  std::size_t nearest_unlike_neighbor(std::span<const double> x) const;

  CfResult explain(std::span<const double> x, std::int64_t id = 0, const CfConfig& config = {}) const;

 private:
  const Model& model_;
  const Dataset& train_;
  Standardizer scaling_;
  std::vector<int> train_class_;
};

std::size_t nearest_unlike_neighbor(std::span<const double> x, const Dataset& train, const Model& model);
CfResult nice_counterfactual(std::span<const double> x, const Model& model, const Dataset& train, double lambda = 1.0);

/// Explains every row of `targets` (or only the correctly predicted ones).
std::vector<CfResult> explain_all(const Model& model, const Dataset& train, const Dataset& targets,
                                  const CfConfig& config = {}, CfPopulation population = CfPopulation::all);

struct CfSummary {
  std::size_t count = 0;
  double avg_norm_distance = 0.0;
  double std_norm_distance = 0.0;
  double avg_sparsity = 0.0;
  double std_sparsity = 0.0;
  double pct_features_changed = 0.0;  ///< in [0, 1]
};

/// Population standard deviations. Throws SummaryError on empty input or an invalid result.
CfSummary summarize(std::span<const CfResult> results, std::size_t n_features);

/// (feature, rate) sorted by rate descending, ties in feature order.
using FeatureChangeRates = std::vector<std::pair<std::string, double>>;
FeatureChangeRates feature_change_rates(std::span<const CfResult> results, const std::vector<std::string>& names);

struct BoundaryGrid {
  Pca2 pca;
  std::size_t resolution = 0;
  double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0;
  /// resolution x resolution labels; cell (i, j) at index j * resolution + i.
  std::vector<int> cells;
  /// (u0, v0, u1, v1) per original/counterfactual pair.
  std::vector<std::array<double, 4>> pairs;

  double u_at(std::size_t i) const;
  double v_at(std::size_t j) const;
};

/// Fits a random forest on the 2-D projections of `train` and labels a
/// resolution x resolution grid spanning the projected range plus 10% margin.
BoundaryGrid boundary_grid(const Dataset& train, std::span<const CfResult> pairs, std::size_t resolution,
                           const ForestParams& forest, std::uint64_t seed);

void write_counterfactuals_csv(std::span<const CfResult> results, const FeatureSchema& schema,
                               const std::filesystem::path& path, const std::string& header_comment = {});
void write_boundary_csv(const BoundaryGrid& grid, const std::filesystem::path& cells_path,
                        const std::filesystem::path& pairs_path, const std::string& header_comment = {});

}  // namespace metaboost
