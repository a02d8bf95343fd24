/**
 * @file models.hpp
 * @brief From-scratch binary classifiers behind one Model value type.
 *
 * Every model maps a feature row to P(class 1); the predicted class is 1 iff
 * that probability is at least 0.5. Fitted models are immutable and can be
 * shared across threads.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "metaboost/ingest.hpp"
#include "metaboost/matrix.hpp"
#include "metaboost/tree.hpp"

namespace metaboost {

enum class ModelKind { decision_tree, random_forest, gbt, logistic_regression };

std::string_view model_name(ModelKind kind);
/// DT, RF, GBT (alias XGB), LR; case-insensitive.
ModelKind parse_model_kind(std::string_view name);

struct TreeParams {
  int max_depth = -1;
  std::size_t min_samples_split = 2;
};

struct ForestParams {
  std::size_t n_trees = 200;
  int max_depth = -1;
  std::size_t max_features = 0;  ///< 0 selects floor(sqrt(d))
  bool bootstrap = true;
};

struct GbtParams {
  std::size_t n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 4;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

struct LogisticParams {
  double l2 = 1e-3;
  std::size_t epochs = 2000;
  double learning_rate = 0.1;
};

struct Hyperparameters {
  TreeParams tree;
  ForestParams forest;
  GbtParams gbt;
  LogisticParams logistic;
};

struct DecisionTreeModel {
  Tree tree;
};

struct RandomForestModel {
  std::vector<Tree> trees;
};

struct GbtModel {
  double base_score = 0.0;
  std::vector<Tree> trees;
  /// Mean training log-loss after the prior and after each round (n_rounds + 1 entries).
  std::vector<double> loss_history;
};

struct LogisticModel {
  Standardizer scaling;
  std::vector<double> weights;
  double bias = 0.0;
};

class Model {
 public:
  using Params = std::variant<DecisionTreeModel, RandomForestModel, GbtModel, LogisticModel>;

  Model(ModelKind kind, Params params, std::size_t n_features, std::uint64_t seed)
      : kind_(kind), params_(std::move(params)), n_features_(n_features), seed_(seed) {}

  ModelKind kind() const { return kind_; }
  std::size_t n_features() const { return n_features_; }
  std::uint64_t seed() const { return seed_; }
  const Params& params() const { return params_; }

  double predict_proba(std::span<const double> row) const;
  /// Throws SchemaError when the column count differs from training.
  std::vector<double> predict_proba(const Matrix& x) const;
  int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5 ? 1 : 0; }
  std::vector<int> predict(const Matrix& x) const;

 private:
  ModelKind kind_;
  Params params_;
  std::size_t n_features_;
  std::uint64_t seed_;
};

/// Throws FitError on an empty training set, DataError on non-finite input.
Model fit(ModelKind kind, const Dataset& train, const Hyperparameters& hp, std::uint64_t seed);

double sigmoid(double z);

/// Mean log-loss of probabilities `p` against labels `y`.
double log_loss(std::span<const double> p, std::span<const int> y);

/// L2-regularized mean log-loss of a linear model on (already scaled) rows,
/// J = mean(log-loss) + l2/2 * |w|^2 with an unpenalized bias. Fills the
/// gradient when the output pointers are non-null.
double logistic_objective(const Matrix& z, std::span<const int> y, std::span<const double> w, double b, double l2,
                          std::vector<double>* grad_w = nullptr, double* grad_b = nullptr);

/// Text serialization with a version header and kind tag. Doubles are written
/// as hex floats so a reloaded model predicts bit-identically.
void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace metaboost
