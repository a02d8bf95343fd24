#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "metaboost/ingest.hpp"
#include "metaboost/models.hpp"

namespace metaboost {

/// Positive class is label 1 (condition present).
struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_runs = 1;
};

Confusion confusion(std::span<const int> truth, std::span<const int> predicted);

/// Precision and recall are 0 when their denominators are 0.
Metrics metrics_from_confusion(const Confusion& c);

/// 2pr/(p+r), or 0 when either is 0.
double f1_score(double precision, double recall);

/// Anything that labels rows can be evaluated, not only the built-in models.
using Predictor = std::function<std::vector<int>(const Matrix&)>;
using PredictorFactory = std::function<Predictor(const Dataset& train, std::uint64_t seed)>;
using ModelFactory = std::function<Model(const Dataset& train, std::uint64_t seed)>;

struct Evaluation {
  Metrics mean;  ///< arithmetic mean of each metric over the runs
  std::vector<Metrics> runs;
  std::vector<Confusion> confusions;
  std::vector<std::uint64_t> seeds;
};

/// Trains n_runs predictors with seeds seed, seed+1, ... on split.train and
/// scores each on split.test. Throws DataError if the test set is not class-balanced.
Evaluation evaluate(const PredictorFactory& factory, const TrainTestSplit& split, std::size_t n_runs,
                    std::uint64_t seed);
Evaluation evaluate(const ModelFactory& factory, const TrainTestSplit& split, std::size_t n_runs,
                    std::uint64_t seed);

/// Factory that fits `kind` with `hp` directly on the training set it receives.
ModelFactory model_factory(ModelKind kind, const Hyperparameters& hp);

}  // namespace metaboost
