#include "metaboost/evaluate.hpp"

#include <memory>

#include "metaboost/error.hpp"

namespace metaboost {

Confusion confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw DataError("confusion: label and prediction counts differ");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1)
      (truth[i] == 1 ? c.tp : c.fp) += 1;
    else
      (truth[i] == 1 ? c.fn : c.tn) += 1;
  }
  return c;
}

double f1_score(double precision, double recall) {
  if (precision <= 0.0 || recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

Evaluation evaluate(const PredictorFactory& factory, const TrainTestSplit& split, std::size_t n_runs,
                    std::uint64_t seed) {
  if (n_runs == 0) throw DataError("evaluate: n_runs must be positive");
  if (split.test.count(0) != split.test.count(1))
    throw DataError("evaluate: test set is not class-balanced (" + std::to_string(split.test.count(1)) +
                    " positive vs " + std::to_string(split.test.count(0)) + " negative)");
  Evaluation ev;
  for (std::size_t r = 0; r < n_runs; ++r) {
    const std::uint64_t run_seed = seed + r;
    auto predictor = factory(split.train, run_seed);
    const auto predicted = predictor(split.test.x);
    const auto c = confusion(split.test.y, predicted);
    ev.confusions.push_back(c);
    ev.runs.push_back(metrics_from_confusion(c));
    ev.seeds.push_back(run_seed);
  }
  const double n = static_cast<double>(n_runs);
  for (const auto& m : ev.runs) {
    ev.mean.accuracy += m.accuracy / n;
    ev.mean.precision += m.precision / n;
    ev.mean.recall += m.recall / n;
    ev.mean.f1 += m.f1 / n;
  }
  ev.mean.n_runs = n_runs;
  return ev;
}

Evaluation evaluate(const ModelFactory& factory, const TrainTestSplit& split, std::size_t n_runs,
                    std::uint64_t seed) {
  PredictorFactory wrapped = [&factory](const Dataset& train, std::uint64_t s) -> Predictor {
    auto model = std::make_shared<Model>(factory(train, s));
    return [model](const Matrix& x) { return model->predict(x); };
  };
  return evaluate(wrapped, split, n_runs, seed);
}

ModelFactory model_factory(ModelKind kind, const Hyperparameters& hp) {
  return [kind, hp](const Dataset& train, std::uint64_t seed) { return fit(kind, train, hp, seed); };
}

}  // namespace metaboost
