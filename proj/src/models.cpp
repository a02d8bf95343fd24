#include "metaboost/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::decision_tree: return "DT";
    case ModelKind::random_forest: return "RF";
    case ModelKind::gbt: return "GBT";
    case ModelKind::logistic_regression: return "LR";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  const auto t = csv::trim(name);
  if (csv::iequals(t, "DT") || csv::iequals(t, "DecisionTree")) return ModelKind::decision_tree;
  if (csv::iequals(t, "RF") || csv::iequals(t, "RandomForest")) return ModelKind::random_forest;
  if (csv::iequals(t, "GBT") || csv::iequals(t, "XGB")) return ModelKind::gbt;
  if (csv::iequals(t, "LR") || csv::iequals(t, "LogisticRegression")) return ModelKind::logistic_regression;
  throw ConfigError("unknown model kind \"" + std::string(t) + "\"");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_loss(std::span<const double> p, std::span<const int> y) {
  constexpr double eps = 1e-15;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], eps, 1.0 - eps);
    acc -= y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return acc / static_cast<double>(p.size());
}

double logistic_objective(const Matrix& z, std::span<const int> y, std::span<const double> w, double b, double l2,
                          std::vector<double>* grad_w, double* grad_b) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad_w) grad_w->assign(d, 0.0);
  if (grad_b) *grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = z.row(i);
    double t = b;
    for (std::size_t j = 0; j < d; ++j) t += w[j] * row[j];
    // log(1 + e^t) - y t, evaluated without overflow
    const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    loss += softplus - (y[i] ? t : 0.0);
    const double r = (sigmoid(t) - y[i]) * inv_n;
    if (grad_w)
      for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] += r * row[j];
    if (grad_b) *grad_b += r;
  }
  loss *= inv_n;
  double sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    sq += w[j] * w[j];
    if (grad_w) (*grad_w)[j] += l2 * w[j];
  }
  return loss + 0.5 * l2 * sq;
}

double Model::predict_proba(std::span<const double> row) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          return m.tree.predict(row);
        } else if constexpr (std::is_same_v<T, RandomForestModel>) {
          std::size_t votes = 0;
          for (const auto& t : m.trees) votes += t.predict(row) >= 0.5 ? 1 : 0;
          return static_cast<double>(votes) / static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<T, GbtModel>) {
          double margin = m.base_score;
          for (const auto& t : m.trees) margin += t.predict(row);
          return sigmoid(margin);
        } else {
          double t = m.bias;
          for (std::size_t j = 0; j < row.size(); ++j) t += m.weights[j] * m.scaling.transform(j, row[j]);
          return sigmoid(t);
        }
      },
      params_);
}

std::vector<double> Model::predict_proba(const Matrix& x) const {
  if (x.cols() != n_features_)
    throw SchemaError("model expects " + std::to_string(n_features_) + " features, got " + std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_proba(x.row(r));
  return out;
}

std::vector<int> Model::predict(const Matrix& x) const {
  auto p = predict_proba(x);
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= 0.5 ? 1 : 0;
  return out;
}

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

DecisionTreeModel fit_tree(const Dataset& train, const TreeParams& p) {
  Rng rng(0);
  const auto rows = all_rows(train.size());
  return {build_cart(train.x, train.y, rows, CartParams{p.max_depth, 0, p.min_samples_split}, rng)};
}

RandomForestModel fit_forest(const Dataset& train, const ForestParams& p, std::uint64_t seed) {
  const std::size_t n = train.size();
  const std::size_t d = train.n_features();
  std::size_t mtry = p.max_features;
  if (mtry == 0) mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  RandomForestModel m;
  m.trees.reserve(p.n_trees);
  for (std::size_t t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> rows;
    if (p.bootstrap) {
      rows.resize(n);
      for (auto& r : rows) r = uniform_index(rng, n);
    } else {
      rows = all_rows(n);
    }
    m.trees.push_back(build_cart(train.x, train.y, rows, CartParams{p.max_depth, mtry, 2}, rng));
  }
  return m;
}

GbtModel fit_gbt(const Dataset& train, const GbtParams& p) {
  const std::size_t n = train.size();
  GbtModel m;
  const double prior = std::clamp(static_cast<double>(train.count(1)) / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  m.base_score = std::log(prior / (1.0 - prior));
  std::vector<double> margin(n, m.base_score), prob(n), grad(n), hess(n);
  auto refresh = [&] {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
    m.loss_history.push_back(log_loss(prob, train.y));
  };
  refresh();
  const BoostTreeParams tp{p.max_depth, p.reg_lambda, p.gamma, p.min_child_weight, p.learning_rate};
  for (std::size_t round = 0; round < p.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = prob[i] - train.y[i];
      hess[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-16);
    }
    Tree tree = build_boost_tree(train.x, grad, hess, tp);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(train.x.row(i));
    m.trees.push_back(std::move(tree));
    refresh();
  }
  return m;
}

LogisticModel fit_logistic(const Dataset& train, const LogisticParams& p) {
  LogisticModel m;
  m.scaling = Standardizer::fit(train.x);
  const Matrix z = m.scaling.transform(train.x);
  m.weights.assign(train.n_features(), 0.0);
  std::vector<double> gw;
  double gb = 0.0;
  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    logistic_objective(z, train.y, m.weights, m.bias, p.l2, &gw, &gb);
    for (std::size_t j = 0; j < gw.size(); ++j) m.weights[j] -= p.learning_rate * gw[j];
    m.bias -= p.learning_rate * gb;
  }
  return m;
}

}  // namespace

Model fit(ModelKind kind, const Dataset& train, const Hyperparameters& hp, std::uint64_t seed) {
  if (train.size() == 0) throw FitError("cannot fit " + std::string(model_name(kind)) + " on an empty training set");
  train.validate();
  const std::size_t d = train.n_features();
  switch (kind) {
    case ModelKind::decision_tree: return Model(kind, fit_tree(train, hp.tree), d, seed);
    case ModelKind::random_forest: return Model(kind, fit_forest(train, hp.forest, seed), d, seed);
    case ModelKind::gbt: return Model(kind, fit_gbt(train, hp.gbt), d, seed);
    case ModelKind::logistic_regression: return Model(kind, fit_logistic(train, hp.logistic), d, seed);
  }
  throw FitError("unknown model kind");
}

}  // namespace metaboost
