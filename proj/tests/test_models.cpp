#include <cmath>
#include <sstream>

#include "doctest.h"
#include "metaboost/error.hpp"
#include "metaboost/models.hpp"
#include "support.hpp"

using namespace metaboost;

namespace {

Hyperparameters small_hp() {
  Hyperparameters hp;
  hp.forest.n_trees = 25;
  hp.gbt.n_rounds = 40;
  hp.logistic.epochs = 500;
  return hp;
}

}  // namespace

TEST_CASE("model names parse case-insensitively") {
  CHECK(parse_model_kind("xgb") == ModelKind::gbt);
  CHECK(parse_model_kind("Gbt") == ModelKind::gbt);
  CHECK(parse_model_kind("dt") == ModelKind::decision_tree);
  CHECK(parse_model_kind("RF") == ModelKind::random_forest);
  CHECK(parse_model_kind("lr") == ModelKind::logistic_regression);
  CHECK_THROWS_AS(parse_model_kind("svm"), ConfigError);
}

TEST_CASE("GBT training loss never increases") {
  const auto ds = testing::surrogate(600, 31);
  Hyperparameters hp;
  hp.gbt.n_rounds = 60;
  const auto m = fit(ModelKind::gbt, ds, hp, 1);
  const auto& h = std::get<GbtModel>(m.params()).loss_history;
  REQUIRE(h.size() == 61);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
}

TEST_CASE("GBT with zero rounds predicts the training prior") {
  const auto ds = testing::blobs(30, 70, 2, 1.0, 4);
  Hyperparameters hp;
  hp.gbt.n_rounds = 0;
  const auto m = fit(ModelKind::gbt, ds, hp, 1);
  for (std::size_t r = 0; r < ds.size(); ++r) CHECK(m.predict_proba(ds.x.row(r)) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("single-round GBT matches a hand-computed split") {
  // p = 0.5 everywhere, g = p - y, h = 1/4. The best cut separates {0,1} from {2,3}:
  // G_L = 1, H_L = 1/2, leaf = -eta * 1 / (1/2 + 1) = -eta * 2/3.
  const auto ds = testing::make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  Hyperparameters hp;
  hp.gbt.n_rounds = 1;
  hp.gbt.max_depth = 1;
  hp.gbt.learning_rate = 0.3;
  hp.gbt.reg_lambda = 1.0;
  hp.gbt.min_child_weight = 0.0;
  const auto m = fit(ModelKind::gbt, ds, hp, 1);
  const auto& g = std::get<GbtModel>(m.params());
  CHECK(g.base_score == doctest::Approx(0.0));
  REQUIRE(g.trees.size() == 1);
  const auto& t = g.trees[0];
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold >= 1.0);
  CHECK(t.nodes[0].threshold < 2.0);
  const double leaf = 0.3 * 2.0 / 3.0;
  CHECK(m.predict_proba(std::vector<double>{0.0}) == doctest::Approx(1.0 / (1.0 + std::exp(leaf))));
  CHECK(m.predict_proba(std::vector<double>{3.0}) == doctest::Approx(1.0 / (1.0 + std::exp(-leaf))));

  const double l0 = std::log(2.0);
  const double l1 = std::log(1.0 + std::exp(-leaf));
  CHECK(g.loss_history[0] == doctest::Approx(l0));
  CHECK(g.loss_history[1] == doctest::Approx(l1));
}

TEST_CASE("GBT split gain threshold with gamma") {
  // Gain of the best cut above is 1/2 * (1/1.5 + 1/1.5) = 2/3; gamma above that blocks it.
  const auto ds = testing::make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  Hyperparameters hp;
  hp.gbt.n_rounds = 1;
  hp.gbt.max_depth = 1;
  hp.gbt.min_child_weight = 0.0;
  hp.gbt.gamma = 0.7;
  const auto blocked = fit(ModelKind::gbt, ds, hp, 1);
  CHECK(std::get<GbtModel>(blocked.params()).trees[0].nodes.size() == 1);
  hp.gbt.gamma = 0.6;
  const auto kept = fit(ModelKind::gbt, ds, hp, 1);
  CHECK(std::get<GbtModel>(kept.params()).trees[0].nodes.size() == 3);
}

TEST_CASE("logistic gradient agrees with central differences") {
  const auto ds = testing::blobs(40, 60, 4, 0.8, 9);
  const auto z = Standardizer::fit(ds.x).transform(ds.x);
  std::vector<double> w = {0.3, -0.2, 0.1, 0.5};
  const double b = -0.1, l2 = 0.01, h = 1e-6;
  std::vector<double> gw;
  double gb = 0.0;
  logistic_objective(z, ds.y, w, b, l2, &gw, &gb);
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double fd = (logistic_objective(z, ds.y, wp, b, l2) - logistic_objective(z, ds.y, wm, b, l2)) / (2 * h);
    CHECK(std::abs(fd - gw[j]) < 1e-5);
  }
  const double fdb = (logistic_objective(z, ds.y, w, b + h, l2) - logistic_objective(z, ds.y, w, b - h, l2)) / (2 * h);
  CHECK(std::abs(fdb - gb) < 1e-5);
}

TEST_CASE("forest of one unbagged tree with all features equals CART") {
  const auto ds = testing::surrogate(300, 7);
  Hyperparameters hp;
  hp.forest.n_trees = 1;
  hp.forest.bootstrap = false;
  hp.forest.max_features = ds.n_features();
  const auto rf = fit(ModelKind::random_forest, ds, hp, 5);
  const auto dt = fit(ModelKind::decision_tree, ds, hp, 5);
  CHECK(std::get<RandomForestModel>(rf.params()).trees[0] == std::get<DecisionTreeModel>(dt.params()).tree);
  CHECK(rf.predict_proba(ds.x) == dt.predict_proba(ds.x));
}

TEST_CASE("every model separates well-separated classes") {
  const auto ds = testing::blobs(50, 50, 3, 25.0, 12);
  const auto hp = small_hp();
  for (auto kind : {ModelKind::decision_tree, ModelKind::random_forest, ModelKind::gbt, ModelKind::logistic_regression}) {
    const auto m = fit(kind, ds, hp, 3);
    const auto pred = m.predict(ds.x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ds.y[i] ? 1 : 0;
    CHECK_MESSAGE(correct == ds.size(), std::string(model_name(kind)));
  }
}

TEST_CASE("probabilities are in [0,1]") {
  const auto ds = testing::surrogate(300, 8);
  const auto hp = small_hp();
  for (auto kind : {ModelKind::decision_tree, ModelKind::random_forest, ModelKind::gbt, ModelKind::logistic_regression}) {
    for (double p : fit(kind, ds, hp, 3).predict_proba(ds.x)) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("fitting is deterministic for a fixed seed") {
  const auto ds = testing::surrogate(250, 6);
  const auto hp = small_hp();
  for (auto kind : {ModelKind::random_forest, ModelKind::gbt}) {
    const auto a = fit(kind, ds, hp, 11), b = fit(kind, ds, hp, 11);
    CHECK(a.predict_proba(ds.x) == b.predict_proba(ds.x));
  }
}

TEST_CASE("serialization round trip predicts bit-identically") {
  const auto ds = testing::surrogate(250, 5);
  const auto hp = small_hp();
  testing::TempDir dir;
  for (auto kind : {ModelKind::decision_tree, ModelKind::random_forest, ModelKind::gbt, ModelKind::logistic_regression}) {
    const auto m = fit(kind, ds, hp, 2);
    std::stringstream ss;
    save_model(m, ss);
    const auto back = load_model(ss);
    CHECK(back.kind() == kind);
    CHECK(back.n_features() == m.n_features());
    CHECK(back.predict_proba(ds.x) == m.predict_proba(ds.x));

    const auto file = dir / (std::string(model_name(kind)) + ".txt");
    testing::write_file(file, "# metaboost config=0 seed=1\n");
    {
      std::ofstream out(file, std::ios::app);
      save_model(m, out);
    }
    CHECK(load_model(file).predict_proba(ds.x) == m.predict_proba(ds.x));
  }
  std::stringstream junk("not a model\n");
  CHECK_THROWS(load_model(junk));
}

TEST_CASE("fit and predict reject bad input") {
  Dataset empty;
  empty.x = Matrix(0, 3);
  CHECK_THROWS_AS(fit(ModelKind::gbt, empty, {}, 1), FitError);

  auto ds = testing::blobs(10, 10, 2, 1.0, 1);
  ds.x(0, 0) = std::nan("");
  CHECK_THROWS_AS(fit(ModelKind::decision_tree, ds, {}, 1), DataError);

  const auto ok = fit(ModelKind::decision_tree, testing::blobs(10, 10, 2, 1.0, 1), {}, 1);
  CHECK_THROWS_AS(ok.predict_proba(Matrix(2, 3)), SchemaError);
}

TEST_CASE("depth-limited CART respects max_depth") {
  const auto ds = testing::surrogate(300, 4);
  Hyperparameters hp;
  hp.tree.max_depth = 3;
  const auto m = fit(ModelKind::decision_tree, ds, hp, 1);
  CHECK(std::get<DecisionTreeModel>(m.params()).tree.depth() <= 3);
}
