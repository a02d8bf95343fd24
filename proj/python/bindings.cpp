#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <optional>
#include <sstream>

#include "metaboost/balance.hpp"
#include "metaboost/counterfactual.hpp"
#include "metaboost/error.hpp"
#include "metaboost/evaluate.hpp"
#include "metaboost/ingest.hpp"
#include "metaboost/models.hpp"
#include "metaboost/pipeline.hpp"
#include "metaboost/random.hpp"
#include "metaboost/risk.hpp"
#include "metaboost/surrogate.hpp"
#include "metaboost/sweep.hpp"

namespace py = pybind11;
using namespace metaboost;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["n_runs"] = m.n_runs;
  return d;
}

Hyperparameters hyperparameters_from(const py::dict& kw) {
  // Reuse the config parser so Python and JSON accept the same keys.
  std::string text = py::module_::import("json").attr("dumps")(kw).cast<std::string>();
  return ExperimentConfig::parse("{\"hyperparameters\": " + text + "}").hyperparameters;
}

}  // namespace

PYBIND11_MODULE(_metaboost, m) {
  m.doc() = "Imbalanced-data oversampling, classifiers, counterfactuals and risk analysis";

  auto& base = py::register_exception<Error>(m, "MetaboostError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<BalanceError>(m, "BalanceError", base.ptr());
  py::register_exception<DependencyError>(m, "DependencyError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Array& x, std::vector<int> y) {
             Dataset ds;
             ds.x = from_numpy(x);
             ds.y = std::move(y);
             if (ds.x.cols() == FeatureSchema::standard().size()) ds.schema = FeatureSchema::standard();
             for (std::size_t i = 0; i < ds.y.size(); ++i) ds.ids.push_back(static_cast<std::int64_t>(i));
             ds.validate();
             return ds;
           }),
           py::arg("x"), py::arg("y"))
      .def_property_readonly("x", [](const Dataset& d) { return to_numpy(d.x); })
      .def_property_readonly("y", [](const Dataset& d) { return d.y; })
      .def_property_readonly("ids", [](const Dataset& d) { return d.ids; })
      .def_property_readonly("feature_names", [](const Dataset& d) { return d.schema.names; })
      .def("count", &Dataset::count)
      .def("__len__", &Dataset::size);

  py::class_<TrainTestSplit>(m, "TrainTestSplit")
      .def_readonly("train", &TrainTestSplit::train)
      .def_readonly("test", &TrainTestSplit::test);

  m.def("load_dataset", [](const std::filesystem::path& p) { return load_dataset(p); }, py::arg("path"),
        "Reads, encodes and mean-imputes a raw clinical CSV.");
  m.def(
      "surrogate_csv",
      [](std::size_t rows, std::uint64_t seed, double prevalence) {
        SurrogateOptions o;
        o.rows = rows;
        o.seed = seed;
        o.prevalence = prevalence;
        return surrogate_csv(o);
      },
      py::arg("rows") = 2401, py::arg("seed") = 2024, py::arg("prevalence") = 0.342);
  m.def(
      "parse_dataset",
      [](const std::string& text) {
        auto enc = encode_and_clean(parse_raw_csv(text));
        enc.features = impute_mean(enc.features, enc.schema, default_imputation_columns());
        return to_dataset(enc);
      },
      py::arg("text"));
  m.def("split_balanced", &split_balanced, py::arg("dataset"), py::arg("test_fraction") = 0.33, py::arg("seed") = 42);

  m.def(
      "balance",
      [](const Dataset& train, const std::string& method, std::uint64_t seed, std::size_t k) {
        return balance_to_parity(train, BalancerSpec{parse_method(method), k, {}}, seed);
      },
      py::arg("train"), py::arg("method"), py::arg("seed") = 42, py::arg("k") = 5,
      "Oversamples the minority class to parity with ROS, SMOTE, ADASYN or GENERATIVE.");
  m.def(
      "hybrid_balance",
      [](const Dataset& train, const std::vector<std::string>& methods, const std::vector<double>& weights,
         std::uint64_t seed, std::size_t k) {
        std::vector<BalancerSpec> specs;
        for (const auto& name : methods) specs.push_back(BalancerSpec{parse_method(name), k, {}});
        const auto pools = sweep_pools(train, specs, seed);
        return top_up(train, hybrid_combine(pools, HybridWeights(weights), class_counts(train).deficit(),
                                            derive_seed(seed, {0xB1E4D})));
      },
      py::arg("train"), py::arg("methods"), py::arg("weights"), py::arg("seed") = 42, py::arg("k") = 5);
  m.def(
      "simplex_grid",
      [](std::size_t n, double step) {
        std::vector<std::vector<double>> out;
        for (const auto& w : simplex_grid(n, step)) out.push_back(w.values());
        return out;
      },
      py::arg("n_methods"), py::arg("step") = 0.05);

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& md) { return std::string(model_name(md.kind())); })
      .def_property_readonly("n_features", &Model::n_features)
      .def("predict_proba", [](const Model& md, const Array& x) { return md.predict_proba(from_numpy(x)); })
      .def("predict", [](const Model& md, const Array& x) { return md.predict(from_numpy(x)); })
      .def("save", [](const Model& md, const std::filesystem::path& p) { save_model(md, p); })
      .def("dumps", [](const Model& md) {
        std::ostringstream os;
        save_model(md, os);
        return os.str();
      });
  m.def(
      "fit",
      [](const std::string& kind, const Dataset& train, std::uint64_t seed, const py::dict& hyperparameters) {
        return fit(parse_model_kind(kind), train, hyperparameters_from(hyperparameters), seed);
      },
      py::arg("kind"), py::arg("train"), py::arg("seed") = 42, py::arg("hyperparameters") = py::dict(),
      "Fits DT, RF, GBT or LR. Hyperparameters use the config-file layout, e.g. {'gbt': {'n_rounds': 50}}.");
  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));
  m.def(
      "evaluate",
      [](const std::string& kind, const TrainTestSplit& split, std::size_t n_runs, std::uint64_t seed,
         const py::dict& hyperparameters) {
        const auto ev =
            evaluate(model_factory(parse_model_kind(kind), hyperparameters_from(hyperparameters)), split, n_runs, seed);
        py::dict d = metrics_dict(ev.mean);
        py::list runs;
        for (const auto& r : ev.runs) runs.append(metrics_dict(r));
        d["runs"] = runs;
        return d;
      },
      py::arg("kind"), py::arg("split"), py::arg("n_runs") = 3, py::arg("seed") = 42,
      py::arg("hyperparameters") = py::dict());
  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));

  m.def(
      "counterfactuals",
      [](const Model& model, const Dataset& train, const Dataset& targets, double lambda, bool correct_only) {
        const auto results = explain_all(model, train, targets, CfConfig{lambda},
                                         correct_only ? CfPopulation::correct : CfPopulation::all);
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["id"] = r.id;
          d["original"] = r.original;
          d["counterfactual"] = r.counterfactual;
          d["changed"] = r.changed;
          d["l1"] = r.l1;
          d["l0"] = r.l0;
          d["original_class"] = r.original_class;
          d["counterfactual_class"] = r.counterfactual_class;
          d["valid"] = r.valid;
          out.append(d);
        }
        py::dict summary;
        if (!results.empty()) {
          const auto s = summarize(results, train.n_features());
          summary["count"] = s.count;
          summary["avg_norm_distance"] = s.avg_norm_distance;
          summary["std_norm_distance"] = s.std_norm_distance;
          summary["avg_sparsity"] = s.avg_sparsity;
          summary["std_sparsity"] = s.std_sparsity;
          summary["pct_features_changed"] = s.pct_features_changed;
          if (!train.schema.names.empty()) summary["change_rates"] = feature_change_rates(results, train.schema.names);
        }
        return py::make_tuple(out, summary);
      },
      py::arg("model"), py::arg("train"), py::arg("targets"), py::arg("lam") = 1.0, py::arg("correct_only") = false,
      "Returns (results, summary) for every target row.");

  m.def(
      "risk_report",
      [](const Dataset& ds, std::optional<std::filesystem::path> thresholds) {
        const auto spec = thresholds ? ThresholdSpec::load(*thresholds) : ThresholdSpec::standard();
        const auto rep = risk_report(ds, spec);
        py::dict d;
        d["prior"] = rep.prior.value();
        d["total"] = rep.total;
        d["positives"] = rep.positives;
        py::dict factors;
        for (const auto& f : rep.factors) {
          py::dict e;
          e["feature"] = f.feature;
          e["tabulated"] = f.tabulated;
          e["likelihood"] = f.likelihood.value();
          e["evidence"] = f.evidence.value();
          e["posterior"] = f.posterior.value();
          e["flagged"] = f.flagged;
          e["flagged_positive"] = f.flagged_positive;
          factors[py::str(f.name)] = e;
        }
        d["factors"] = factors;
        d["text"] = format_risk_text(rep);
        return d;
      },
      py::arg("dataset"), py::arg("thresholds") = std::nullopt);

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> out,
         std::optional<std::uint64_t> seed, std::optional<std::string> stage) {
        auto cfg = ExperimentConfig::load(config_path);
        if (seed) cfg.seed = *seed;
        cfg.validate();
        const auto dir = resolve_run_dir(cfg, out, !stage.has_value());
        Pipeline p(cfg, dir);
        if (stage) {
          py::gil_scoped_release release;
          p.run_stage(parse_stage(*stage));
        } else {
          py::gil_scoped_release release;
          p.run();
        }
        return dir;
      },
      py::arg("config"), py::arg("out") = std::nullopt, py::arg("seed") = std::nullopt,
      py::arg("stage") = std::nullopt, "Runs every stage (or one) and returns the run directory.");
  m.def(
      "report_text",
      [](const std::filesystem::path& run_dir) {
        const auto cfg = ExperimentConfig::parse(
            [&] {
              std::ifstream in(run_dir / "config.json", std::ios::binary);
              std::ostringstream ss;
              ss << in.rdbuf();
              return ss.str();
            }(),
            run_dir);
        return format_report_text(collect_report(run_dir, cfg));
      },
      py::arg("run_dir"));
}
