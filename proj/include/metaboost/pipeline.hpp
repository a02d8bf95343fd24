/**
 * @file pipeline.hpp
 * @brief Configuration-driven experiment runner.
 *
 * Stages run in a fixed order and communicate only through files in the run
 * directory, so any stage can be rerun on its own against the artifacts of
 * the previous ones. Every written table starts with a comment line
 * `# metaboost config=<hash> seed=<seed>`.
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaboost/balance.hpp"
#include "metaboost/counterfactual.hpp"
#include "metaboost/evaluate.hpp"
#include "metaboost/models.hpp"
#include "metaboost/risk.hpp"
#include "metaboost/sweep.hpp"

namespace metaboost {

/// One entry of the "balancers" list. `none` leaves the training set as is.
struct BalancerEntry {
  std::string label;  ///< file-name tag: none, ros, smote, adasyn, generative, or a custom hybrid label
  bool none = false;
  Method method = Method::smote;
  std::vector<Method> components;  ///< hybrid only
  std::vector<double> weights;     ///< hybrid only
};

struct SweepSettings {
  std::vector<std::pair<Method, Method>> pairs;
  bool triple = false;
  double step = 0.05;
  ModelKind model = ModelKind::gbt;
};

struct CounterfactualSettings {
  bool enabled = true;
  ModelKind model = ModelKind::gbt;
  std::string balancer = "smote";
  double lambda = 1.0;
  CfPopulation population = CfPopulation::all;
  std::size_t grid_resolution = 200;
  std::size_t max_pairs = 200;
  std::size_t grid_trees = 100;
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::uint64_t seed = 42;
  double test_fraction = 0.33;
  std::filesystem::path output_dir = "runs";
  std::vector<std::string> imputation_columns = default_imputation_columns();
  std::vector<BalancerEntry> balancers;
  std::size_t k_neighbors = 5;
  std::filesystem::path generative_source;
  std::vector<ModelKind> models = {ModelKind::gbt};
  std::size_t n_runs = 3;
  Hyperparameters hyperparameters;
  SweepSettings sweep;
  CounterfactualSettings counterfactual;
  bool risk = true;
  std::filesystem::path thresholds;

  /// Exact bytes the configuration was parsed from.
  std::string source_text;
  /// Seed as written in the file; differs from `seed` after a command-line override.
  std::uint64_t file_seed = 42;

  /// Relative paths resolve against `base_dir`. Throws ConfigError on unknown
  /// keys, bad types or out-of-range values.
  static ExperimentConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  /// 16 hex digits of FNV-1a over `source_text`, plus the seed when it was overridden.
  std::string hash() const;
  /// Throws ConfigError if a referenced input file is missing.
  void validate() const;
  const BalancerEntry& balancer(std::string_view label) const;
};

enum class Stage { preprocess, balance, sweep, train, evaluate, counterfactual, risk, report };

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);
const std::array<Stage, 8>& all_stages();

std::uint64_t fnv1a64(std::string_view bytes);

struct MetricsRow {
  std::string balancer;
  std::string model;
  Metrics metrics;
};

struct SweepTable {
  std::string name;
  std::vector<std::string> methods;
  std::vector<SweepResult> rows;  ///< best first
};

struct RunReport {
  std::string config_snapshot;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> metrics;
  std::vector<SweepTable> sweeps;
  std::optional<CfSummary> cf_summary;
  FeatureChangeRates cf_rates;
  std::optional<ProbReport> risk;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds per stage
};

/// Chooses the run directory: `out` if given; otherwise a fresh
/// `<output_dir>/<UTC timestamp>-<hash8>` when `fresh`, else the newest
/// existing directory for this config hash (created if there is none).
std::filesystem::path resolve_run_dir(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                                      bool fresh);

class Pipeline {
 public:
  /// `log` receives progress lines; pass nullptr for silence.
  Pipeline(ExperimentConfig config, std::filesystem::path run_dir, std::ostream* log = nullptr);

  const std::filesystem::path& run_dir() const { return dir_; }
  const ExperimentConfig& config() const { return config_; }
  std::string header() const;

  /// Runs one stage. Throws DependencyError when an upstream artifact is missing.
  void run_stage(Stage stage);
  /// Runs every stage in order. A failure throws StageError and leaves the
  /// INCOMPLETE marker naming the failed stage.
  RunReport run();
  /// Number of sweep grid points that failed during the last sweep stage.
  std::size_t sweep_failures() const { return sweep_failures_; }

 private:
  void preprocess();
  void balance();
  void sweep();
  void train();
  void evaluate_models();
  void counterfactual();
  void risk();
  RunReport report();

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  std::filesystem::path require(const std::string& name, Stage producer) const;
  void note(const std::string& line) const;
  void record_timing(Stage stage, double seconds);

  ExperimentConfig config_;
  std::filesystem::path dir_;
  std::ostream* log_;
  std::size_t sweep_failures_ = 0;
};

/// Reads whatever stage outputs exist in `run_dir`.
RunReport collect_report(const std::filesystem::path& run_dir, const ExperimentConfig& config);
std::string format_report_text(const RunReport& report);
std::string format_report_json(const RunReport& report);

}  // namespace metaboost
