#include "metaboost/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_size(const json& obj, const char* key, std::size_t& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + "." + key + " must be a non-negative integer");
  out = v.get<std::size_t>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Method single_method(const std::string& name) {
  const Method m = parse_method(name);
  if (m == Method::hybrid) throw ConfigError("HYBRID needs an object entry with components and weights");
  return m;
}

BalancerEntry parse_balancer(const json& item) {
  BalancerEntry e;
  if (item.is_string()) {
    const auto name = item.get<std::string>();
    if (csv::iequals(name, "none")) {
      e.none = true;
      e.label = "none";
      return e;
    }
    e.method = single_method(name);
    e.label = lower(method_name(e.method));
    return e;
  }
  check_keys(item, {"label", "components", "weights"}, "balancer entry");
  if (!item.contains("components") || !item.contains("weights"))
    throw ConfigError("hybrid balancer needs \"components\" and \"weights\"");
  e.method = Method::hybrid;
  e.label = item.value("label", std::string("hybrid"));
  for (const auto& c : item.at("components")) e.components.push_back(single_method(c.get<std::string>()));
  e.weights = item.at("weights").get<std::vector<double>>();
  if (e.components.size() != e.weights.size())
    throw ConfigError("hybrid balancer " + e.label + ": components and weights differ in length");
  for (auto m : e.components)
    if (m == Method::ros) throw ConfigError("hybrid balancer " + e.label + ": ROS has no synthetic pool");
  try {
    HybridWeights check(e.weights);
  } catch (const BalanceError& err) {
    throw ConfigError("hybrid balancer " + e.label + ": " + err.what());
  }
  for (char c : e.label)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      throw ConfigError("balancer label \"" + e.label + "\" may only use letters, digits, '_' and '-'");
  return e;
}

void parse_hyperparameters(const json& h, Hyperparameters& hp) {
  check_keys(h, {"tree", "forest", "gbt", "logistic"}, "hyperparameters");
  if (h.contains("tree")) {
    const auto& t = h["tree"];
    check_keys(t, {"max_depth", "min_samples_split"}, "hyperparameters.tree");
    read(t, "max_depth", hp.tree.max_depth);
    read_size(t, "min_samples_split", hp.tree.min_samples_split, "hyperparameters.tree");
  }
  if (h.contains("forest")) {
    const auto& f = h["forest"];
    check_keys(f, {"n_trees", "max_depth", "max_features", "bootstrap"}, "hyperparameters.forest");
    read_size(f, "n_trees", hp.forest.n_trees, "hyperparameters.forest");
    read(f, "max_depth", hp.forest.max_depth);
    read_size(f, "max_features", hp.forest.max_features, "hyperparameters.forest");
    read(f, "bootstrap", hp.forest.bootstrap);
  }
  if (h.contains("gbt")) {
    const auto& g = h["gbt"];
    check_keys(g, {"n_rounds", "learning_rate", "max_depth", "reg_lambda", "gamma", "min_child_weight"},
               "hyperparameters.gbt");
    read_size(g, "n_rounds", hp.gbt.n_rounds, "hyperparameters.gbt");
    read(g, "learning_rate", hp.gbt.learning_rate);
    read(g, "max_depth", hp.gbt.max_depth);
    read(g, "reg_lambda", hp.gbt.reg_lambda);
    read(g, "gamma", hp.gbt.gamma);
    read(g, "min_child_weight", hp.gbt.min_child_weight);
  }
  if (h.contains("logistic")) {
    const auto& l = h["logistic"];
    check_keys(l, {"l2", "epochs", "learning_rate"}, "hyperparameters.logistic");
    read(l, "l2", hp.logistic.l2);
    read_size(l, "epochs", hp.logistic.epochs, "hyperparameters.logistic");
    read(l, "learning_rate", hp.logistic.learning_rate);
  }
  if (hp.forest.n_trees == 0) throw ConfigError("hyperparameters.forest.n_trees must be positive");
  if (!(hp.gbt.learning_rate > 0.0)) throw ConfigError("hyperparameters.gbt.learning_rate must be positive");
  if (!(hp.logistic.learning_rate > 0.0)) throw ConfigError("hyperparameters.logistic.learning_rate must be positive");
  if (hp.gbt.reg_lambda < 0.0 || hp.gbt.gamma < 0.0 || hp.logistic.l2 < 0.0)
    throw ConfigError("regularization strengths must be non-negative");
}

std::string model_label(ModelKind kind) { return lower(model_name(kind)); }

std::string model_file(ModelKind kind, const std::string& balancer) {
  return "model_" + model_label(kind) + "_" + balancer + ".txt";
}

std::string sweep_file(const std::vector<Method>& methods) {
  if (methods.size() == 3) return "sweep_triple.csv";
  std::string name = "sweep";
  for (auto m : methods) name += "_" + lower(method_name(m));
  return name + ".csv";
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? ";" : "") + std::to_string(seeds[i]);
  return out;
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double number(const std::string& s, const fs::path& file) {
  auto v = csv::parse_double(s);
  if (!v) throw ParseError(file.string() + ": bad number \"" + s + "\"");
  return *v;
}

std::size_t column(const csv::Table& t, std::string_view name, const fs::path& file) {
  auto c = csv::find_column(t.header, name);
  if (!c) throw SchemaError(file.string() + ": missing column " + std::string(name));
  return *c;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.source_text = std::string(json_text);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(doc,
               {"dataset", "seed", "test_fraction", "output_dir", "imputation_columns", "balancers", "k_neighbors",
                "generative_source", "models", "n_runs", "hyperparameters", "sweep", "counterfactual", "risk",
                "thresholds"},
               "config");
    if (doc.contains("dataset")) cfg.dataset = resolve(base_dir, doc["dataset"].get<std::string>());
    if (doc.contains("seed")) {
      if (!doc["seed"].is_number_unsigned())
        throw ConfigError("seed must be a non-negative integer");
      cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    cfg.file_seed = cfg.seed;
    read(doc, "test_fraction", cfg.test_fraction);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
    else cfg.output_dir = resolve(base_dir, "runs");
    read(doc, "imputation_columns", cfg.imputation_columns);
    const auto schema = FeatureSchema::standard();
    for (const auto& c : cfg.imputation_columns)
      if (!schema.index_of(c)) throw ConfigError("imputation column \"" + c + "\" is not a feature");
    read_size(doc, "k_neighbors", cfg.k_neighbors, "config");
    if (cfg.k_neighbors == 0) throw ConfigError("k_neighbors must be positive");
    if (doc.contains("generative_source"))
      cfg.generative_source = resolve(base_dir, doc["generative_source"].get<std::string>());

    if (doc.contains("balancers")) {
      for (const auto& item : doc["balancers"]) cfg.balancers.push_back(parse_balancer(item));
    } else {
      for (const char* name : {"none", "ROS", "SMOTE", "ADASYN", "GENERATIVE"})
        cfg.balancers.push_back(parse_balancer(json(name)));
    }
    if (cfg.balancers.empty()) throw ConfigError("balancers must not be empty");
    std::set<std::string> labels;
    for (const auto& b : cfg.balancers)
      if (!labels.insert(b.label).second) throw ConfigError("duplicate balancer label \"" + b.label + "\"");

    if (doc.contains("models")) {
      cfg.models.clear();
      for (const auto& m : doc["models"]) cfg.models.push_back(parse_model_kind(m.get<std::string>()));
      if (cfg.models.empty()) throw ConfigError("models must not be empty");
    }
    read_size(doc, "n_runs", cfg.n_runs, "config");
    if (cfg.n_runs == 0) throw ConfigError("n_runs must be positive");
    if (doc.contains("hyperparameters")) parse_hyperparameters(doc["hyperparameters"], cfg.hyperparameters);

    cfg.sweep.pairs = {{Method::adasyn, Method::generative}};
    if (doc.contains("sweep")) {
      const auto& s = doc["sweep"];
      check_keys(s, {"pairs", "triple", "step", "model"}, "sweep");
      if (s.contains("pairs")) {
        cfg.sweep.pairs.clear();
        for (const auto& p : s["pairs"]) {
          const auto names = p.get<std::vector<std::string>>();
          if (names.size() != 2) throw ConfigError("each sweep pair must name two methods");
          cfg.sweep.pairs.emplace_back(single_method(names[0]), single_method(names[1]));
          if (cfg.sweep.pairs.back().first == Method::ros || cfg.sweep.pairs.back().second == Method::ros)
            throw ConfigError("ROS has no synthetic pool and cannot be swept");
        }
      }
      read(s, "triple", cfg.sweep.triple);
      read(s, "step", cfg.sweep.step);
      if (s.contains("model")) cfg.sweep.model = parse_model_kind(s["model"].get<std::string>());
    }
    try {
      (void)simplex_grid(2, cfg.sweep.step);
    } catch (const BalanceError& e) {
      throw ConfigError(std::string("sweep.step: ") + e.what());
    }

    auto& cf = cfg.counterfactual;
    cf.model = cfg.models.front();
    cf.balancer = labels.count("smote") ? "smote" : cfg.balancers.front().label;
    if (doc.contains("counterfactual")) {
      const auto& c = doc["counterfactual"];
      check_keys(c, {"enabled", "model", "balancer", "lambda", "population", "grid_resolution", "max_pairs", "grid_trees"},
                 "counterfactual");
      read(c, "enabled", cf.enabled);
      if (c.contains("model")) cf.model = parse_model_kind(c["model"].get<std::string>());
      if (c.contains("balancer")) cf.balancer = lower(c["balancer"].get<std::string>());
      read(c, "lambda", cf.lambda);
      if (c.contains("population")) {
        const auto pop = c["population"].get<std::string>();
        if (csv::iequals(pop, "all")) cf.population = CfPopulation::all;
        else if (csv::iequals(pop, "correct")) cf.population = CfPopulation::correct;
        else throw ConfigError("counterfactual.population must be \"all\" or \"correct\"");
      }
      read_size(c, "grid_resolution", cf.grid_resolution, "counterfactual");
      read_size(c, "max_pairs", cf.max_pairs, "counterfactual");
      read_size(c, "grid_trees", cf.grid_trees, "counterfactual");
    }
    if (cf.enabled) {
      if (!labels.count(cf.balancer))
        throw ConfigError("counterfactual.balancer \"" + cf.balancer + "\" is not among the balancers");
      if (std::find(cfg.models.begin(), cfg.models.end(), cf.model) == cfg.models.end())
        throw ConfigError("counterfactual.model " + std::string(model_name(cf.model)) + " is not among the models");
      if (cf.grid_resolution < 2) throw ConfigError("counterfactual.grid_resolution must be at least 2");
      if (cf.grid_trees == 0) throw ConfigError("counterfactual.grid_trees must be positive");
      if (cf.lambda < 0.0) throw ConfigError("counterfactual.lambda must be non-negative");
    }
    read(doc, "risk", cfg.risk);
    if (doc.contains("thresholds")) cfg.thresholds = resolve(base_dir, doc["thresholds"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

std::string ExperimentConfig::hash() const {
  std::ostringstream os;
  const auto h = seed == file_seed ? fnv1a64(source_text) : fnv1a64(source_text + "\nseed=" + std::to_string(seed));
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config does not name a dataset");
  if (!fs::is_regular_file(dataset)) throw ConfigError("dataset not found: " + dataset.string());
  if (!thresholds.empty() && !fs::is_regular_file(thresholds))
    throw ConfigError("threshold spec not found: " + thresholds.string());
  if (!generative_source.empty() && !fs::is_regular_file(generative_source))
    throw ConfigError("generative source not found: " + generative_source.string());
}

const BalancerEntry& ExperimentConfig::balancer(std::string_view label) const {
  for (const auto& b : balancers)
    if (b.label == label) return b;
  throw ConfigError("no balancer labelled \"" + std::string(label) + "\"");
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::preprocess: return "preprocess";
    case Stage::balance: return "balance";
    case Stage::sweep: return "sweep";
    case Stage::train: return "train";
    case Stage::evaluate: return "evaluate";
    case Stage::counterfactual: return "counterfactual";
    case Stage::risk: return "risk";
    case Stage::report: return "report";
  }
  return "?";
}

const std::array<Stage, 8>& all_stages() {
  static const std::array<Stage, 8> stages = {Stage::preprocess, Stage::balance, Stage::sweep,
                                              Stage::train,      Stage::evaluate, Stage::counterfactual,
                                              Stage::risk,       Stage::report};
  return stages;
}

Stage parse_stage(std::string_view name) {
  for (auto s : all_stages())
    if (csv::iequals(name, stage_name(s))) return s;
  throw ConfigError("unknown stage \"" + std::string(name) + "\"");
}

fs::path resolve_run_dir(const ExperimentConfig& config, const std::optional<fs::path>& out, bool fresh) {
  if (out) return *out;
  const std::string tag = "-" + config.hash().substr(0, 8);
  if (!fresh && fs::is_directory(config.output_dir)) {
    std::optional<fs::path> newest;
    for (const auto& entry : fs::directory_iterator(config.output_dir)) {
      const auto name = entry.path().filename().string();
      if (!entry.is_directory() || name.size() <= tag.size() || !name.ends_with(tag)) continue;
      if (!newest || name > newest->filename().string()) newest = entry.path();
    }
    if (newest) return *newest;
  }
  const auto stamp = utc_stamp();
  fs::path dir = config.output_dir / (stamp + tag);
  for (int n = 2; fs::exists(dir); ++n) dir = config.output_dir / (stamp + "." + std::to_string(n) + tag);
  return dir;
}

Pipeline::Pipeline(ExperimentConfig config, fs::path run_dir, std::ostream* log)
    : config_(std::move(config)), dir_(std::move(run_dir)), log_(log) {}

std::string Pipeline::header() const {
  return "# metaboost config=" + config_.hash() + " seed=" + std::to_string(config_.seed);
}

fs::path Pipeline::require(const std::string& name, Stage producer) const {
  const auto p = path(name);
  if (!fs::is_regular_file(p))
    throw DependencyError("missing upstream artifact " + p.string() + " (written by stage " +
                          std::string(stage_name(producer)) + ")");
  return p;
}

void Pipeline::note(const std::string& line) const {
  if (log_) *log_ << "[metaboost] " << line << '\n' << std::flush;
}

void Pipeline::record_timing(Stage stage, double seconds) {
  std::map<std::string, std::string> known;
  const auto file = path("timings.csv");
  if (fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    for (const auto& row : t.rows)
      if (row.size() >= 2) known[row[0]] = row[1];
  }
  known[std::string(stage_name(stage))] = csv::format_double(seconds);
  std::ofstream out(file, std::ios::binary);
  out << header() << '\n' << "stage,seconds\n";
  for (auto s : all_stages()) {
    auto it = known.find(std::string(stage_name(s)));
    if (it != known.end()) out << it->first << ',' << it->second << '\n';
  }
}

void Pipeline::run_stage(Stage stage) {
  fs::create_directories(dir_);
  write_text(path("config.json"), config_.source_text);
  note("stage " + std::string(stage_name(stage)) + " -> " + dir_.string());
  const auto start = std::chrono::steady_clock::now();
  switch (stage) {
    case Stage::preprocess: preprocess(); break;
    case Stage::balance: balance(); break;
    case Stage::sweep: sweep(); break;
    case Stage::train: train(); break;
    case Stage::evaluate: evaluate_models(); break;
    case Stage::counterfactual: counterfactual(); break;
    case Stage::risk: risk(); break;
    case Stage::report: report(); break;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  if (stage != Stage::report) record_timing(stage, elapsed.count());
}

RunReport Pipeline::run() {
  fs::create_directories(dir_);
  const auto marker = path("INCOMPLETE");
  write_text(marker, "running\n");
  std::size_t completed = 0;
  for (auto stage : all_stages()) {
    if (stage == Stage::report) break;
    try {
      run_stage(stage);
      ++completed;
    } catch (const Error& e) {
      write_text(marker, "failed at stage " + std::string(stage_name(stage)) + ": " + e.what() + "\n");
      throw StageError(std::string(stage_name(stage)), e.what(), completed > 0);
    } catch (const std::exception& e) {
      write_text(marker, "failed at stage " + std::string(stage_name(stage)) + ": " + e.what() + "\n");
      throw StageError(std::string(stage_name(stage)), e.what(), completed > 0);
    }
  }
  RunReport rep;
  try {
    rep = report();
  } catch (const std::exception& e) {
    write_text(marker, std::string("failed at stage report: ") + e.what() + "\n");
    throw StageError("report", e.what(), true);
  }
  fs::remove(marker);
  return rep;
}

void Pipeline::preprocess() {
  const auto raw = load_csv(config_.dataset);
  auto table = encode_and_clean(raw);
  if (!table.rejected_lines.empty())
    note("dropped " + std::to_string(table.rejected_lines.size()) + " rows without a label");
  table.features = impute_mean(table.features, table.schema, config_.imputation_columns);
  const Dataset ds = to_dataset(table);
  const auto split = split_balanced(ds, config_.test_fraction, config_.seed);
  write_dataset_csv(ds, path("dataset_clean.csv"), header());
  write_dataset_csv(split.train, path("train.csv"), header());
  write_dataset_csv(split.test, path("test.csv"), header());
  note("rows " + std::to_string(ds.size()) + ", train " + std::to_string(split.train.size()) + ", test " +
       std::to_string(split.test.size()));
}

void Pipeline::balance() {
  const Dataset train = read_dataset_csv(require("train.csv", Stage::preprocess));
  const GenerativeSource source{config_.generative_source};
  for (const auto& b : config_.balancers) {
    Dataset out;
    if (b.none) {
      out = train;
    } else if (b.method == Method::hybrid) {
      std::vector<BalancerSpec> specs;
      for (auto m : b.components) specs.push_back({m, config_.k_neighbors, source});
      const auto deficit = class_counts(train).deficit();
      const auto pools = sweep_pools(train, specs, config_.seed);
      const auto hybrid = hybrid_combine(pools, HybridWeights(b.weights), deficit, derive_seed(config_.seed, {0xB1E4D}));
      for (const auto& p : pools)
        for (const auto& w : p.warnings) note("warning: " + w);
      out = top_up(train, hybrid);
    } else {
      const BalancerSpec spec{b.method, config_.k_neighbors, source};
      out = balance_to_parity(train, spec, pool_seed(config_.seed, b.method));
    }
    write_dataset_csv(out, path("balanced_" + b.label + ".csv"), header());
    note("balanced " + b.label + ": " + std::to_string(out.count(0)) + " / " + std::to_string(out.count(1)));
  }
}

void Pipeline::sweep() {
  sweep_failures_ = 0;
  if (config_.sweep.pairs.empty() && !config_.sweep.triple) {
    note("no sweeps configured");
    return;
  }
  const Dataset train = read_dataset_csv(require("train.csv", Stage::preprocess));
  const Dataset test = read_dataset_csv(require("test.csv", Stage::preprocess));
  const auto factory = model_factory(config_.sweep.model, config_.hyperparameters);
  const SweepEvaluator evaluator = [&](const Dataset& balanced, std::uint64_t seed) {
    TrainTestSplit split{balanced, test, seed, config_.test_fraction};
    return evaluate(factory, split, config_.n_runs, seed);
  };
  const GenerativeSource source{config_.generative_source};

  auto write = [&](const std::vector<Method>& methods, const std::vector<SweepResult>& rows) {
    const auto file = path(sweep_file(methods));
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    out << header() << '\n' << "rank,grid_index";
    for (std::size_t m = 0; m < methods.size(); ++m) out << ",w_" << m + 1;
    out << ",accuracy,precision,recall,f1,seed_list,best,error\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      out << i + 1 << ',' << r.grid_index;
      for (double w : r.weights.values()) out << ',' << csv::format_double(w);
      out << ',' << csv::format_double(r.metrics.accuracy) << ',' << csv::format_double(r.metrics.precision) << ','
          << csv::format_double(r.metrics.recall) << ',' << csv::format_double(r.metrics.f1) << ','
          << join_seeds(r.seeds) << ',' << (i == 0 && !r.error ? 1 : 0) << ',' << csv::escape(r.error.value_or(""))
          << '\n';
      if (r.error) ++sweep_failures_;
    }
    if (!rows.empty() && !rows.front().error)
      note(file.filename().string() + ": " + std::to_string(rows.size()) + " points, best F1 " +
           csv::format_double(rows.front().metrics.f1));
  };

  for (const auto& [a, b] : config_.sweep.pairs) {
    const BalancerSpec sa{a, config_.k_neighbors, source}, sb{b, config_.k_neighbors, source};
    note("sweeping " + std::string(method_name(a)) + " + " + std::string(method_name(b)));
    write({a, b}, sweep_pair(train, sa, sb, config_.sweep.step, evaluator, config_.seed));
  }
  if (config_.sweep.triple) {
    note("sweeping SMOTE + GENERATIVE + ADASYN");
    write({Method::smote, Method::generative, Method::adasyn},
          sweep_triple(train, config_.sweep.step, evaluator, config_.seed, config_.k_neighbors, source));
  }
  if (sweep_failures_ > 0) note("warning: " + std::to_string(sweep_failures_) + " sweep points failed");
}

void Pipeline::train() {
  for (const auto& b : config_.balancers) {
    const Dataset ds = read_dataset_csv(require("balanced_" + b.label + ".csv", Stage::balance));
    for (auto kind : config_.models) {
      const Model model = fit(kind, ds, config_.hyperparameters, config_.seed);
      const auto file = path(model_file(kind, b.label));
      std::ofstream out(file, std::ios::binary);
      if (!out) throw Error("cannot write " + file.string());
      out << header() << '\n';
      save_model(model, out);
    }
  }
}

void Pipeline::evaluate_models() {
  const Dataset test = read_dataset_csv(require("test.csv", Stage::preprocess));
  std::ostringstream summary, runs;
  summary << header() << '\n' << "balancer,model,accuracy,precision,recall,f1,n_runs\n";
  runs << header() << '\n' << "balancer,model,run,seed,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
  for (const auto& b : config_.balancers) {
    const Dataset ds = read_dataset_csv(require("balanced_" + b.label + ".csv", Stage::balance));
    for (auto kind : config_.models) {
      TrainTestSplit split{ds, test, config_.seed, config_.test_fraction};
      const auto ev = evaluate(model_factory(kind, config_.hyperparameters), split, config_.n_runs, config_.seed);
      const auto& m = ev.mean;
      summary << b.label << ',' << model_name(kind) << ',' << csv::format_double(m.accuracy) << ','
              << csv::format_double(m.precision) << ',' << csv::format_double(m.recall) << ','
              << csv::format_double(m.f1) << ',' << m.n_runs << '\n';
      for (std::size_t r = 0; r < ev.runs.size(); ++r) {
        const auto& c = ev.confusions[r];
        const auto& rm = ev.runs[r];
        runs << b.label << ',' << model_name(kind) << ',' << r << ',' << ev.seeds[r] << ',' << c.tp << ',' << c.fp
             << ',' << c.tn << ',' << c.fn << ',' << csv::format_double(rm.accuracy) << ','
             << csv::format_double(rm.precision) << ',' << csv::format_double(rm.recall) << ','
             << csv::format_double(rm.f1) << '\n';
      }
      note(b.label + " " + std::string(model_name(kind)) + ": accuracy " + csv::format_double(m.accuracy) + ", F1 " +
           csv::format_double(m.f1));
    }
  }
  write_text(path("metrics.csv"), summary.str());
  write_text(path("metrics_runs.csv"), runs.str());
}

void Pipeline::counterfactual() {
  const auto& cf = config_.counterfactual;
  if (!cf.enabled) {
    note("counterfactuals disabled");
    return;
  }
  const Model model = load_model(require(model_file(cf.model, cf.balancer), Stage::train));
  const Dataset train = read_dataset_csv(require("train.csv", Stage::preprocess));
  const Dataset test = read_dataset_csv(require("test.csv", Stage::preprocess));
  const auto results = explain_all(model, train, test, CfConfig{cf.lambda}, cf.population);
  write_counterfactuals_csv(results, train.schema, path("counterfactuals.csv"), header());

  const auto s = summarize(results, train.n_features());
  {
    std::ofstream out(path("cf_summary.csv"), std::ios::binary);
    out << header() << '\n' << "metric,value\n";
    out << "count," << s.count << '\n';
    out << "avg_norm_distance," << csv::format_double(s.avg_norm_distance) << '\n';
    out << "std_norm_distance," << csv::format_double(s.std_norm_distance) << '\n';
    out << "avg_sparsity," << csv::format_double(s.avg_sparsity) << '\n';
    out << "std_sparsity," << csv::format_double(s.std_sparsity) << '\n';
    out << "pct_features_changed," << csv::format_double(s.pct_features_changed) << '\n';
  }
  {
    std::ofstream out(path("cf_feature_rates.csv"), std::ios::binary);
    out << header() << '\n' << "feature,rate\n";
    for (const auto& [name, rate] : feature_change_rates(results, train.schema.names))
      out << name << ',' << csv::format_double(rate) << '\n';
  }
  ForestParams forest = config_.hyperparameters.forest;
  forest.n_trees = cf.grid_trees;
  const std::size_t n_pairs = std::min(cf.max_pairs, results.size());
  const auto grid = boundary_grid(train, std::span(results).first(n_pairs), cf.grid_resolution, forest,
                                  derive_seed(config_.seed, {0x6121D}));
  for (const auto& w : grid.pca.warnings) note("warning: " + w);
  write_boundary_csv(grid, path("boundary_grid.csv"), path("boundary_pairs.csv"), header());
  note("counterfactuals: " + std::to_string(s.count) + ", avg sparsity " + csv::format_double(s.avg_sparsity));
}

void Pipeline::risk() {
  if (!config_.risk) {
    note("risk analysis disabled");
    return;
  }
  const Dataset ds = read_dataset_csv(require("dataset_clean.csv", Stage::preprocess));
  const auto spec = config_.thresholds.empty() ? ThresholdSpec::standard() : ThresholdSpec::load(config_.thresholds);
  const auto rep = risk_report(ds, spec);
  write_risk_csv(rep, path("risk.csv"), header());
  write_text(path("risk.txt"), header() + "\n" + format_risk_text(rep));
  note("prior " + csv::format_double(rep.prior.value()));
}

RunReport Pipeline::report() {
  const auto rep = collect_report(dir_, config_);
  write_text(path("report.txt"), header() + "\n" + format_report_text(rep));
  write_text(path("report.json"), format_report_json(rep) + "\n");
  return rep;
}

RunReport collect_report(const fs::path& dir, const ExperimentConfig& config) {
  RunReport rep;
  rep.config_snapshot = fs::is_regular_file(dir / "config.json") ? read_text(dir / "config.json") : config.source_text;
  rep.config_hash = config.hash();
  rep.seed = config.seed;

  if (const auto file = dir / "metrics.csv"; fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    const auto cb = column(t, "balancer", file), cm = column(t, "model", file), ca = column(t, "accuracy", file),
               cp = column(t, "precision", file), cr = column(t, "recall", file), cf = column(t, "f1", file),
               cn = column(t, "n_runs", file);
    for (const auto& row : t.rows) {
      MetricsRow m;
      m.balancer = row[cb];
      m.model = row[cm];
      m.metrics = {number(row[ca], file), number(row[cp], file), number(row[cr], file), number(row[cf], file),
                   static_cast<std::size_t>(number(row[cn], file))};
      rep.metrics.push_back(std::move(m));
    }
  }

  std::vector<fs::path> sweep_files;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.starts_with("sweep_") && name.ends_with(".csv")) sweep_files.push_back(e.path());
    }
  std::sort(sweep_files.begin(), sweep_files.end());
  for (const auto& file : sweep_files) {
    const auto t = csv::read(file);
    SweepTable table;
    table.name = file.stem().string();
    std::vector<std::size_t> wcols;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c].starts_with("w_")) wcols.push_back(c);
    if (table.name == "sweep_triple") {
      for (auto m : {Method::smote, Method::generative, Method::adasyn}) table.methods.emplace_back(method_name(m));
    } else {
      std::stringstream parts(table.name.substr(6));
      for (std::string tok; std::getline(parts, tok, '_');) table.methods.emplace_back(method_name(parse_method(tok)));
    }
    if (table.methods.size() != wcols.size()) throw SchemaError(file.string() + ": weight columns do not match its name");
    const auto cg = column(t, "grid_index", file), ca = column(t, "accuracy", file), cp = column(t, "precision", file),
               cr = column(t, "recall", file), cf = column(t, "f1", file), cs = column(t, "seed_list", file),
               ce = column(t, "error", file);
    for (const auto& row : t.rows) {
      std::vector<double> w;
      for (auto c : wcols) w.push_back(number(row[c], file));
      SweepResult r{HybridWeights(w), {}, {}, static_cast<std::size_t>(number(row[cg], file)), std::nullopt};
      r.metrics = {number(row[ca], file), number(row[cp], file), number(row[cr], file), number(row[cf], file),
                   config.n_runs};
      std::stringstream seeds(row[cs]);
      for (std::string tok; std::getline(seeds, tok, ';');)
        if (!tok.empty()) r.seeds.push_back(std::stoull(tok));
      if (!row[ce].empty()) r.error = row[ce];
      table.rows.push_back(std::move(r));
    }
    rep.sweeps.push_back(std::move(table));
  }

  if (const auto file = dir / "cf_summary.csv"; fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    std::map<std::string, double> v;
    for (const auto& row : t.rows) v[row.at(0)] = number(row.at(1), file);
    CfSummary s;
    s.count = static_cast<std::size_t>(v["count"]);
    s.avg_norm_distance = v["avg_norm_distance"];
    s.std_norm_distance = v["std_norm_distance"];
    s.avg_sparsity = v["avg_sparsity"];
    s.std_sparsity = v["std_sparsity"];
    s.pct_features_changed = v["pct_features_changed"];
    rep.cf_summary = s;
  }
  if (const auto file = dir / "cf_feature_rates.csv"; fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    for (const auto& row : t.rows) rep.cf_rates.emplace_back(row.at(0), number(row.at(1), file));
  }

  if (const auto file = dir / "risk.csv"; fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    ProbReport pr;
    pr.spec = config.thresholds.empty() || !fs::is_regular_file(config.thresholds) ? ThresholdSpec::standard()
                                                                                   : ThresholdSpec::load(config.thresholds);
    const auto cfac = column(t, "factor", file), cfeat = column(t, "feature", file), ctab = column(t, "tabulated", file),
               ctot = column(t, "total", file), cpos = column(t, "positives", file), cfl = column(t, "flagged", file),
               cfp = column(t, "flagged_positive", file);
    for (const auto& row : t.rows) {
      FactorReport f;
      f.name = row[cfac];
      f.feature = row[cfeat];
      f.tabulated = row[ctab] == "1";
      f.total = static_cast<std::size_t>(number(row[ctot], file));
      f.positives = static_cast<std::size_t>(number(row[cpos], file));
      f.flagged = static_cast<std::size_t>(number(row[cfl], file));
      f.flagged_positive = static_cast<std::size_t>(number(row[cfp], file));
      const auto i64 = [](std::size_t v) { return static_cast<std::int64_t>(v); };
      f.likelihood = Rational(i64(f.flagged_positive), i64(f.positives));
      f.evidence = Rational(i64(f.flagged), i64(f.total));
      f.posterior = Rational(i64(f.flagged_positive), i64(f.flagged));
      pr.total = f.total;
      pr.positives = f.positives;
      pr.prior = Rational(i64(f.positives), i64(f.total));
      pr.factors.push_back(std::move(f));
    }
    rep.risk = std::move(pr);
  }

  if (const auto file = dir / "timings.csv"; fs::is_regular_file(file)) {
    const auto t = csv::read(file);
    for (const auto& row : t.rows) rep.timings.emplace_back(row.at(0), number(row.at(1), file));
  }
  return rep;
}

namespace {

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * v << '%';
  return os.str();
}

std::string fixed3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

const MetricsRow* best_single(const RunReport& rep, const std::vector<std::string>& methods, const std::string& model) {
  const MetricsRow* best = nullptr;
  for (const auto& m : rep.metrics) {
    if (m.model != model) continue;
    bool member = false;
    for (const auto& name : methods) member = member || csv::iequals(name, m.balancer);
    if (member && (!best || m.metrics.f1 > best->metrics.f1)) best = &m;
  }
  return best;
}

}  // namespace

std::string format_report_text(const RunReport& rep) {
  std::ostringstream os;
  os << "metaboost run report\n";
  os << "config hash " << rep.config_hash << ", seed " << rep.seed << "\n\n";

  if (!rep.metrics.empty()) {
    os << "Model performance (mean over runs)\n";
    os << "  " << std::left << std::setw(12) << "balancer" << std::setw(6) << "model" << std::right << std::setw(10)
       << "accuracy" << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(8) << "f1" << '\n';
    for (const auto& m : rep.metrics)
      os << "  " << std::left << std::setw(12) << m.balancer << std::setw(6) << m.model << std::right << std::setw(10)
         << fixed3(m.metrics.accuracy) << std::setw(11) << fixed3(m.metrics.precision) << std::setw(9)
         << fixed3(m.metrics.recall) << std::setw(8) << fixed3(m.metrics.f1) << '\n';
    os << '\n';
  }

  for (const auto& s : rep.sweeps) {
    os << "Weight sweep " << s.name << " (" << s.rows.size() << " grid points, best first)\n";
    const std::size_t shown = std::min<std::size_t>(s.rows.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& r = s.rows[i];
      os << (i == 0 ? "  * " : "    ");
      for (std::size_t k = 0; k < s.methods.size(); ++k)
        os << (k ? " " : "") << s.methods[k] << '=' << csv::format_double(r.weights[k]);
      if (r.error)
        os << "  failed: " << *r.error << '\n';
      else
        os << "  accuracy " << fixed3(r.metrics.accuracy) << "  f1 " << fixed3(r.metrics.f1) << '\n';
    }
    std::size_t failed = 0;
    for (const auto& r : s.rows) failed += r.error ? 1 : 0;
    if (failed) os << "  " << failed << " grid points failed\n";
    if (!s.rows.empty() && !s.rows.front().error && !rep.metrics.empty()) {
      const std::string model = rep.metrics.front().model;
      if (const auto* single = best_single(rep, s.methods, model)) {
        const double gap = s.rows.front().metrics.f1 - single->metrics.f1;
        os << "  best hybrid F1 " << fixed3(s.rows.front().metrics.f1) << " vs best single-method F1 "
           << fixed3(single->metrics.f1) << " (" << single->balancer << ", " << single->model << "), difference "
           << (gap >= 0 ? "+" : "") << fixed3(gap) << '\n';
      }
    }
    os << '\n';
  }

  if (rep.cf_summary) {
    const auto& s = *rep.cf_summary;
    os << "Counterfactual summary (" << s.count << " instances)\n";
    os << "  Average Normalized Distance    " << fixed3(s.avg_norm_distance) << '\n';
    os << "  Std. Dev. Normalized Distance  " << fixed3(s.std_norm_distance) << '\n';
    os << "  Average Sparsity               " << fixed3(s.avg_sparsity) << '\n';
    os << "  Std. Dev. Sparsity             " << fixed3(s.std_sparsity) << '\n';
    os << "  Percentage of Features Changed " << pct(s.pct_features_changed) << "\n\n";
  }
  if (!rep.cf_rates.empty()) {
    os << "Feature change rates\n";
    for (const auto& [name, rate] : rep.cf_rates) os << "  " << std::left << std::setw(16) << name << pct(rate) << '\n';
    os << std::right << '\n';
  }
  if (rep.risk) os << format_risk_text(*rep.risk) << '\n';
  if (!rep.timings.empty()) {
    os << "Timings (seconds)\n";
    for (const auto& [stage, secs] : rep.timings)
      os << "  " << std::left << std::setw(16) << stage << std::right << std::fixed << std::setprecision(2) << secs
         << '\n';
  }
  return os.str();
}

std::string format_report_json(const RunReport& rep) {
  nlohmann::ordered_json doc;
  doc["config_hash"] = rep.config_hash;
  doc["seed"] = rep.seed;
  try {
    doc["config"] = nlohmann::ordered_json::parse(rep.config_snapshot);
  } catch (const json::exception&) {
    doc["config"] = rep.config_snapshot;
  }
  auto metrics_json = [](const Metrics& m) {
    return nlohmann::ordered_json{
        {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  doc["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : rep.metrics) {
    auto row = metrics_json(m.metrics);
    row["balancer"] = m.balancer;
    row["model"] = m.model;
    row["n_runs"] = m.metrics.n_runs;
    doc["metrics"].push_back(std::move(row));
  }
  doc["sweeps"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.sweeps) {
    nlohmann::ordered_json t;
    t["name"] = s.name;
    t["methods"] = s.methods;
    t["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : s.rows) {
      auto row = metrics_json(r.metrics);
      row["grid_index"] = r.grid_index;
      row["weights"] = r.weights.values();
      row["seeds"] = r.seeds;
      if (r.error) row["error"] = *r.error;
      t["rows"].push_back(std::move(row));
    }
    doc["sweeps"].push_back(std::move(t));
  }
  if (rep.cf_summary) {
    const auto& s = *rep.cf_summary;
    doc["counterfactual_summary"] = {{"count", s.count},
                                     {"avg_norm_distance", s.avg_norm_distance},
                                     {"std_norm_distance", s.std_norm_distance},
                                     {"avg_sparsity", s.avg_sparsity},
                                     {"std_sparsity", s.std_sparsity},
                                     {"pct_features_changed", s.pct_features_changed}};
  }
  if (!rep.cf_rates.empty()) {
    doc["feature_change_rates"] = nlohmann::ordered_json::array();
    for (const auto& [name, rate] : rep.cf_rates)
      doc["feature_change_rates"].push_back({{"feature", name}, {"rate", rate}});
  }
  if (rep.risk) {
    nlohmann::ordered_json r;
    r["prior"] = rep.risk->prior.value();
    r["total"] = rep.risk->total;
    r["positives"] = rep.risk->positives;
    r["factors"] = nlohmann::ordered_json::array();
    for (const auto& f : rep.risk->factors)
      r["factors"].push_back({{"factor", f.name},
                              {"feature", f.feature},
                              {"tabulated", f.tabulated},
                              {"likelihood", f.likelihood.value()},
                              {"evidence", f.evidence.value()},
                              {"posterior", f.posterior.value()},
                              {"flagged", f.flagged},
                              {"flagged_positive", f.flagged_positive}});
    doc["risk"] = std::move(r);
  }
  doc["timings"] = nlohmann::ordered_json::object();
  for (const auto& [stage, secs] : rep.timings) doc["timings"][stage] = secs;
  return doc.dump(2);
}

}  // namespace metaboost
