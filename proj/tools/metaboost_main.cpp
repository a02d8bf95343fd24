// Command-line front end for the experiment pipeline.
//
//   metaboost run --config exp.json [--seed N] [--out DIR] [--quiet]
//   metaboost <stage> --config exp.json ...
//   metaboost --config exp.json --stage <stage>
//
// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 partial completion.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "metaboost/error.hpp"
#include "metaboost/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kPartial = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metaboost: imbalanced MetS prediction experiments"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string stage_arg;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", out_dir, "Run directory (default: <output_dir>/<timestamp>-<hash>)");
  app.add_option("--stage", stage_arg, "Run a single stage");
  app.add_flag("--quiet", quiet, "Suppress progress output");

  app.add_subcommand("run", "Run every stage in order");
  for (auto s : metaboost::all_stages()) {
    const std::string name(metaboost::stage_name(s));
    app.add_subcommand(name, "Run the " + name + " stage");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  std::optional<metaboost::Stage> stage;
  bool run_all = false;
  try {
    if (auto subs = app.get_subcommands(); !subs.empty()) {
      if (!stage_arg.empty()) throw metaboost::ConfigError("give either a subcommand or --stage, not both");
      if (subs.front()->get_name() == "run")
        run_all = true;
      else
        stage = metaboost::parse_stage(subs.front()->get_name());
    } else if (!stage_arg.empty()) {
      stage = metaboost::parse_stage(stage_arg);
    } else {
      run_all = true;
    }
    if (config_path.empty()) throw metaboost::ConfigError("--config is required");
  } catch (const metaboost::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }

  metaboost::ExperimentConfig config;
  std::filesystem::path dir;
  try {
    config = metaboost::ExperimentConfig::load(config_path);
    if (seed) config.seed = *seed;
    config.validate();
    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) out = out_dir;
    dir = metaboost::resolve_run_dir(config, out, run_all);
  } catch (const metaboost::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }

  metaboost::Pipeline pipeline(config, dir, quiet ? nullptr : &std::cerr);
  try {
    if (run_all) {
      const auto report = pipeline.run();
      std::cout << dir.string() << '\n';
      if (pipeline.sweep_failures() > 0) {
        std::cerr << "warning: " << pipeline.sweep_failures() << " sweep grid points failed\n";
        return kPartial;
      }
      return kOk;
    }
    pipeline.run_stage(*stage);
    if (*stage == metaboost::Stage::sweep && pipeline.sweep_failures() > 0) {
      std::cerr << "warning: " << pipeline.sweep_failures() << " sweep grid points failed\n";
      std::cout << dir.string() << '\n';
      return kPartial;
    }
    if (*stage == metaboost::Stage::report)
      std::cout << metaboost::format_report_text(metaboost::collect_report(dir, config));
    else
      std::cout << dir.string() << '\n';
    return kOk;
  } catch (const metaboost::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.partial()) std::cerr << "completed artifacts kept in " << dir.string() << " (marked INCOMPLETE)\n";
    return e.partial() ? kPartial : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: stage " << (stage ? metaboost::stage_name(*stage) : "run") << ": " << e.what() << '\n';
    return kRuntime;
  }
}
