// Command-line front end: list and run experiments.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "implreg/builtins.hpp"
#include "implreg/errors.hpp"
#include "implreg/experiment.hpp"

namespace cli = implreg::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int report_config_error(const cli::ConfigError& e) {
  for (const std::string& d : e.diagnostics()) std::cerr << "config error: " << d << '\n';
  return kExitConfig;
}

cli::json load_base(const std::string& config_path, const std::string& experiment) {
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw cli::ConfigError({"cannot read config file '" + config_path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    cli::json j = cli::parse_json_text(ss.str(), config_path);
    // a manifest stands in for the config it recorded
    if (j.is_object() && j.contains("manifest_version") && j.contains("config")) j = j["config"];
    return j;
  }
  return cli::builtin_experiment(experiment);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise SGD experiments: training, spectra, fluctuation and geometry checks"};
  app.require_subcommand(1);

  CLI::App* list = app.add_subcommand("list", "List builtin experiments and datasets");

  CLI::App* show = app.add_subcommand("show", "Print the resolved config of a run as JSON");
  CLI::App* run = app.add_subcommand("run", "Run an experiment");

  std::string config_path, experiment, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_seeds;
  std::optional<std::int64_t> stride;
  std::vector<std::string> overrides;
  for (CLI::App* sub : {run, show}) {
    auto* cfg = sub->add_option("--config", config_path, "JSON config (or a manifest.json)");
    auto* exp = sub->add_option("--experiment", experiment, "Builtin experiment name");
    cfg->excludes(exp);
    sub->add_option("--seed", seed, "Base seed");
    sub->add_option("--seeds", n_seeds, "Number of seeds (base, base+1, ...)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--stride", stride, "Snapshot / metrics stride in steps");
    sub->add_option("--override", overrides, "key=value on dotted config paths (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*list) {
    std::cout << "experiments:\n";
    for (const auto& e : cli::list_experiments())
      std::cout << "  " << e.name << "  " << e.description << '\n';
    std::cout << "datasets:\n";
    for (const auto& g : implreg::builtins::generators())
      std::cout << "  " << g.name << "  " << g.description << '\n';
    return 0;
  }

  try {
    if (config_path.empty() && experiment.empty())
      throw cli::ConfigError({"give --config PATH or --experiment NAME"});
    cli::json j = load_base(config_path, experiment);
    if (seed) cli::apply_override(j, "seed=" + std::to_string(*seed));
    if (n_seeds) cli::apply_override(j, "n_seeds=" + std::to_string(*n_seeds));
    if (stride) cli::apply_override(j, "train.snapshot_stride=" + std::to_string(*stride));
    if (!out_dir.empty()) j["output_dir"] = out_dir;
    for (const std::string& o : overrides) cli::apply_override(j, o);
    const cli::ExperimentConfig config = cli::config_from_json(j);

    if (*show) {
      std::cout << cli::config_to_json(config).dump(2) << '\n';
      return 0;
    }
    std::cerr << "running " << config.experiment << " -> " << config.output_dir << '\n';
    const cli::RunResult r = cli::run(config);
    std::cout << config.output_dir << "/manifest.json\n";
    (void)r;
    return 0;
  } catch (const cli::ConfigError& e) {
    return report_config_error(e);
  } catch (const cli::AnalysisError& e) {
    std::cerr << "numeric failure in analysis '" << e.analysis() << "': " << e.what() << '\n';
    return kExitNumeric;
  } catch (const implreg::Error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
