#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "implreg/builtins.hpp"
#include "implreg/model.hpp"
#include "implreg/trainer.hpp"

namespace implreg::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Schema violation; each diagnostic names the offending field (and line and
/// column for malformed JSON). Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// Numeric failure inside a named stage (train, pretrain, spectrum, ...). Maps
/// to exit code 3.
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(std::string analysis, const std::string& message);
  const std::string& analysis() const { return analysis_; }

 private:
  std::string analysis_;
};

struct DatasetSource {
  std::string builtin;  // empty when points are inline
  builtins::GeneratorParams params;
  Dataset points;
};

struct InitSection {
  double scale = 1.0;
  bool shared = false;  // every seed starts from the init drawn with the base seed
  bool pretrain = false;
  double pretrain_tol = 1e-6;
};

enum class TrainMode { Fixed, UntilStable };

struct TrainSection {
  TrainMode mode = TrainMode::Fixed;
  double eta = 1e-3;
  std::int64_t steps = 1000;
  std::int64_t snapshot_stride = 100;
  NoiseModel noise{};
  StableTrainingOptions stable{};  // eta, noise, seed and record_stride are filled from above
  bool polish = false;             // Gauss-Newton projection of the final iterate
  double polish_tol = 1e-6;
  bool control = false;            // noiseless GD to zero error from the same init
  double control_tol = 1e-6;
};

struct AnalysisSection {
  bool spectrum = false;
  bool ou = false;
  bool drift = false;
  bool geometry = false;
  bool single_point = false;
  double tol_abs = 1e-8;
  double tol_rel = 1e-6;
  double zero_error_tol = 1e-6;
  double ou_min_gamma_rel = 0.1;
  int drift_seeds = 64;
  std::optional<std::int64_t> drift_horizon;
  double line_tol_rel = 0.02;  // of the data's y-range
  double cluster_tol = 0.05;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string experiment;
  std::string description;
  std::uint64_t seed = 0;
  int n_seeds = 1;
  std::string output_dir = "runs/out";
  Architecture arch{};
  DatasetSource dataset{};
  InitSection init{};
  TrainSection train{};
  AnalysisSection analyses{};

  std::vector<std::uint64_t> seeds() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values all become
/// diagnostics. Accepts a manifest.json too (its config echo is used).
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& c);

/// JSON text to json, with line/column diagnostics on syntax errors.
json parse_json_text(const std::string& text, const std::string& source_name);

/// "a.b.c=value": value is read as JSON when it parses, else as a string.
void apply_override(json& j, const std::string& assignment);

struct ExperimentInfo {
  std::string name;
  std::string description;
};
std::vector<ExperimentInfo> list_experiments();
/// Config of a builtin experiment; throws ConfigError for unknown names.
json builtin_experiment(const std::string& name);

struct RunResult {
  json manifest;
  json report;
};

/// Runs pretrain, training over seeds and the enabled analyses, writing
/// manifest.json (first), seed_<s>/trajectory.csv, seed_<s>/metrics.csv,
/// report.json under config.output_dir.
RunResult run(const ExperimentConfig& config);

}  // namespace implreg::cli
