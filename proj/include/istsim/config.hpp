#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "istsim/ontology.hpp"
#include "istsim/report.hpp"

namespace istsim {

enum class ExperimentKind {
  single,
  bell,
  chsh,
  sequential,
  counterfactual,
  meas_dep,
  nonlocality,
  psi_ontic,
  noncommutativity,
  conspiracy,
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

// A setting as written in the config: degrees in the x-z plane, or explicit
// components. Kept verbatim so configs round-trip exactly.
struct SettingSpec {
  std::optional<double> degrees;
  std::array<double, 3> components{0.0, 0.0, 1.0};
  UnitVector vector() const;
  bool operator==(const SettingSpec&) const = default;
};

// Pass/fail thresholds; defaults match the acceptance criteria.
struct Thresholds {
  double delta_multiplier = 2.0;   // |E - E_q| < dm*delta + sm*sigma
  double sigma_multiplier = 5.0;
  double chsh_delta_multiplier = 8.0;  // S >= 2*sqrt(2) - cd*delta - cs*sigma_max
  double chsh_sigma_multiplier = 20.0;
  double mi_tolerance = 0.05;       // |MI - log2 N_app|
  double null_mi_max = 0.05;
  bool operator==(const Thresholds&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::single;
  ModelParams params;
  std::optional<std::uint64_t> runs;  // per-experiment default when absent
  std::string out = "istsim_report.json";
  std::string format = "json";  // json | csv
  bool emit_run_records = false;
  std::map<std::string, SettingSpec> settings;  // overrides of the defaults

  // Experiment-specific knobs.
  int apparatus_count = 8;
  std::string choice_model = "superdeterministic";
  std::string mode = "orientations";
  std::array<double, 3> times{1.0, 2.0, 3.0};
  double drift_rate = 0.01;
  std::uint64_t drift_seed = 7;
  bool mechanism_error = true;
  std::uint32_t bootstrap_replicates = 1000;
  Thresholds thresholds;

  std::uint64_t effective_runs() const;
  UnitVector setting(const std::string& name) const;  // config value or default
  bool operator==(const ExperimentConfig&) const = default;
};

// Default settings for an experiment kind, by name.
std::map<std::string, SettingSpec> default_settings(ExperimentKind kind);

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);

// Raw JSON of a config file; ConfigError carries line and column on parse
// failure.
Json read_config_json(const std::filesystem::path& path);

// Throws ConfigError on I/O or parse failure (with line and column) and
// ParameterError naming the violated invariant.
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& c);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentOutcome {
  Json report;  // schema_version, experiment, params, results, verdicts
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<Check> checks;
  std::string summary;
  bool pass() const;
};

inline const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> h{"experiment", "label", "runs", "value", "reference",
                                          "tolerance", "verdict"};
  return h;
}

// Runs the experiment. Run records, when enabled, go to `records` as one
// JSON object per line.
ExperimentOutcome execute(const ExperimentConfig& config, std::ostream* records = nullptr);

// execute() plus artifacts on disk and the one-line summary on `console`.
// Returns 0 iff every check passes.
int run_experiment(const ExperimentConfig& config, std::ostream& console);

}  // namespace istsim
