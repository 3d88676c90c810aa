#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "istsim/config.hpp"
#include "istsim/errors.hpp"

namespace {

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("ISTSIM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw istsim::ConfigError(std::string("ISTSIM_SEED is not an integer: ") + v);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superdeterministic hidden-variable model simulator"};

  std::string config_path, experiment, out, format;
  std::optional<int> N;
  std::optional<double> delta;
  std::optional<std::uint64_t> runs, seed;
  bool emit = false;

  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--experiment", experiment,
                 "single | bell | chsh | sequential | counterfactual | meas-dep | nonlocality | "
                 "psi-ontic | noncommutativity | conspiracy");
  app.add_option("--N", N, "lattice size (even, >= 4)");
  app.add_option("--delta", delta, "resolution bound (chord distance)");
  app.add_option("--runs", runs, "runs, samples or trials");
  app.add_option("--seed", seed, "RNG seed (default: $ISTSIM_SEED or 1)");
  app.add_option("--out", out, "report path (JSON; CSV and run records alongside)");
  app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--emit-run-records", emit, "write one JSON line per run");

  CLI11_PARSE(app, argc, argv);

  try {
    // Flags override the file, so validation waits until they are applied.
    const istsim::Json file =
        config_path.empty() ? istsim::Json::object() : istsim::read_config_json(config_path);
    istsim::ExperimentConfig cfg = istsim::config_from_json(file);
    const bool seed_set = file.contains("seed");
    if (!experiment.empty()) cfg.experiment = istsim::parse_experiment_kind(experiment);
    if (N) cfg.params.N = *N;
    if (delta) cfg.params.delta = *delta;
    if (runs) cfg.runs = *runs;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format;
    if (emit) cfg.emit_run_records = true;
    if (seed) {
      cfg.params.seed = *seed;
    } else if (!seed_set) {
      if (auto env = seed_from_env()) cfg.params.seed = *env;
    }
    istsim::validate_config(cfg);
    return istsim::run_experiment(cfg, std::cout);
  } catch (const istsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const istsim::ParameterError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return 2;
  } catch (const istsim::InfeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
