#include "istsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "istsim/errors.hpp"

namespace istsim {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::single, "single"},
      {ExperimentKind::bell, "bell"},
      {ExperimentKind::chsh, "chsh"},
      {ExperimentKind::sequential, "sequential"},
      {ExperimentKind::counterfactual, "counterfactual"},
      {ExperimentKind::meas_dep, "meas-dep"},
      {ExperimentKind::nonlocality, "nonlocality"},
      {ExperimentKind::psi_ontic, "psi-ontic"},
      {ExperimentKind::noncommutativity, "noncommutativity"},
      {ExperimentKind::conspiracy, "conspiracy"},
  };
  return names;
}

SettingSpec deg(double d) { return SettingSpec{d, {0.0, 0.0, 1.0}}; }
SettingSpec vec(double x, double y, double z) { return SettingSpec{std::nullopt, {x, y, z}}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

template <class T>
T get_field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

SettingSpec parse_setting(const std::string& name, const Json& j) {
  if (j.is_number()) return deg(j.get<double>());
  if (j.is_array() && j.size() == 3 && j[0].is_number() && j[1].is_number() && j[2].is_number()) {
    return vec(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  }
  throw ConfigError("setting '" + name +
                    "' must be an angle in degrees or an [x, y, z] array");
}

bool needs_feasibility(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::nonlocality:
    case ExperimentKind::psi_ontic:
    case ExperimentKind::noncommutativity:
      return false;
    default:
      return true;
  }
}

Check tolerance_check(const std::string& name, const EnsembleStats& s, double delta,
                      const Thresholds& t) {
  const double tol = t.delta_multiplier * delta + t.sigma_multiplier * s.sigma();
  const double gap = std::abs(s.E_hat() - s.quantum_E);
  return Check{name, gap < tol,
               "|E_hat - E_q| = " + fmt(gap) + " vs tolerance " + fmt(tol)};
}

std::vector<std::string> ensemble_row(const std::string& experiment, const std::string& label,
                                      const EnsembleStats& s, double delta, const Thresholds& t,
                                      bool pass) {
  return {experiment,        label,
          fmt(s.runs),       fmt(s.E_hat()),
          fmt(s.quantum_E),  fmt(t.delta_multiplier * delta + t.sigma_multiplier * s.sigma()),
          pass ? "PASS" : "FAIL"};
}

Json checks_json(const std::vector<Check>& checks) {
  Json j = Json::object();
  for (const auto& c : checks) j[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
  return j;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kind_names()) {
    if (kind == k) return name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [kind, n] : kind_names()) {
    if (n == name) return kind;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

UnitVector SettingSpec::vector() const {
  if (degrees) return UnitVector::in_plane_degrees(*degrees);
  return UnitVector(components[0], components[1], components[2]);
}

std::map<std::string, SettingSpec> default_settings(ExperimentKind kind) {
  const SettingSpec y = vec(0.0, 1.0, 0.0);
  switch (kind) {
    case ExperimentKind::single:
      return {{"p", y}, {"a", deg(0)}, {"m", y}, {"b", deg(60)}};
    case ExperimentKind::bell:
      return {{"m1", y}, {"b", deg(0)}, {"m2", y}, {"c", deg(60)}};
    case ExperimentKind::chsh:
      return {{"m1", y}, {"m2", y}, {"b", deg(0)}, {"b_prime", deg(90)},
              {"c", deg(45)}, {"c_prime", deg(135)}};
    case ExperimentKind::sequential:
      return {{"m1", y}, {"m2", y}, {"m3", y}, {"a", deg(0)}, {"b", deg(60)}, {"c", deg(120)}};
    case ExperimentKind::counterfactual:
      return {{"m1", y}, {"m2", y}, {"m3", y}, {"a", deg(0)}, {"b", deg(60)},
              {"c", deg(120)}, {"b_prime", deg(150)}};
    case ExperimentKind::meas_dep:
      return {{"A", deg(0)}, {"b1", deg(45)}, {"b2", deg(135)}, {"m", y},
              {"B1", deg(0)}, {"B2", deg(90)}, {"c", deg(45)}, {"m2", y}};
    case ExperimentKind::nonlocality:
      return {{"m1", y}, {"b", deg(0)}, {"m2", y}, {"c", deg(45)}};
    case ExperimentKind::psi_ontic:
      return {{"p", y}, {"a1", deg(0)}, {"a2", deg(90)}};
    case ExperimentKind::noncommutativity:
      return {{"A", deg(0)}, {"m", vec(1, 1, 1)}, {"x1", vec(1, 0, 0)}, {"x2", vec(0, 1, 0)},
              {"x3", vec(0, 0, 1)}};
    case ExperimentKind::conspiracy:
      return {};
  }
  return {};
}

std::uint64_t ExperimentConfig::effective_runs() const {
  if (runs) return *runs;
  switch (experiment) {
    case ExperimentKind::single:
    case ExperimentKind::bell:
    case ExperimentKind::chsh:
    case ExperimentKind::conspiracy:
      return 100'000;
    case ExperimentKind::nonlocality:
    case ExperimentKind::noncommutativity:
      return 1'000;
    default:
      return 10'000;
  }
}

UnitVector ExperimentConfig::setting(const std::string& name) const {
  if (auto it = settings.find(name); it != settings.end()) return it->second.vector();
  const auto defaults = default_settings(experiment);
  if (auto it = defaults.find(name); it != defaults.end()) return it->second.vector();
  throw ConfigError("no setting named '" + name + "'");
}

ExperimentConfig config_from_json(const Json& j) {
  static const std::set<std::string> known{
      "experiment", "N", "delta", "azimuth_steps", "seed", "runs", "out", "format",
      "emit_run_records", "settings", "apparatus_count", "choice_model", "mode", "times",
      "drift_rate", "drift_seed", "mechanism_error", "bootstrap_replicates", "thresholds"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }

  ExperimentConfig c;
  if (j.contains("experiment")) {
    c.experiment = parse_experiment_kind(get_field<std::string>(j, "experiment"));
  }
  if (j.contains("N")) c.params.N = get_field<int>(j, "N");
  if (j.contains("delta")) c.params.delta = get_field<double>(j, "delta");
  if (j.contains("azimuth_steps")) c.params.azimuth_steps = get_field<int>(j, "azimuth_steps");
  if (j.contains("seed")) c.params.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("runs")) c.runs = get_field<std::uint64_t>(j, "runs");
  if (j.contains("out")) c.out = get_field<std::string>(j, "out");
  if (j.contains("format")) c.format = get_field<std::string>(j, "format");
  if (j.contains("emit_run_records")) c.emit_run_records = get_field<bool>(j, "emit_run_records");
  if (j.contains("apparatus_count")) c.apparatus_count = get_field<int>(j, "apparatus_count");
  if (j.contains("choice_model")) c.choice_model = get_field<std::string>(j, "choice_model");
  if (j.contains("mode")) c.mode = get_field<std::string>(j, "mode");
  if (j.contains("times")) c.times = get_field<std::array<double, 3>>(j, "times");
  if (j.contains("drift_rate")) c.drift_rate = get_field<double>(j, "drift_rate");
  if (j.contains("drift_seed")) c.drift_seed = get_field<std::uint64_t>(j, "drift_seed");
  if (j.contains("mechanism_error")) c.mechanism_error = get_field<bool>(j, "mechanism_error");
  if (j.contains("bootstrap_replicates")) {
    c.bootstrap_replicates = get_field<std::uint32_t>(j, "bootstrap_replicates");
  }
  if (j.contains("settings")) {
    const Json& s = j.at("settings");
    if (!s.is_object()) throw ConfigError("config field 'settings' must be an object");
    const auto defaults = default_settings(c.experiment);
    for (const auto& [name, value] : s.items()) {
      if (!defaults.contains(name)) {
        throw ConfigError("unknown setting '" + name + "' for experiment " +
                          to_string(c.experiment));
      }
      c.settings[name] = parse_setting(name, value);
    }
  }
  if (j.contains("thresholds")) {
    const Json& t = j.at("thresholds");
    auto read = [&](const char* key, double& field) {
      if (t.contains(key)) field = get_field<double>(t, key);
    };
    read("delta_multiplier", c.thresholds.delta_multiplier);
    read("sigma_multiplier", c.thresholds.sigma_multiplier);
    read("chsh_delta_multiplier", c.thresholds.chsh_delta_multiplier);
    read("chsh_sigma_multiplier", c.thresholds.chsh_sigma_multiplier);
    read("mi_tolerance", c.thresholds.mi_tolerance);
    read("null_mi_max", c.thresholds.null_mi_max);
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j{{"experiment", to_string(c.experiment)},
         {"N", c.params.N},
         {"delta", c.params.delta},
         {"azimuth_steps", c.params.azimuth_steps},
         {"seed", c.params.seed}};
  if (c.runs) j["runs"] = *c.runs;
  j["out"] = c.out;
  j["format"] = c.format;
  j["emit_run_records"] = c.emit_run_records;
  Json settings = Json::object();
  for (const auto& [name, spec] : c.settings) {
    settings[name] = spec.degrees ? Json(*spec.degrees) : Json(spec.components);
  }
  j["settings"] = std::move(settings);
  j["apparatus_count"] = c.apparatus_count;
  j["choice_model"] = c.choice_model;
  j["mode"] = c.mode;
  j["times"] = c.times;
  j["drift_rate"] = c.drift_rate;
  j["drift_seed"] = c.drift_seed;
  j["mechanism_error"] = c.mechanism_error;
  j["bootstrap_replicates"] = c.bootstrap_replicates;
  j["thresholds"] = {{"delta_multiplier", c.thresholds.delta_multiplier},
                     {"sigma_multiplier", c.thresholds.sigma_multiplier},
                     {"chsh_delta_multiplier", c.thresholds.chsh_delta_multiplier},
                     {"chsh_sigma_multiplier", c.thresholds.chsh_sigma_multiplier},
                     {"mi_tolerance", c.thresholds.mi_tolerance},
                     {"null_mi_max", c.thresholds.null_mi_max}};
  return j;
}

Json read_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c = config_from_json(read_config_json(path));
  validate_config(c);
  return c;
}

void validate_config(const ExperimentConfig& c) {
  c.params.validate();
  if (needs_feasibility(c.experiment)) c.params.require_feasible();
  if (c.format != "json" && c.format != "csv") {
    throw ParameterError("format must be json or csv (got '" + c.format + "')");
  }
  if (c.out.empty()) throw ParameterError("output path must not be empty");
  if (c.effective_runs() == 0) throw ParameterError("runs must be positive");
  if (c.choice_model != "superdeterministic" && c.choice_model != "independent") {
    throw ParameterError("choice_model must be superdeterministic or independent");
  }
  if (c.mode != "orientations" && c.mode != "order") {
    throw ParameterError("mode must be orientations or order");
  }
  if (c.apparatus_count < 2 || c.apparatus_count > 64) {
    throw ParameterError("apparatus_count must lie in {2..64}");
  }
  for (double t : c.times) {
    if (!std::isfinite(t)) throw ParameterError("times must be finite");
  }
  if (!std::isfinite(c.drift_rate) || c.drift_rate < 0.0) {
    throw ParameterError("drift_rate must be finite and non-negative");
  }
  for (const auto& [name, spec] : c.settings) {
    try {
      (void)spec.vector();
    } catch (const DegeneracyError&) {
      throw ParameterError("setting '" + name + "' is a zero vector");
    }
  }
}

bool ExperimentOutcome::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

ExperimentOutcome execute(const ExperimentConfig& c, std::ostream* records) {
  validate_config(c);
  const ModelParams& p = c.params;
  const std::uint64_t runs = c.effective_runs();
  const std::uint64_t seed = p.seed;
  const Thresholds& th = c.thresholds;
  const std::string name = to_string(c.experiment);

  ExperimentOutcome out;
  Json results = Json::object();

  auto emit = [&](const Json& j) {
    if (records) *records << j.dump() << '\n';
  };

  switch (c.experiment) {
    case ExperimentKind::single: {
      SingleChoices ch{{c.setting("p"), c.setting("a")}, {c.setting("m"), c.setting("b")}, {}};
      SingleRecordSink sink;
      if (records) sink = [&](const SingleRunRecord& r) { emit(to_json(r)); };
      const EnsembleStats s = run_single_ensemble(p, ch, runs, seed, sink);
      results["ensemble"] = to_json(s);
      out.checks.push_back(tolerance_check("E_within_tolerance", s, p.delta, th));
      out.csv_rows.push_back(ensemble_row(name, "E(a,b)", s, p.delta, th, out.checks.back().pass));
      out.summary = name + " E_hat=" + fmt(s.E_hat()) + " E_q=" + fmt(s.quantum_E);
      break;
    }
    case ExperimentKind::bell: {
      BellChoices ch{{c.setting("m1"), c.setting("b")}, {c.setting("m2"), c.setting("c")}};
      BellRecordSink sink;
      if (records) sink = [&](const BellRunRecord& r) { emit(to_json(r)); };
      const EnsembleStats s = run_bell_ensemble(p, ch, runs, seed, sink);
      results["ensemble"] = to_json(s);
      out.checks.push_back(tolerance_check("E_within_tolerance", s, p.delta, th));
      out.csv_rows.push_back(ensemble_row(name, "E(b,c)", s, p.delta, th, out.checks.back().pass));
      const double n = static_cast<double>(s.runs);
      for (auto [label, m] : {std::pair{"marginal_1", s.first_marginal()},
                              std::pair{"marginal_2", s.second_marginal()}}) {
        const double bound = th.sigma_multiplier * std::sqrt(std::max(0.0, 1.0 - m * m) / n);
        out.checks.push_back(Check{std::string(label) + "_balanced", std::abs(m) < bound,
                                   "|mean| = " + fmt(std::abs(m)) + " vs " + fmt(bound)});
      }
      out.summary = name + " E_hat=" + fmt(s.E_hat()) + " E_q=" + fmt(s.quantum_E);
      break;
    }
    case ExperimentKind::chsh: {
      ChshSettings st{c.setting("b"), c.setting("b_prime"), c.setting("c"), c.setting("c_prime"),
                      c.setting("m1"), c.setting("m2")};
      const ChshResult r = chsh(p, st, runs, seed);
      const double threshold = 2.0 * std::numbers::sqrt2 - th.chsh_delta_multiplier * p.delta -
                               th.chsh_sigma_multiplier * r.sigma_max;
      results["chsh"] = to_json(r);
      results["threshold"] = threshold;
      out.checks.push_back(Check{"S_above_threshold", r.S >= threshold,
                                 "S = " + fmt(r.S) + " vs " + fmt(threshold)});
      static constexpr const char* kLabels[] = {"E(b,c)", "E(b,c')", "E(b',c)", "E(b',c')"};
      for (std::size_t i = 0; i < 4; ++i) {
        const auto& s = r.correlators[i];
        const bool ok = std::abs(s.E_hat() - s.quantum_E) <
                        th.delta_multiplier * p.delta + th.sigma_multiplier * s.sigma();
        out.csv_rows.push_back(ensemble_row(name, kLabels[i], s, p.delta, th, ok));
      }
      out.csv_rows.push_back({name, "S", fmt(runs * 4), fmt(r.S), fmt(2.0 * std::numbers::sqrt2),
                              fmt(2.0 * std::numbers::sqrt2 - threshold),
                              out.checks.back().pass ? "PASS" : "FAIL"});
      out.summary = name + " S=" + fmt(r.S) + " threshold=" + fmt(threshold);
      break;
    }
    case ExperimentKind::sequential: {
      SequentialChoices ch{{ExperimenterChoice{c.setting("m1"), c.setting("a")},
                            ExperimenterChoice{c.setting("m2"), c.setting("b")},
                            ExperimenterChoice{c.setting("m3"), c.setting("c")}}};
      const DriftModel drift{c.drift_rate, c.drift_seed};
      const LatticeSize size = p.lattice();
      std::uint64_t satisfied = 0, changed = 0;
      for (std::uint64_t r = 0; r < runs; ++r) {
        Engine rng = make_engine(seed, r);
        const SequentialRecord rec = run_sequential(p, ch, c.times, drift, c.mechanism_error, rng, r);
        satisfied += rec.report.satisfied();
        const auto swapped = sequential_settings_at(rec, {c.times[0], c.times[2], c.times[1]});
        changed += check_sequence(swapped[0], swapped[1], swapped[2], size).satisfied() !=
                   rec.report.satisfied();
        if (records) emit(to_json(rec));
      }
      const double frac = static_cast<double>(satisfied) / static_cast<double>(runs);
      results["runs"] = runs;
      results["constraints_satisfied"] = satisfied;
      results["satisfied_fraction"] = frac;
      results["flags_changed_on_time_swap"] = changed;
      if (c.mechanism_error) {
        out.checks.push_back(Check{"constraints_satisfied", satisfied == runs,
                                   fmt(satisfied) + " of " + fmt(runs) + " runs"});
      }
      out.csv_rows.push_back({name, "satisfied_fraction", fmt(runs), fmt(frac), "1", "0",
                              out.pass() ? "PASS" : "FAIL"});
      out.summary = name + " satisfied=" + fmt(frac) + " swap_changes=" + fmt(changed);
      break;
    }
    case ExperimentKind::counterfactual: {
      SequentialCensusSetup seq;
      seq.choices.apparatus = {ExperimenterChoice{c.setting("m1"), c.setting("a")},
                               ExperimenterChoice{c.setting("m2"), c.setting("b")},
                               ExperimenterChoice{c.setting("m3"), c.setting("c")}};
      seq.times = c.times;
      seq.drift = DriftModel{c.drift_rate, c.drift_seed};
      seq.mechanism_error = true;
      seq.mode = c.mode == "order" ? CounterfactualMode::order : CounterfactualMode::orientations;
      SequentialCensusSetup seq_control = seq;
      seq_control.drift.angular_rate = 0.0;
      seq_control.mechanism_error = false;

      BellCensusSetup bell;
      bell.choices.wing1_first = {c.setting("m1"), c.setting("b")};
      bell.choices.wing1_second = {c.setting("m3"), c.setting("b_prime")};
      bell.choices.wing2 = {c.setting("m2"), c.setting("c")};
      BellCensusSetup bell_control = bell;
      bell_control.mechanism_error = false;

      const CensusReport s1 = counterfactual_census_sequential(p, seq, runs, derive_seed(seed, 0));
      const CensusReport s0 =
          counterfactual_census_sequential(p, seq_control, runs, derive_seed(seed, 1));
      const CensusReport b1 = counterfactual_census_bell(p, bell, runs, derive_seed(seed, 2));
      const CensusReport b0 = counterfactual_census_bell(p, bell_control, runs, derive_seed(seed, 3));
      results["sequential"] = to_json(s1);
      results["sequential_control"] = to_json(s0);
      results["bell"] = to_json(b1);
      results["bell_control"] = to_json(b0);
      out.checks.push_back(Check{"sequential_disagreement_positive", s1.disagreements > 0,
                                 "fraction " + fmt(s1.disagreement_fraction())});
      out.checks.push_back(Check{"sequential_control_identical", s0.disagreements == 0,
                                 fmt(s0.disagreements) + " disagreements"});
      out.checks.push_back(Check{"bell_disagreement_positive", b1.disagreements > 0,
                                 "fraction " + fmt(b1.disagreement_fraction())});
      out.checks.push_back(Check{"bell_control_identical", b0.disagreements == 0,
                                 fmt(b0.disagreements) + " disagreements"});
      for (const auto* r : {&s1, &s0, &b1, &b0}) {
        out.csv_rows.push_back({name, r->scenario + "/" + r->mode, fmt(r->runs),
                                fmt(r->disagreement_fraction()), "", "", ""});
      }
      out.summary = name + " sequential=" + fmt(s1.disagreement_fraction()) +
                    " bell=" + fmt(b1.disagreement_fraction());
      break;
    }
    case ExperimentKind::meas_dep: {
      DependenceOptions opt;
      opt.samples = runs;
      opt.replicates = c.bootstrap_replicates;
      const UnitVector A = c.setting("A"), m = c.setting("m"), m2 = c.setting("m2");
      const UnitVector b1 = c.setting("b1"), b2 = c.setting("b2");
      const UnitVector B1 = c.setting("B1"), B2 = c.setting("B2"), cc = c.setting("c");
      const auto single = measurement_dependence_single(p, A, b1, b2, m, derive_seed(seed, 0), opt);
      const auto single0 = measurement_dependence_single(p, A, b1, b1, m, derive_seed(seed, 1), opt);
      const auto bell = measurement_dependence_bell(p, B1, B2, cc, m2, derive_seed(seed, 2), opt);
      const auto bell0 = measurement_dependence_bell(p, B1, B1, cc, m2, derive_seed(seed, 3), opt);
      results["single"] = to_json(single);
      results["single_control"] = to_json(single0);
      results["bell"] = to_json(bell);
      results["bell_control"] = to_json(bell0);
      auto add = [&](const std::string& label, const DependenceReport& r, DependenceVerdict want) {
        out.checks.push_back(Check{label, r.verdict == want,
                                   to_string(r.verdict) + ", CI [" + fmt(r.interval.lower) + ", " +
                                       fmt(r.interval.upper) + "]"});
        out.csv_rows.push_back({name, label, fmt(r.samples1 + r.samples2), fmt(r.distance), "",
                                fmt(r.interval.lower) + ".." + fmt(r.interval.upper),
                                out.checks.back().pass ? "PASS" : "FAIL"});
      };
      add("single_dependent", single, DependenceVerdict::dependent);
      add("single_control_independent", single0, DependenceVerdict::independent_within_tolerance);
      add("bell_dependent", bell, DependenceVerdict::dependent);
      add("bell_control_independent", bell0, DependenceVerdict::independent_within_tolerance);
      out.summary = name + " TV_single=" + fmt(single.distance) + " TV_bell=" + fmt(bell.distance);
      break;
    }
    case ExperimentKind::nonlocality: {
      WitnessSearch search{{c.setting("m1"), c.setting("b")}, {c.setting("m2"), c.setting("c")}};
      const NonlocalityWitness w = nonlocality_witness(p, seed, runs, search);
      const bool again = w.reverify(p.lattice());
      results["witness"] = to_json(w);
      results["reverified"] = again;
      out.checks.push_back(Check{"witness_found", w.found, fmt(w.trials) + " trials"});
      out.checks.push_back(Check{"witness_reverified", again, ""});
      out.csv_rows.push_back({name, "witness", fmt(w.trials), w.found ? "1" : "0", "1", "",
                              out.pass() ? "PASS" : "FAIL"});
      out.summary = name + " found=" + (w.found ? "yes" : "no") + " trials=" + fmt(w.trials);
      break;
    }
    case ExperimentKind::psi_ontic: {
      const PsiOnticReport r =
          psi_ontic_check(p, c.setting("p"), c.setting("a1"), c.setting("a2"), runs, seed);
      results["report"] = to_json(r);
      out.checks.push_back(Check{"state_recomputable", r.recomputable, ""});
      if (r.separation > 2.0 * p.delta) {
        out.checks.push_back(Check{"supports_disjoint", r.disjoint,
                                   "overlap " + fmt(r.empirical_overlap)});
      } else if (r.separation == 0.0) {
        out.checks.push_back(Check{"supports_identical", r.empirical_overlap == 1.0,
                                   "overlap " + fmt(r.empirical_overlap)});
      }
      out.csv_rows.push_back({name, "overlap", fmt(runs), fmt(r.empirical_overlap),
                              fmt(r.cap_overlap), "", out.pass() ? "PASS" : "FAIL"});
      out.summary = name + " overlap=" + fmt(r.empirical_overlap) +
                    (r.sub_resolution ? " (sub-resolution preparations)" : "");
      break;
    }
    case ExperimentKind::noncommutativity: {
      NoncommutativitySetup st;
      st.A = c.setting("A");
      st.m = c.setting("m");
      st.x = {c.setting("x1"), c.setting("x2"), c.setting("x3")};
      const NoncommutativityReport r = noncommutativity_census(p, st, runs, seed);
      results["report"] = to_json(r);
      out.checks.push_back(Check{"two_on_lattice_pair_exists", r.realizable_pairs > 0,
                                 fmt(r.realizable_pairs) + " ordered pairs"});
      out.checks.push_back(Check{"mechanism_breaks_orthogonality", r.max_abs_pairwise_dot > 0.0,
                                 "max |X_i.X_j| = " + fmt(r.max_abs_pairwise_dot)});
      out.csv_rows.push_back({name, "orthogonal_triples", fmt(runs),
                              fmt(static_cast<std::uint64_t>(r.orthogonal_triples.size())), "", "",
                              out.pass() ? "PASS" : "FAIL"});
      out.summary = name + " triples=" + fmt(static_cast<std::uint64_t>(r.orthogonal_triples.size())) +
                    " pairs=" + fmt(r.realizable_pairs) + (r.tension_flag ? " tension" : "");
      break;
    }
    case ExperimentKind::conspiracy: {
      const ChoiceModel model = c.choice_model == "independent" ? ChoiceModel::independent
                                                                : ChoiceModel::superdeterministic;
      const ConspiracyReport r = conspiracy_experiment(p, c.apparatus_count, runs, seed, model);
      results["report"] = to_json(r);
      if (model == ChoiceModel::superdeterministic) {
        const double gap = std::abs(r.mutual_information - r.log2_apparatus);
        out.checks.push_back(Check{"mi_near_log2_apparatus", gap < th.mi_tolerance,
                                   "|MI - log2 N_app| = " + fmt(gap)});
      } else {
        out.checks.push_back(Check{"null_mi_small", r.mutual_information < th.null_mi_max,
                                   "MI = " + fmt(r.mutual_information)});
      }
      out.csv_rows.push_back({name, r.choice_model, fmt(runs), fmt(r.mutual_information),
                              fmt(model == ChoiceModel::superdeterministic ? r.log2_apparatus : 0.0),
                              fmt(model == ChoiceModel::superdeterministic ? th.mi_tolerance
                                                                           : th.null_mi_max),
                              out.pass() ? "PASS" : "FAIL"});
      out.summary = name + " N_app=" + std::to_string(r.apparatus_count) +
                    " MI=" + fmt(r.mutual_information) + " bits";
      break;
    }
  }

  Json settings = Json::object();
  for (const auto& [key, spec] : default_settings(c.experiment)) {
    settings[key] = to_json(c.setting(key));
  }
  Json params = to_json(p);
  params["runs"] = runs;
  params["settings"] = std::move(settings);
  Json config = config_to_json(c);
  config.erase("out");
  params["config"] = std::move(config);

  out.report = Json{{"schema_version", kSchemaVersion},
                    {"experiment", name},
                    {"params", std::move(params)},
                    {"results", std::move(results)},
                    {"verdicts", checks_json(out.checks)},
                    {"pass", out.pass()}};
  out.summary += out.pass() ? " PASS" : " FAIL";
  return out;
}

int run_experiment(const ExperimentConfig& c, std::ostream& console) {
  namespace fs = std::filesystem;
  const fs::path json_path = fs::path(c.out).replace_extension(".json");
  const fs::path csv_path = fs::path(c.out).replace_extension(".csv");
  const fs::path records_path = fs::path(c.out).replace_extension(".runs.ndjson");

  auto open = [](const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return f;
  };

  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());

  ExperimentOutcome outcome;
  if (c.emit_run_records) {
    std::ofstream records = open(records_path);
    outcome = execute(c, &records);
    if (!records) throw std::runtime_error("write failed: " + records_path.string());
  } else {
    outcome = execute(c);
  }

  {
    std::ofstream f = open(json_path);
    f << outcome.report.dump(2) << '\n';
    if (!f) throw std::runtime_error("write failed: " + json_path.string());
  }
  if (c.format == "csv") {
    std::ofstream f = open(csv_path);
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << cells[i];
      f << '\n';
    };
    line(csv_header());
    for (const auto& row : outcome.csv_rows) line(row);
    if (!f) throw std::runtime_error("write failed: " + csv_path.string());
  }
  console << outcome.summary << '\n';
  return outcome.pass() ? 0 : 1;
}

}  // namespace istsim
