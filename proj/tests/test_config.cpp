#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "istsim/config.hpp"
#include "istsim/errors.hpp"

using namespace istsim;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("istsim_cfg_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, MinimalSingleConfigLoads) {
  TempDir dir;
  const auto cfg = load_config(dir.write("c.json", R"({"experiment": "single", "N": 1024,
    "delta": 0.02, "runs": 100000})"));
  EXPECT_EQ(cfg.experiment, ExperimentKind::single);
  EXPECT_EQ(cfg.params.N, 1024);
  EXPECT_EQ(cfg.effective_runs(), 100000u);
  EXPECT_LT(cfg.setting("a").chord(UnitVector::in_plane_degrees(0.0)), 1e-15);
}

TEST(Config, InvariantViolationsNameTheInvariant) {
  TempDir dir;
  try {
    load_config(dir.write("odd.json", R"({"experiment": "single", "N": 1023})"));
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("N must be even"), std::string::npos) << e.what();
  }
  try {
    load_config(dir.write("inf.json", R"({"experiment": "single", "N": 100, "delta": 0.01})"));
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("N*delta"), std::string::npos) << e.what();
  }
  // Lattice-only experiments accept small N.
  EXPECT_NO_THROW(load_config(dir.write("n8.json", R"({"experiment": "noncommutativity", "N": 8})")));
  EXPECT_THROW(load_config(dir.write("fmt.json", R"({"format": "xml"})")), ParameterError);
}

TEST(Config, ParseErrorsCarryLocation) {
  TempDir dir;
  try {
    load_config(dir.write("bad.json", "{\n  \"experiment\": \"single\",\n  \"N\": ,\n}"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config(dir.path() / "missing.json"), ConfigError);
  EXPECT_THROW(load_config(dir.write("u.json", R"({"experimant": "single"})")), ConfigError);
  EXPECT_THROW(load_config(dir.write("s.json", R"({"experiment": "single", "settings": {"zz": 3}})")),
               ConfigError);
  EXPECT_THROW(load_config(dir.write("k.json", R"({"experiment": "teleport"})")), ConfigError);
  EXPECT_THROW(load_config(dir.write("t.json", R"({"N": "many"})")), ConfigError);
}

TEST(Config, RoundTripsLosslessly) {
  const ExperimentConfig c = config_from_json(Json::parse(R"({
    "experiment": "counterfactual", "N": 2048, "delta": 0.0123456789,
    "seed": 18369614221190020847, "runs": 12345,
    "settings": {"a": 12.5, "b": [0.1, -0.2, 0.97]},
    "mode": "order", "times": [0.5, 1.5, 4.25], "thresholds": {"mi_tolerance": 0.01}})"));
  EXPECT_EQ(c.params.seed, 0xfeedfacecafebeefULL);
  EXPECT_EQ(c.settings.at("a").degrees, 12.5);
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
  EXPECT_EQ(config_from_json(Json::parse(config_to_json(c).dump())), c);
}

TEST(Config, DefaultsPerExperiment) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::chsh;
  EXPECT_EQ(c.effective_runs(), 100000u);
  c.experiment = ExperimentKind::nonlocality;
  EXPECT_EQ(c.effective_runs(), 1000u);
  c.experiment = ExperimentKind::counterfactual;
  EXPECT_EQ(c.effective_runs(), 10000u);
  for (auto k : {"single", "bell", "chsh", "sequential", "counterfactual", "meas-dep", "nonlocality",
                 "psi-ontic", "noncommutativity", "conspiracy"}) {
    EXPECT_EQ(to_string(parse_experiment_kind(k)), k);
  }
}

TEST(Report, SchemaFieldsAndCsv) {
  TempDir dir;
  ExperimentConfig c;
  c.experiment = ExperimentKind::single;
  c.runs = 2000;
  c.format = "csv";
  c.emit_run_records = true;
  c.out = (dir.path() / "single.json").string();
  std::ostringstream console;
  const int code = run_experiment(c, console);
  EXPECT_EQ(code, 0) << console.str();
  EXPECT_NE(console.str().find("PASS"), std::string::npos);

  const Json report = Json::parse(slurp(dir.path() / "single.json"));
  EXPECT_EQ(report.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(report.at("experiment"), "single");
  EXPECT_TRUE(report.at("params").contains("N"));
  EXPECT_TRUE(report.at("results").contains("ensemble"));
  EXPECT_TRUE(report.at("verdicts").at("E_within_tolerance").at("pass").get<bool>());
  EXPECT_TRUE(report.at("pass").get<bool>());

  const std::string csv = slurp(dir.path() / "single.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "experiment,label,runs,value,reference,tolerance,verdict");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  std::ifstream records(dir.path() / "single.runs.ndjson");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(records, line)) {
    const Json r = Json::parse(line);
    ASSERT_EQ(r.at("run_index").get<std::uint64_t>(), lines);
    ++lines;
  }
  EXPECT_EQ(lines, 2000u);
}

TEST(Report, SameConfigGivesIdenticalBytes) {
  TempDir dir;
  ExperimentConfig c;
  c.experiment = ExperimentKind::conspiracy;
  c.apparatus_count = 4;
  c.runs = 10000;
  std::ostringstream console;
  c.out = (dir.path() / "a.json").string();
  run_experiment(c, console);
  c.out = (dir.path() / "b.json").string();
  run_experiment(c, console);
  EXPECT_EQ(slurp(dir.path() / "a.json"), slurp(dir.path() / "b.json"));
  c.params.seed = 2;
  c.out = (dir.path() / "c.json").string();
  run_experiment(c, console);
  EXPECT_NE(slurp(dir.path() / "a.json"), slurp(dir.path() / "c.json"));
}

TEST(Report, EveryExperimentProducesAReport) {
  for (auto kind : {ExperimentKind::single, ExperimentKind::bell, ExperimentKind::chsh,
                    ExperimentKind::sequential, ExperimentKind::counterfactual,
                    ExperimentKind::meas_dep, ExperimentKind::nonlocality,
                    ExperimentKind::psi_ontic, ExperimentKind::noncommutativity,
                    ExperimentKind::conspiracy}) {
    ExperimentConfig c;
    c.experiment = kind;
    c.runs = kind == ExperimentKind::conspiracy ? 10000 : 1000;
    c.bootstrap_replicates = 100;
    c.apparatus_count = 4;
    const auto out = execute(c);
    EXPECT_EQ(out.report.at("experiment"), to_string(kind));
    EXPECT_FALSE(out.checks.empty()) << to_string(kind);
    EXPECT_FALSE(out.summary.empty());
    EXPECT_FALSE(out.csv_rows.empty()) << to_string(kind);
    for (const auto& row : out.csv_rows) EXPECT_EQ(row.size(), csv_header().size());
  }
}
