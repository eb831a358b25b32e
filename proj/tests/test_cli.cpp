#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "finsdet/cli.hpp"
#include "finsdet/config.hpp"
#include "finsdet/json_out.hpp"

using namespace finsdet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("finsdet_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

std::string write_config(const TempDir& dir, const std::string& name,
                         const std::string& body) {
  const fs::path p = dir.path / name;
  std::ofstream f(p);
  f << body;
  return p.string();
}

nlohmann::json load_json(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

const char* kValidate2d = R"(# constant drift on a square
[meta]
label = demo
[field]
dim = 2
domain_min = -2 -2
domain_max = 2 2
beta_1 = 0.5
[validate]
samples = 64
seed = 7
)";

}  // namespace

TEST_CASE("config parser: sections, types, errors") {
  const Config cfg = Config::parse(
      "# comment\n[field]\ndim = 2\nx = 1 2\nname = hi\n[other]\nv = 3.5\n");
  CHECK(cfg.get_int("field", "dim") == 2);
  CHECK(cfg.get_vector("field", "x", 2)[1] == 2.0);
  CHECK(cfg.get_string("field", "name") == "hi");
  CHECK(cfg.get_double("other", "v") == 3.5);
  CHECK(cfg.get_double("other", "missing", 1.5) == 1.5);
  CHECK(!cfg.has("field", "nope"));

  CHECK_THROWS_AS(Config::parse("dim = 2\n"), ConfigError);   // no section
  CHECK_THROWS_AS(Config::parse("[a\nk = v\n"), ConfigError); // unterminated
  CHECK_THROWS_AS(Config::parse("[a]\njunk\n"), ConfigError); // no '='
  CHECK_THROWS_AS(Config::parse("[a]\nk = 1\nk = 2\n"), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("field", "name"), ConfigError);
  CHECK_THROWS_AS(cfg.get_vector("field", "x", 3), ConfigError);
}

TEST_CASE("field_from_config builds expression and default entries") {
  const Config cfg = Config::parse(R"([field]
dim = 2
domain_min = -1 -1
domain_max = 1 1
a_1_1 = 1 + 0.1*x1^2
beta_1 = 0.25*cos(x2)
)");
  const RandersField f = field_from_config(cfg, "field");
  CHECK(f.dim() == 2);
  Vec x(2);
  x << 0.5, 0.0;
  CHECK(f.metric_at(x)(0, 0) == doctest::Approx(1.025));
  CHECK(f.metric_at(x)(1, 1) == doctest::Approx(1.0));  // default identity
  CHECK(f.metric_at(x)(0, 1) == 0.0);
  CHECK(f.beta_at(x)(0) == doctest::Approx(0.25));
  CHECK(f.beta_at(x)(1) == 0.0);  // default zero

  CHECK_THROWS_AS(
      field_from_config(
          Config::parse("[field]\ndim = 2\ndomain_min = -1 -1\n"
                        "domain_max = 1 1\nbeta_1 = x3\n"),
          "field"),
      ConfigError);
}

TEST_CASE("validate verb writes deterministic artifacts and checks") {
  TempDir dir;
  const std::string cfg = write_config(dir, "v.ini", kValidate2d);
  CliOptions opt;
  opt.verb = "validate";
  opt.config_path = cfg;
  opt.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(opt) == kOk);

  const nlohmann::json j = load_json(opt.out_dir + "/demo.json");
  CHECK(j["verb"] == "validate");
  CHECK(j["pass"] == true);
  CHECK(j["worst_norm"].get<double>() == doctest::Approx(0.5));
  CHECK(j["schema_version"] == 1);
  CHECK(j.contains("config_hash"));
  CHECK(j["checks"].size() == 2);
  CHECK(fs::exists(opt.out_dir + "/demo.meta.json"));

  // second run hits the cache and reproduces the bytes
  const std::string first = read_file(opt.out_dir + "/demo.json");
  CHECK(run_experiment(opt) == kOk);
  CHECK(read_file(opt.out_dir + "/demo.json") == first);
  const nlohmann::json meta = load_json(opt.out_dir + "/demo.meta.json");
  CHECK(meta["cache"] == "hit");

  // a fresh output directory also reproduces the bytes
  CliOptions opt2 = opt;
  opt2.out_dir = (dir.path / "out2").string();
  CHECK(run_experiment(opt2) == kOk);
  CHECK(read_file(opt2.out_dir + "/demo.json") == first);
}

TEST_CASE("exit codes: parse, input, field, io") {
  TempDir dir;
  CliOptions opt;
  opt.verb = "validate";
  opt.out_dir = (dir.path / "out").string();

  opt.config_path = (dir.path / "missing.ini").string();
  CHECK(run_experiment(opt) == kIo);

  opt.config_path = write_config(dir, "bad_syntax.ini", "[field\ndim=2\n");
  CHECK(run_experiment(opt) == kConfig);

  opt.config_path = write_config(dir, "bad_expr.ini",
                                 "[field]\ndim = 2\ndomain_min = -1 -1\n"
                                 "domain_max = 1 1\nbeta_1 = sin(x9)\n");
  CHECK(run_experiment(opt) == kConfig);

  opt.config_path = write_config(dir, "bad_dim.ini",
                                 "[field]\ndim = 2\ndomain_min = -1\n"
                                 "domain_max = 1 1\n");
  CHECK(run_experiment(opt) == kConfig);

  opt.config_path = write_config(
      dir, "unknown_key.ini",
      std::string(kValidate2d) + "[validate]\nbogus = 1\n");
  CHECK(run_experiment(opt) == kConfig);

  // interacting composition of over-norm factors is a field error
  opt.verb = "compose";
  opt.config_path = write_config(dir, "compose_bad.ini", R"([field]
dim = 1
domain_min = -1
domain_max = 1
beta_1 = 0.8
[field2]
dim = 1
domain_min = -1
domain_max = 1
beta_1 = 0.8
[compose]
mode = interacting
)");
  CHECK(run_experiment(opt) == kFieldInvalid);

  opt.verb = "bogus";
  CHECK(run_experiment(opt) == kUsage);
}

TEST_CASE("flow verb emits a trajectory CSV with the analytic endpoint") {
  TempDir dir;
  const std::string cfg = write_config(dir, "f.ini", R"([meta]
label = drift
[field]
dim = 2
domain_min = -2 -2
domain_max = 2 2
beta_1 = 0.5
[flow]
x0 = 0 0
t_final = 1
dt = 1e-3
)");
  CliOptions opt;
  opt.verb = "flow";
  opt.config_path = cfg;
  opt.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(opt) == kOk);

  const nlohmann::json j = load_json(opt.out_dir + "/drift.json");
  CHECK(j["endpoint"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(j["endpoint"][1].get<double>()) <= 1e-12);
  CHECK(j["bounds"]["pass"] == true);

  // CSV: header plus 1001 rows; final row t = 1, x1 = 1, v1 = 1
  const std::string csv = read_file(opt.out_dir + "/drift.csv");
  CHECK(csv.rfind("t,x1,x2,v1,v2\n", 0) == 0);
  const size_t last_line = csv.rfind('\n', csv.size() - 2);
  const std::string final_row = csv.substr(last_line + 1);
  CHECK(final_row.rfind("1,", 0) == 0);
}

TEST_CASE("spectrum verb: integer eigenvalue ladder in the CSV") {
  TempDir dir;
  const std::string cfg = write_config(dir, "s.ini", R"([meta]
label = ladder
[field]
dim = 1
domain_min = 0
domain_max = 6.283185307179586
periodic = 1
beta_1 = 0.5
[spectrum]
n = 128
k0 = 8
)");
  CliOptions opt;
  opt.verb = "spectrum";
  opt.config_path = cfg;
  opt.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(opt) == kOk);

  const nlohmann::json j = load_json(opt.out_dir + "/ladder.json");
  CHECK(j["raw"]["min"].get<double>() == doctest::Approx(-64.0));
  CHECK(j["raw"]["max"].get<double>() == doctest::Approx(63.0));
  CHECK(j["averaged"]["min"].get<double>() == doctest::Approx(-4.0));
  for (const auto& c : j["checks"]) CHECK(c["pass"] == true);

  // 128 eigenvalues equal to the integers -64..63
  std::istringstream csv(read_file(opt.out_dir + "/ladder.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "index,eigenvalue");
  int idx = 0;
  while (std::getline(csv, line)) {
    const size_t comma = line.find(',');
    const double v = std::stod(line.substr(comma + 1));
    CHECK(std::abs(v - (idx - 64)) <= 1e-8);
    ++idx;
  }
  CHECK(idx == 128);
}

TEST_CASE("eval verb: norm and Legendre dual") {
  TempDir dir;
  const std::string cfg = write_config(dir, "e.ini", R"([meta]
label = evaldemo
[field]
dim = 2
domain_min = -2 -2
domain_max = 2 2
beta_1 = 0.5
[eval]
x = 0 0
y = 1 0
p = 1 0
)");
  CliOptions opt;
  opt.verb = "eval";
  opt.config_path = cfg;
  opt.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(opt) == kOk);
  const nlohmann::json j = load_json(opt.out_dir + "/evaldemo.json");
  CHECK(j["F"].get<double>() == doctest::Approx(1.5));
  // dual of the constant-drift norm: (|p| - b p1) / (1 - b^2) = 2/3
  CHECK(j["dual"]["F_star"].get<double>() ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  for (const auto& c : j["checks"]) CHECK(c["pass"] == true);
}

TEST_CASE("report aggregates artifacts; empty directory is an error") {
  TempDir dir;
  CliOptions report;
  report.verb = "report";
  report.out_dir = (dir.path / "out").string();
  fs::create_directories(report.out_dir);
  CHECK(run_experiment(report) == kNoArtifacts);
  CHECK(fs::exists(report.out_dir + "/summary.json"));
  {
    const nlohmann::json s = load_json(report.out_dir + "/summary.json");
    CHECK(s["artifact_count"] == 0);
    CHECK(s["all_pass"] == false);
  }

  CliOptions opt;
  opt.verb = "validate";
  opt.config_path = write_config(dir, "v.ini", kValidate2d);
  opt.out_dir = report.out_dir;
  CHECK(run_experiment(opt) == kOk);
  CHECK(run_experiment(report) == kOk);
  const nlohmann::json s = load_json(report.out_dir + "/summary.json");
  CHECK(s["artifact_count"] == 1);
  CHECK(s["artifacts"].contains("demo"));
  CHECK(s["artifacts"]["demo"]["pass"] == true);
  CHECK(s["all_pass"] == true);

  // unreadable artifact: listed under errors, partial summary, nonzero exit
  std::ofstream bad(report.out_dir + "/broken.json");
  bad << "{ not json";
  bad.close();
  CHECK(run_experiment(report) == kIo);
  const nlohmann::json s2 = load_json(report.out_dir + "/summary.json");
  CHECK(s2["errors"].size() == 1);
  CHECK(s2["artifact_count"] == 1);
}

TEST_CASE("tabulated grid fields work through the config") {
  TempDir dir;
  {
    GridData g;
    g.dim = 2;
    g.shape = {5, 5};
    g.origin = {-1.0, -1.0};
    g.spacing = {0.5, 0.5};
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        g.values.push_back(0.2 + 0.05 * (-1.0 + 0.5 * i));
    std::ofstream f(dir.path / "beta1.grid");
    f << g.serialize();
  }
  const std::string cfg = write_config(dir, "g.ini", R"([meta]
label = tabulated
[field]
dim = 2
domain_min = -1 -1
domain_max = 1 1
beta_1 = @grid beta1.grid
[validate]
samples = 50
seed = 3
)");
  CliOptions opt;
  opt.verb = "validate";
  opt.config_path = cfg;
  opt.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(opt) == kOk);
  const nlohmann::json j = load_json(opt.out_dir + "/tabulated.json");
  CHECK(j["pass"] == true);
  // linear data: |beta| stays within [0.1, 0.3] on the box
  CHECK(j["worst_norm"].get<double>() <= 0.3 + 1e-12);
}

TEST_CASE("json writer output is sorted and round-trip exact") {
  Json obj = Json::object();
  obj.set("zeta", 0.1);
  obj.set("alpha", 3);
  obj.set("mid", "s");
  const std::string s = obj.dump();
  CHECK(s.find("alpha") < s.find("mid"));
  CHECK(s.find("mid") < s.find("zeta"));
  const nlohmann::json parsed = nlohmann::json::parse(s);
  CHECK(parsed["zeta"].get<double>() == 0.1);
}
