#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dmd/error.hpp"
#include "dmd/harness/config.hpp"
#include "dmd/harness/csv.hpp"
#include "dmd/harness/harness.hpp"
#include "dmd/harness/problem_io.hpp"
#include "json.hpp"

using namespace dmd;
using namespace dmd::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dmd_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string small_config(const std::string& extra_hyper = "") {
  return "[problem]\nd = 4\nm = 5\n\n[graph]\nparticles = 4\n\n[hyper]\ndt = 0.05\nepochs = 100\n"
         "metrics_every = 50\n" +
         extra_hyper + "\n[run]\nseed = 3\noutput = out\n";
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.0}) {
    CHECK(parse_double(format_double(v), "v") == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("1.0x", "hyper.dt"), ValidationError);
  CHECK_THROWS_WITH(parse_double("", "hyper.dt"), doctest::Contains("hyper.dt"));
  CHECK(parse_long("42", "n") == 42);
  CHECK_THROWS_AS(parse_long("4.2", "n"), ValidationError);
}

TEST_CASE("metrics CSV round-trips") {
  diagnostics::MetricsRecord a;
  a.step = 50;
  a.t = 0.5;
  a.loss_mean = 1.0 / 3.0;
  a.V = 1e-17;
  a.clamped = true;
  diagnostics::MetricsRecord b = a;
  b.step = 100;
  const std::string csv = metrics_csv({a, b});
  CHECK(count_lines(csv) == 3);
  const auto back = parse_metrics_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].loss_mean == a.loss_mean);
  CHECK(back[0].V == a.V);
  CHECK_FALSE(back[0].clamped);  // not part of the CSV schema; the manifest lists clamped steps
  CHECK(back[1].step == 100);
  CHECK(metrics_header(true).rfind("label,", 0) == 0);
}

TEST_CASE("matrix CSV round-trips") {
  const Eigen::MatrixXd m{{1.0, -0.25}, {1e-9, 3.0}};
  CHECK(parse_matrix_csv(matrix_csv(m), "m") == m);
  CHECK_THROWS_AS(parse_matrix_csv("1,2\n3\n", "m"), ValidationError);
}

TEST_CASE("config parsing, rendering and overrides") {
  const RunConfig cfg = parse_config(
      "[problem]\nd = 3\nshared_minimizer = true\n[graph]\ntopology = barbell\nparticles = 6\ncluster_size = 3\n"
      "beta = 0.01\n[algorithm]\nname = epismd\ndual = dual_hessian\n[hyper]\nsigma = 0.1\n[run]\nseed = 9\n"
      "x0 = 1,2,3\n");
  CHECK(cfg.problem.d == 3);
  CHECK(cfg.problem.shared_minimizer);
  CHECK(cfg.graph.topology == graph::TopologyKind::Barbell);
  CHECK(cfg.graph.beta == 0.01);
  CHECK(cfg.algorithm.name == dynamics::Algorithm::Epismd);
  CHECK(cfg.algorithm.dual == DualChoice::DualHessian);
  CHECK(cfg.hyper.sigma == 0.1);
  CHECK(cfg.hyper.dt == 0.01);
  CHECK(cfg.run.x0 == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_NOTHROW(validate(cfg));

  const RunConfig again = parse_config(render_config(cfg));
  for (const std::string& key : config_keys()) {
    INFO(key);
    CHECK(get_value(again, key) == get_value(cfg, key));
  }

  RunConfig c = cfg;
  set_value(c, "hyper.sigma", "0.25");
  CHECK(c.hyper.sigma == 0.25);
  CHECK_THROWS_WITH_AS(set_value(c, "hyper.sgima", "1"), doctest::Contains("hyper.sgima"), ValidationError);
  CHECK_THROWS_AS(set_value(c, "graph.topology", "star"), ValidationError);
  CHECK_THROWS_AS(parse_config("[hyper]\nsgima = 1\n"), ValidationError);
}

TEST_CASE("cross-field validation") {
  RunConfig c;
  c.problem.domain = objectives::Domain::Simplex;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.algorithm.mirror_map = mirror::MapKind::NegativeEntropy;
  CHECK_NOTHROW(validate(c));
  c = {};
  c.algorithm.dual = DualChoice::DualHessian;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = {};
  c.graph.topology = graph::TopologyKind::Barbell;
  c.graph.particles = 9;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = {};
  c.algorithm.mirror_map = mirror::MapKind::Quadratic;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = {};
  c.hyper.dt = -1.0;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("run writes metrics and a manifest that reproduces the run") {
  TempDir tmp("run");
  write(tmp.path / "a.ini", small_config("sigma = 0.1\n"));
  std::ostringstream out, err;
  REQUIRE(cmd_run(tmp.path / "a.ini", {}, out, err) == kOk);
  const fs::path dir = tmp.path / "out";
  const std::string csv = read_file(dir / "metrics.csv");
  CHECK(count_lines(csv) == 100 / 50 + 2);
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["csv_schema"] == kCsvSchemaVersion);
  CHECK(manifest["records"] == 3);
  CHECK(manifest["diverged_at"].is_null());
  CHECK(manifest["clamped_steps"].empty());
  CHECK(manifest["problem_hash"].get<std::string>().size() == 16);

  // Rerunning from the manifest reproduces the CSV byte for byte.
  fs::copy_file(dir / "manifest.json", tmp.path / "m.json");
  CommonOptions o;
  o.out = (tmp.path / "rerun").string();
  REQUIRE(cmd_run(tmp.path / "m.json", o, out, err) == kOk);
  CHECK(read_file(tmp.path / "rerun" / "metrics.csv") == csv);

  // A different seed changes the noise.
  o.out = (tmp.path / "seeded").string();
  o.seed = 4;
  REQUIRE(cmd_run(tmp.path / "a.ini", o, out, err) == kOk);
  CHECK(read_file(tmp.path / "seeded" / "metrics.csv") != csv);
}

TEST_CASE("exit codes") {
  TempDir tmp("codes");
  std::ostringstream out, err;
  write(tmp.path / "bad.ini", small_config("sgima = 0.1\n"));
  CHECK(cmd_run(tmp.path / "bad.ini", {}, out, err) == kConfigError);
  CHECK(err.str().find("hyper.sgima") != std::string::npos);
  CHECK(cmd_run(tmp.path / "missing.ini", {}, out, err) == kIoError);

  write(tmp.path / "boom.ini", "[problem]\nd = 4\nm = 5\n[graph]\nparticles = 4\n[hyper]\ndt = 100\nepochs = 1000\n"
                               "[run]\noutput = boom\n");
  CHECK(cmd_run(tmp.path / "boom.ini", {}, out, err) == kDiverged);
  CHECK_FALSE(fs::exists(tmp.path / "boom" / "metrics.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "boom" / "manifest.json"));
}

TEST_CASE("compare writes one labelled CSV") {
  TempDir tmp("compare");
  write(tmp.path / "eismd.ini", small_config());
  write(tmp.path / "ismd.ini", small_config() + "[algorithm]\nname = ismd\n");
  std::ostringstream out, err;
  CommonOptions o;
  o.out = (tmp.path / "cmp").string();
  REQUIRE(cmd_compare({tmp.path / "eismd.ini", tmp.path / "ismd.ini"}, o, out, err) == kOk);
  const std::string csv = read_file(tmp.path / "cmp" / "compare.csv");
  CHECK(count_lines(csv) == 1 + 2 * 3);
  CHECK(csv.find("\neismd,") != std::string::npos);
  CHECK(csv.find("\nismd,") != std::string::npos);

  write(tmp.path / "slow.ini", "[problem]\nd = 4\nm = 5\n[graph]\nparticles = 4\n[hyper]\ndt = 0.01\nepochs = 100\n");
  CHECK(cmd_compare({tmp.path / "eismd.ini", tmp.path / "slow.ini"}, o, out, err) == kConfigError);
}

TEST_CASE("sweep writes one directory per value and a summary") {
  TempDir tmp("sweep");
  write(tmp.path / "s.ini", small_config());
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(tmp.path / "s.ini", "hyper.sigma", {"0", "0.5"}, 2, {}, out, err) == kOk);
  CHECK(fs::exists(tmp.path / "out" / "hyper.sigma=0" / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "out" / "hyper.sigma=0.5" / "manifest.json"));
  const std::string summary = read_file(tmp.path / "out" / "summary.csv");
  CHECK(count_lines(summary) == 3);
  CHECK(summary.rfind("value,status,final_step,", 0) == 0);
  CHECK(summary.find("\n0.5,ok,100,") != std::string::npos);
  CHECK(cmd_sweep(tmp.path / "s.ini", "hyper.sgima", {"1"}, 1, {}, out, err) == kConfigError);
  write(tmp.path / "long.ini", "[problem]\nd = 4\nm = 5\n[graph]\nparticles = 4\n[hyper]\nepochs = 1000\n[run]\noutput = out\n");
  CHECK(cmd_sweep(tmp.path / "long.ini", "hyper.dt", {"0.05", "100"}, 1, {}, out, err) == kDiverged);
  CHECK(read_file(tmp.path / "out" / "summary.csv").find("\n100,diverged,") != std::string::npos);
}

TEST_CASE("graph-info prints the spectral constants") {
  TempDir tmp("graph");
  write(tmp.path / "g.ini", "[graph]\nparticles = 4\nbeta = 2\n");
  std::ostringstream out, err;
  REQUIRE(cmd_graph_info(tmp.path / "g.ini", {}, out, err) == kOk);
  const std::string s = out.str();
  CHECK(s.find("particles 4\n") != std::string::npos);
  CHECK(s.find("edges 4\n") != std::string::npos);
  CHECK(s.find("kappa_beta_N 4\n") != std::string::npos);
  write(tmp.path / "one.ini", "[graph]\nparticles = 1\n");
  std::ostringstream out1, err1;
  CHECK(cmd_graph_info(tmp.path / "one.ini", {}, out1, err1) == kOk);
  CHECK(err1.str().find("warning") != std::string::npos);
}

TEST_CASE("problem bundles round-trip") {
  TempDir tmp("bundle");
  write(tmp.path / "p.ini", small_config());
  std::ostringstream out, err;
  CommonOptions o;
  o.out = (tmp.path / "bundle").string();
  REQUIRE(cmd_problem_gen(tmp.path / "p.ini", o, out, err) == kOk);
  const RunConfig cfg = load_config(tmp.path / "p.ini");
  const auto generated = build_problem(cfg);
  const auto loaded = read_bundle(tmp.path / "bundle");
  CHECK(problem_hash(loaded) == problem_hash(generated));
  for (int i = 0; i < 4; ++i) {
    CHECK(loaded.block(i).q() == generated.block(i).q());
    CHECK(loaded.block(i).b() == generated.block(i).b());
  }

  // A run over the bundle matches a run over the generator.
  write(tmp.path / "b.ini", small_config() + "[problem]\nbundle = bundle\n");
  CHECK_THROWS_AS(parse_config(read_file(tmp.path / "b.ini")), ValidationError);
  write(tmp.path / "b.ini", "[problem]\nd = 4\nm = 5\nbundle = bundle\n[graph]\nparticles = 4\n[hyper]\ndt = 0.05\n"
                            "epochs = 100\nmetrics_every = 50\n[run]\nseed = 3\noutput = viabundle\n");
  write(tmp.path / "g.ini", small_config());
  REQUIRE(cmd_run(tmp.path / "b.ini", {}, out, err) == kOk);
  REQUIRE(cmd_run(tmp.path / "g.ini", {}, out, err) == kOk);
  CHECK(read_file(tmp.path / "viabundle" / "metrics.csv") == read_file(tmp.path / "out" / "metrics.csv"));
}

TEST_CASE("oracle prints the optimum") {
  TempDir tmp("oracle");
  write(tmp.path / "o.ini", small_config());
  std::ostringstream out, err;
  REQUIRE(cmd_oracle(tmp.path / "o.ini", {}, out, err) == kOk);
  CHECK(out.str().rfind("x_star ", 0) == 0);
  CHECK(out.str().find("interior true") != std::string::npos);
}
