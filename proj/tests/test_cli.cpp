#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "prodrm/cli.hpp"
#include "prodrm/errors.hpp"

using namespace prodrm;
using namespace prodrm::cli;
using doctest::Approx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("prodrm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int prodrm_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(PRODRM_CLI_PATH) + " " + args + " --out " + out.string() + " > " +
                          (out / "stdout.txt").string() + " 2> " + (out / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.command = Command::KernelEval;
  c.ensemble = {Model::C, 6, 3, 2, 123456789012345ull, 0};
  scalings::RegimeSpec r;
  r.regime = scalings::Regime::Critical;
  r.q = 0.3;
  r.theta = 0.1;
  c.regime = r;
  c.replicas = 17;
  c.bin_width = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.output_path = "/tmp/x";
  c.threads = 3;
  c.tolerances = {{"A7", 0.07}};
  c.points = {cplx(0.1, -1.0 / 3.0), cplx(2.0, 0.0)};
  c.limit = LimitRequest{"critical_bulk", 2.5, 0.0};
  c.duality_check = true;
  c.only = {"duality", "A1"};
  c.replica_scale = 0.5;
  c.cells = {{1, 256}, {48, 48}};
  RunConfig back = from_json(json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK(back.bin_width == c.bin_width);
  CHECK(back.points[0] == c.points[0]);
  CHECK(back.ensemble.seed == c.ensemble.seed);

  RunConfig d;
  CHECK(from_json(to_json(d)) == d);
  CHECK(from_json(json::object()) == d);
}

TEST_CASE("config validation") {
  RunConfig c;
  c.replicas = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.ensemble.N = kMaxN + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.points.assign(kMaxPoints + 1, cplx(0.0));
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.only = {"nonsense"};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.limit = LimitRequest{"fancy"};
  CHECK_THROWS(c.validate());
  CHECK_THROWS_AS(command_from_string("plot"), ConfigError);
  CHECK(command_from_string(to_string(Command::KernelEval)) == Command::KernelEval);
}

TEST_CASE("sample: unitary factors stay on the circle") {
  auto out = scratch("unitary");
  REQUIRE(prodrm_cli("sample --model B -N 6 -M 50 -L 0 --replicas 3 --seed 4", out) == 0);
  auto rows = csv_rows(out / "eigenvalues.csv");
  REQUIRE(rows.size() == 19);
  CHECK(rows[0] == std::vector<std::string>{"replica", "index", "log_modulus", "phase"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][2])) < 1e-8);
  auto summary = json::parse(slurp(out / "sample_summary.json"));
  CHECK(summary["seed"] == 4);
  CHECK(summary["replicas"] == 3);
  CHECK(summary["spec"]["model"] == "B");
}

TEST_CASE("sample: reruns are byte-identical and independent of threads") {
  auto a = scratch("rerun_a"), b = scratch("rerun_b"), t = scratch("rerun_t");
  const std::string args = "sample --model A -N 8 -M 3 --replicas 10 --seed 99";
  REQUIRE(prodrm_cli(args, a) == 0);
  REQUIRE(prodrm_cli(args, b) == 0);
  REQUIRE(prodrm_cli(args + " --threads 3", t) == 0);
  const std::string csv = slurp(a / "eigenvalues.csv");
  CHECK(csv == slurp(b / "eigenvalues.csv"));
  CHECK(csv == slurp(t / "eigenvalues.csv"));
  CHECK(csv_rows(a / "eigenvalues.csv").size() == 81);
  // full precision
  auto row = csv_rows(a / "eigenvalues.csv")[1];
  const bool full = row[2].find_first_of("eE") != std::string::npos || row[2].size() >= 17;
  CHECK(full);
}

TEST_CASE("sample: config file with flag overrides") {
  auto out = scratch("config");
  json cfg = {{"command", "sample"}, {"ensemble", {{"model", "A"}, {"N", 4}, {"M", 2}, {"seed", 1}}}, {"replicas", 2}};
  std::ofstream(out / "cfg.json") << cfg.dump();
  REQUIRE(prodrm_cli("sample --config " + (out / "cfg.json").string() + " -N 5", out) == 0);
  CHECK(csv_rows(out / "eigenvalues.csv").size() == 11);
}

TEST_CASE("kernel-eval") {
  auto out = scratch("keval");
  REQUIRE(prodrm_cli("kernel-eval --model A -M 1 -N 1 --point 0", out) == 0);
  auto j = json::parse(slurp(out / "kernel_eval.json"));
  CHECK(j["points"][0]["density"].get<double>() == Approx(1.0 / std::numbers::pi).epsilon(1e-10));

  REQUIRE(prodrm_cli("kernel-eval --model A -M 1 -N 8 --point 0 --point 1,0.5 --limit critical_bulk --beta 1", out) == 0);
  j = json::parse(slurp(out / "kernel_eval.json"));
  CHECK(j["correlation"]["n"] == 2);
  CHECK(j["points"][0]["limit"].get<double>() == Approx(0.3183099).epsilon(1e-7));
  CHECK(j["limit"]["kernel"].get<std::string>().find("critical") != std::string::npos);

  REQUIRE(prodrm_cli("kernel-eval --duality-check --limit critical_bulk --beta 0.7", out) == 0);
  j = json::parse(slurp(out / "kernel_eval.json"));
  CHECK(j["duality"]["max_residual"].get<double>() < 1e-10);
  CHECK(j["duality"]["evaluations"].get<int>() > 0);

  REQUIRE(prodrm_cli("kernel-eval --model A -M 1 -N 256 --regime subcritical --u 0.5,0 --point 0.2,0.1", out) == 0);
  j = json::parse(slurp(out / "kernel_eval.json"));
  CHECK(j["points"][0]["unfolded_density"].get<double>() == Approx(1.0 / std::numbers::pi).epsilon(0.03));
  CHECK(j["points"][0]["predicted"].get<double>() == Approx(1.0 / std::numbers::pi));
}

TEST_CASE("verify: single criterion, overrides and the bias hook") {
  auto out = scratch("verify");
  REQUIRE(prodrm_cli("verify --only duality", out) == 0);
  auto j = json::parse(slurp(out / "verify_report.json"));
  REQUIRE(j["criteria"].size() == 1);
  CHECK(j["criteria"][0]["id"] == "A3");
  CHECK(j["pass"] == true);

  // an impossible threshold makes the run fail with exit 1
  CHECK(prodrm_cli("verify --only A3 --tolerance A3=1e-30", out) == 1);

  // a 5% bias in the Ginibre bulk kernel is caught by the crossover criterion
  CHECK(prodrm_cli("verify --only crossovers --test-ginibre-bias 0.05", out) == 1);
  j = json::parse(slurp(out / "verify_report.json"));
  CHECK(j["criteria"][0]["id"] == "A4");
  CHECK(j["criteria"][0]["pass"] == false);
  CHECK(j["ginibre_bulk_bias"].get<double>() == Approx(0.05));
  // duality does not involve the Ginibre kernel
  CHECK(prodrm_cli("verify --only A3 --test-ginibre-bias 0.05", out) == 0);
}

TEST_CASE("bad input gives exit code 2") {
  auto out = scratch("bad");
  CHECK(prodrm_cli("sample --model Q", out) == kExitConfig);
  CHECK(prodrm_cli("sample -N 0", out) == kExitConfig);
  CHECK(prodrm_cli("sample -N 5000", out) == kExitConfig);
  CHECK(prodrm_cli("verify --only A42", out) == kExitConfig);
  CHECK(prodrm_cli("frobnicate", out) == kExitConfig);
  std::ofstream(out / "broken.json") << "{ not json";
  CHECK(prodrm_cli("sample --config " + (out / "broken.json").string(), out) == kExitConfig);
  CHECK(prodrm_cli("sample --config " + (out / "missing.json").string(), out) != 0);
}

TEST_CASE("scan on a small grid") {
  auto out = scratch("scan");
  REQUIRE(prodrm_cli("scan --cell 1,64 --cell 0,4 --replicas 20 --seed 3", out) == kExitConfig);
  REQUIRE(prodrm_cli("scan --cell 1,64 --cell 64,4 --replicas 200 --seed 3", out) == 0);
  auto rows = csv_rows(out / "scan.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"M", "N", "regime", "beta", "ginibre", "critical", "gaussian", "noise",
                                            "best", "error"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 10);
    CHECK(rows[i][9].empty());
    for (int c = 4; c <= 7; ++c) CHECK(std::stod(rows[i][c]) >= 0.0);
  }
  CHECK(rows[1][8] == "ginibre");
}
