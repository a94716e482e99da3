#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "levyscale/commands.hpp"
#include "levyscale/estimators.hpp"
#include "levyscale/scale_series.hpp"

using namespace levyscale;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "scale");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const std::string& name, const nlohmann::json& j) {
  fs::create_directories("cli_cfg");
  const std::string path = "cli_cfg/" + name + ".json";
  std::ofstream(path) << j.dump(2);
  return path;
}

nlohmann::json exp_config() {
  return nlohmann::json::parse(R"({
    "model": {"c": 1.5, "D": 0.5, "q": 0.1,
              "jumps": {"kind": "exponential", "rate": 1.0, "mu": 1.0}},
    "laguerre": {"alpha": 1.0, "K": 40},
    "scheme": {"T": 20, "a": 1.0, "rho": 0.49, "c_eps": 1.0, "seed": 5},
    "mc": {"replications": 3, "workers": 2},
    "x_grid": {"min": 0.0, "max": 10.0, "points": 21}
  })");
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      row.push_back(end == cell.c_str() ? NAN : v);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("compute: Brownian curve equals the closed form") {
  auto j = nlohmann::json::parse(R"({
    "model": {"c": 1.0, "sigma": 1.0, "q": 0.1, "jumps": {"kind": "none"}},
    "laguerre": {"alpha": 1.0, "K": 12}, "x_grid": {"min": 0, "max": 10, "points": 11}})");
  const auto cfg = write_config("bm", j);
  REQUIRE(run({"compute", "--config", cfg, "--out", "cli_out/bm"}) == 0);
  const double D = 0.5, g = (-1.0 + std::sqrt(1.0 + 4 * D * 0.1)) / (2 * D), b = 1.0 / D + g;
  for (const auto& r : read_csv("cli_out/bm/w_curve.csv")) {
    const double x = r[0];
    CHECK(std::abs(r[1] - (std::exp(g * x) - std::exp(-b * x)) / (D * (b + g))) <= 1e-12 * std::max(1.0, r[1]));
  }
  const auto m = nlohmann::json::parse(slurp("cli_out/bm/manifest.json"));
  CHECK(m["command"] == "compute");
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(fs::exists("cli_out/bm/coeffs.json"));
}

TEST_CASE("compute --oracle") {
  const auto cfg = write_config("exp", exp_config());
  REQUIRE(run({"compute", "--config", cfg, "--out", "cli_out/exp", "--oracle"}) == 0);
  const auto s = nlohmann::json::parse(slurp("cli_out/exp/oracle_summary.json"));
  CHECK(s["relative_sup_error_talbot"].get<double>() <= 1e-2);
  const auto rows = read_csv("cli_out/exp/w_curve.csv");
  CHECK(rows.size() == 21);
  CHECK(rows[0].size() == 6);
}

TEST_CASE("configuration errors map to exit codes") {
  auto j = exp_config();
  j["x_grid"]["points"] = 0;
  CHECK(run({"compute", "--config", write_config("empty", j)}) == 2);
  j = exp_config();
  j["x_grid"] = {{"min", 5.0}, {"max", 1.0}, {"points", 3}};
  CHECK(run({"compute", "--config", write_config("reversed", j)}) == 2);
  j = exp_config();
  j["model"]["colour"] = "red";
  CHECK(run({"compute", "--config", write_config("unknown", j)}) == 2);
  CHECK(run({"compute", "--config", "cli_cfg/missing.json"}) == 4);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({"compute"}) == 2);
}

TEST_CASE("simulate is reproducible") {
  const auto cfg = write_config("exp", exp_config());
  REQUIRE(run({"simulate", "--config", cfg, "--out", "cli_out/sim1"}) == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--out", "cli_out/sim2"}) == 0);
  for (const char* f : {"grid.csv", "jumps.csv", "observations.json", "manifest.json"}) {
    CHECK(slurp(fs::path("cli_out/sim1") / f) == slurp(fs::path("cli_out/sim2") / f));
  }
  auto j = exp_config();
  j["model"]["jumps"] = {{"kind", "none"}};
  REQUIRE(run({"simulate", "--config", write_config("bm_sim", j), "--out", "cli_out/sim_bm"}) == 0);
  std::ifstream in("cli_out/sim_bm/jumps.csv");
  std::string header, row;
  std::getline(in, header);
  CHECK_FALSE(static_cast<bool>(std::getline(in, row)));
}

TEST_CASE("estimate round trip") {
  const auto cfg = write_config("exp", exp_config());
  REQUIRE(run({"simulate", "--config", cfg, "--out", "cli_out/est"}) == 0);
  REQUIRE(run({"estimate", "--config", cfg, "--out", "cli_out/est"}) == 0);
  const auto r = nlohmann::json::parse(slurp("cli_out/est/report.json"));
  CHECK(r["gamma_hat"].get<double>() > 0.0);
  const auto ci = read_csv("cli_out/est/ci_curve.csv");
  REQUIRE(ci.size() == 21);
  for (const auto& row : ci) {
    CHECK(row[3] <= row[1]);
    CHECK(row[1] <= row[4]);
  }

  // in-process estimate on the same data gives the same numbers
  const auto obs = read_observations("cli_out/est");
  std::vector<double> xs{ci[4][0]};
  const auto rep = estimate_report(obs, 0.1, 1.5, {1.0, 40}, xs);
  CHECK(rep.points[0].W == doctest::Approx(ci[4][1]).epsilon(1e-15));

  // --oracle plugs in the true theta: gamma matches the model root
  REQUIRE(run({"estimate", "--config", cfg, "--out", "cli_out/est_or", "--data", "cli_out/est",
               "--oracle"}) == 0);
  const auto ro = nlohmann::json::parse(slurp("cli_out/est_or/report.json"));
  CHECK(ro["gamma_hat"].get<double>() == doctest::Approx(true_theta(load_config(cfg).model).gamma));
}

TEST_CASE("estimate on jump-free data") {
  auto j = exp_config();
  j["model"]["jumps"] = {{"kind", "none"}};
  const auto cfg = write_config("bm_est", j);
  REQUIRE(run({"simulate", "--config", cfg, "--out", "cli_out/est_bm"}) == 0);
  REQUIRE(run({"estimate", "--config", cfg, "--out", "cli_out/est_bm"}) == 0);
  const auto r = nlohmann::json::parse(slurp("cli_out/est_bm/report.json"));
  CHECK(r["p_hat"].get<double>() == 0.0);
}

TEST_CASE("mc") {
  auto j = exp_config();
  j["mc"]["replications"] = 1;
  const auto cfg = write_config("mc1", j);
  REQUIRE(run({"mc", "--config", cfg, "--out", "cli_out/mc1"}) == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--out", "cli_out/mc1_sim"}) == 0);
  REQUIRE(run({"estimate", "--config", cfg, "--out", "cli_out/mc1_sim"}) == 0);
  const auto rep = nlohmann::json::parse(slurp("cli_out/mc1_sim/report.json"));
  const auto rows = read_csv("cli_out/mc1/mc_replications.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][4] == doctest::Approx(rep["gamma_hat"].get<double>()).epsilon(1e-15));
  CHECK(rows[0][5] == doctest::Approx(rep["p_hat"].get<double>()).epsilon(1e-15));

  const auto cfg3 = write_config("mc3", exp_config());
  REQUIRE(run({"mc", "--config", cfg3, "--out", "cli_out/mc3a"}) == 0);
  setenv("SCALE_WORKERS", "1", 1);
  REQUIRE(run({"mc", "--config", cfg3, "--out", "cli_out/mc3b"}) == 0);
  setenv("SCALE_WORKERS", "zero", 1);
  CHECK(run({"mc", "--config", cfg3, "--out", "cli_out/mc3c"}) == 2);
  unsetenv("SCALE_WORKERS");
  // worker count does not change the numbers
  CHECK(slurp("cli_out/mc3a/mc_replications.csv") == slurp("cli_out/mc3b/mc_replications.csv"));
  const auto s = nlohmann::json::parse(slurp("cli_out/mc3a/mc_summary.json"));
  CHECK(s["coverage"].size() == 21);
  for (const auto& c : s["coverage"]) {
    CHECK(c["coverage_W"].get<double>() >= 0.0);
    CHECK(c["coverage_W"].get<double>() <= 1.0);
  }
  const auto ma = nlohmann::json::parse(slurp("cli_out/mc3a/manifest.json"));
  const auto mb = nlohmann::json::parse(slurp("cli_out/mc3b/manifest.json"));
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["config_hash"] == config_hash(load_config(cfg3)));
  CHECK(mb["seeds"]["workers"] == 1);
}

TEST_CASE("config hash") {
  const auto a = parse_config(exp_config().dump());
  const auto b = parse_config(exp_config().dump(4));
  CHECK(config_hash(a) == config_hash(b));
  auto j = exp_config();
  j["scheme"]["seed"] = 6;
  CHECK(config_hash(parse_config(j.dump())) != config_hash(a));
}
