#include "levyscale/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <boost/version.hpp>
#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"
#include "levyscale/errors.hpp"
#include "levyscale/estimators.hpp"
#include "levyscale/mc.hpp"
#include "levyscale/oracle.hpp"
#include "levyscale/scale_series.hpp"
#include "levyscale/simulator.hpp"

namespace levyscale {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::string prepare_dir(const ExperimentConfig& cfg, const std::string& out_dir) {
  const std::string dir = out_dir.empty() ? cfg.output.directory : out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg, const ordered_json& seeds,
                    const std::vector<std::string>& files) {
  ordered_json m;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["config"] = nlohmann::json::parse(canonical_json(cfg));
  m["versions"] = {
      {"levyscale", kVersion},
      {"boost", BOOST_LIB_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
      {"rng", "philox4x32-10"}};
  m["seeds"] = seeds;
  m["files"] = files;
  write_text(fs::path(dir) / "manifest.json", m.dump(2));
}

ordered_json coeffs_json(const CoefficientSet& c) {
  ordered_json j;
  j["laguerre"] = {{"alpha", c.params.alpha}, {"K", c.params.K}};
  j["theta"] = {{"c", c.theta.c}, {"D", c.theta.D}, {"gamma", c.theta.gamma},
                {"beta", c.theta.beta()}};
  j["p"] = c.p;
  j["a_f"] = c.a_f;
  j["a_F"] = c.a_F;
  j["a_G"] = c.a_G;
  j["solve_residual"] = c.solve_residual;
  return j;
}

int workers_from_env(int configured) {
  if (const char* env = std::getenv("SCALE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("SCALE_WORKERS must be a positive integer");
    }
    return static_cast<int>(v);
  }
  return configured;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  return exit_numeric;
}

int cmd_compute(const ExperimentConfig& cfg, const std::string& out_dir, bool with_oracle) {
  const std::string dir = prepare_dir(cfg, out_dir);
  const ScaleApprox approx(cfg.model, cfg.laguerre);
  const auto xs = cfg.x_grid.values();
  std::vector<std::string> files;

  std::vector<oracle::Inversion> inv(xs.size());
  const auto kind = cfg.closed_form_kind();
  double sup_err = 0.0, sup_w = 0.0, sup_closed = 0.0;
  int flagged = 0;
  if (with_oracle) {
    const double w0 = cfg.model.D > 0.0 ? 0.0 : 1.0 / cfg.model.c;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] > 0.0) {
        inv[i] = oracle::laplace_invert_scale(cfg.model, cfg.model.q, xs[i]);
      } else {
        inv[i].value = w0;
      }
      flagged += inv[i].flagged;
      sup_err = std::max(sup_err, std::abs(approx.W(xs[i]) - inv[i].value));
      sup_w = std::max(sup_w, std::abs(inv[i].value));
      if (kind) {
        sup_closed = std::max(sup_closed,
                              std::abs(approx.W(xs[i]) -
                                       oracle::closed_form_W(*kind, cfg.model, cfg.model.q, xs[i])));
      }
    }
  }

  if (cfg.output.csv) {
    std::ofstream out(fs::path(dir) / "w_curve.csv");
    if (!out) throw IoError("cannot open w_curve.csv in " + dir);
    out << std::setprecision(17) << "x,W_K,Z_K";
    if (with_oracle) out << ",W_talbot,W_closed,err_estimate";
    out << '\n';
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out << xs[i] << ',' << approx.W(xs[i]) << ',' << approx.Z(xs[i]);
      if (with_oracle) {
        out << ',' << inv[i].value << ',';
        if (kind) out << oracle::closed_form_W(*kind, cfg.model, cfg.model.q, xs[i]);
        out << ',' << inv[i].error_estimate;
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed: w_curve.csv");
    files.push_back("w_curve.csv");
  }
  if (cfg.output.json) {
    write_text(fs::path(dir) / "coeffs.json", coeffs_json(approx.coeffs()).dump(2));
    files.push_back("coeffs.json");
  }
  if (with_oracle) {
    ordered_json s;
    s["sup_abs_error_talbot"] = sup_err;
    s["sup_W_talbot"] = sup_w;
    s["relative_sup_error_talbot"] = sup_w > 0.0 ? sup_err / sup_w : 0.0;
    s["flagged_points"] = flagged;
    if (kind) s["sup_abs_error_closed"] = sup_closed;
    write_text(fs::path(dir) / "oracle_summary.json", s.dump(2));
    files.push_back("oracle_summary.json");
    std::cout << "sup |W_K - W_talbot| = " << sup_err << " (relative "
              << (sup_w > 0.0 ? sup_err / sup_w : 0.0) << ")\n";
  }
  write_manifest(dir, "compute", cfg, {{"seed", cfg.scheme.seed}}, files);
  return exit_ok;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
  const std::string dir = prepare_dir(cfg, out_dir);
  const auto obs = simulate(cfg.model, cfg.sampling(), cfg.scheme.seed, 0);
  write_observations(obs, dir);
  write_manifest(dir, "simulate", cfg, {{"seed", cfg.scheme.seed}, {"stream", 0}},
                 {"grid.csv", "jumps.csv", "observations.json"});
  return exit_ok;
}

int cmd_estimate(const ExperimentConfig& cfg, const std::string& out_dir,
                 const std::string& data_dir, bool with_oracle) {
  const std::string dir = prepare_dir(cfg, out_dir);
  const auto obs = read_observations(data_dir.empty() ? dir : data_dir);
  EstimateOptions opts;
  opts.T_est = cfg.T_est;
  opts.ci_level = cfg.ci_level;
  if (with_oracle) opts.theta_override = true_theta(cfg.model);
  const auto xs = cfg.x_grid.values();
  const auto report = estimate_report(obs, cfg.model.q, cfg.model.c, cfg.laguerre, xs, opts);
  std::vector<std::string> files;
  const auto json_path = fs::path(dir) / "report.json";
  if (cfg.output.csv) {
    write_report(report, json_path.string(), (fs::path(dir) / "ci_curve.csv").string());
    if (cfg.output.json) files.push_back("report.json");
    else fs::remove(json_path);
    files.push_back("ci_curve.csv");
  } else if (cfg.output.json) {
    write_text(json_path, report_json(report));
    files.push_back("report.json");
  }
  if (report.degenerate) std::cerr << "warning: " << report.note << '\n';
  write_manifest(dir, "estimate", cfg, {{"seed", obs.seed}, {"stream", obs.stream}}, files);
  return exit_ok;
}

int cmd_mc(const ExperimentConfig& cfg, const std::string& out_dir) {
  const std::string dir = prepare_dir(cfg, out_dir);
  McConfig mc;
  mc.model = cfg.model;
  mc.params = cfg.laguerre;
  mc.scheme = cfg.sampling();
  mc.seed = cfg.scheme.seed;
  mc.replications = cfg.mc.replications;
  mc.workers = workers_from_env(cfg.mc.workers);
  mc.xs = cfg.x_grid.values();
  mc.options.T_est = cfg.T_est;
  mc.options.ci_level = cfg.ci_level;
  const auto result = run_mc(mc);

  std::vector<std::string> files;
  const std::string suffix = result.failed ? ".partial" : "";
  if (cfg.output.csv || result.failed) {
    write_mc_table(result, (fs::path(dir) / ("mc_replications" + suffix + ".csv")).string());
    files.push_back("mc_replications" + suffix + ".csv");
  }
  if (cfg.output.json || result.failed) {
    write_text(fs::path(dir) / ("mc_summary" + suffix + ".json"), mc_summary_json(result));
    files.push_back("mc_summary" + suffix + ".json");
  }
  write_manifest(dir, "mc", cfg,
                 {{"seed", cfg.scheme.seed},
                  {"streams", {0, cfg.mc.replications - 1}},
                  {"workers", mc.workers}},
                 files);
  if (result.failed) {
    std::cerr << "error: " << result.failure << '\n';
    return exit_numeric;
  }
  return exit_ok;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Laguerre-series q-scale functions and their estimation"};
  app.require_subcommand(1);
  std::string config_path, out_dir, data_dir;
  bool with_oracle = false;

  auto* compute = app.add_subcommand("compute", "true W_K / Z_K curves and coefficients");
  auto* sim = app.add_subcommand("simulate", "simulate one observation set");
  auto* est = app.add_subcommand("estimate", "estimate W_K / Z_K with confidence intervals");
  auto* mc = app.add_subcommand("mc", "Monte Carlo study of the estimators");
  for (auto* sub : {compute, sim, est, mc}) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
  }
  compute->add_flag("--oracle", with_oracle, "add Laplace-inversion oracle columns");
  est->add_flag("--oracle", with_oracle, "replace theta_hat by the true parameters");
  est->add_option("--data", data_dir, "observation directory (default: output directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    const auto cfg = load_config(config_path);
    if (compute->parsed()) return cmd_compute(cfg, out_dir, with_oracle);
    if (sim->parsed()) return cmd_simulate(cfg, out_dir);
    if (est->parsed()) return cmd_estimate(cfg, out_dir, data_dir, with_oracle);
    return cmd_mc(cfg, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace levyscale
