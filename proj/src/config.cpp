#include "levyscale/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "levyscale/errors.hpp"

namespace levyscale {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double num(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

double need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
  return num(obj, key, 0.0, where);
}

long long integer(const json& obj, const char* key, long long fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long long>();
}

JumpMeasure parse_jumps(const json& j) {
  const std::string where = "model.jumps";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError(where + ".kind is required");
  }
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "none") {
      reject_unknown(j, {"kind"}, where);
      return JumpMeasure::none();
    }
    if (kind == "exponential") {
      reject_unknown(j, {"kind", "rate", "mu"}, where);
      return JumpMeasure::exponential(need(j, "rate", where), need(j, "mu", where));
    }
    if (kind == "compound_gamma") {
      reject_unknown(j, {"kind", "rate", "shape", "scale"}, where);
      return JumpMeasure::compound_gamma(need(j, "rate", where), need(j, "shape", where),
                                         need(j, "scale", where));
    }
    if (kind == "gamma_subordinator") {
      reject_unknown(j, {"kind", "shape", "rate"}, where);
      return JumpMeasure::gamma_subordinator(need(j, "shape", where),
                                             need(j, "rate", where));
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("unknown jump kind '" + kind + "'");
}

LevyModel model_from(const json& m) {
  const std::string where = "model";
  reject_unknown(m, {"x0", "c", "sigma", "D", "q", "jumps"}, where);
  LevyModel model;
  model.x0 = num(m, "x0", 0.0, where);
  model.c = need(m, "c", where);
  if (m.contains("sigma") && m.contains("D")) {
    throw ConfigError("model: give sigma or D, not both");
  }
  if (m.contains("sigma")) {
    const double s = num(m, "sigma", 0.0, where);
    if (s < 0.0) throw ConfigError("model.sigma must be >= 0");
    model.D = 0.5 * s * s;
  } else {
    model.D = num(m, "D", 0.0, where);
  }
  model.q = num(m, "q", 0.0, where);
  model.jumps = m.contains("jumps") ? parse_jumps(m.at("jumps")) : JumpMeasure::none();
  if (!(model.c > 0.0)) throw ConfigError("model.c must be > 0");
  try {
    model.validate(true);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return model;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

json jumps_json(const JumpMeasure& nu) {
  switch (nu.kind()) {
    case JumpKind::none:
      return {{"kind", "none"}};
    case JumpKind::compound_poisson_exponential:
      return {{"kind", "exponential"}, {"rate", nu.rate()}, {"mu", nu.mu()}};
    case JumpKind::compound_poisson_gamma:
      return {{"kind", "compound_gamma"},
              {"rate", nu.rate()},
              {"shape", nu.shape()},
              {"scale", nu.scale()}};
    case JumpKind::gamma_subordinator:
      return {{"kind", "gamma_subordinator"}, {"shape", nu.shape()}, {"rate", nu.rate()}};
  }
  return {};
}

}  // namespace

std::vector<double> XGrid::values() const {
  std::vector<double> xs;
  if (points == 1) return {min};
  for (int i = 0; i < points; ++i) {
    xs.push_back(min + (max - min) * i / (points - 1));
  }
  return xs;
}

SamplingScheme ExperimentConfig::sampling() const {
  return make_scheme(scheme.T, scheme.a, scheme.rho, scheme.c_eps);
}

std::optional<oracle::ClosedFormKind> ExperimentConfig::closed_form_kind() const {
  if (model.jumps.is_none() && model.D > 0.0) return oracle::ClosedFormKind::brownian_drift;
  if (model.jumps.kind() == JumpKind::compound_poisson_exponential && model.D == 0.0) {
    return oracle::ClosedFormKind::cramer_lundberg_exponential;
  }
  return std::nullopt;
}

LevyModel parse_model(const std::string& json_text) {
  return model_from(parse_text(json_text));
}

ExperimentConfig parse_config(const std::string& text) {
  const json j = parse_text(text);
  reject_unknown(j, {"model", "laguerre", "scheme", "mc", "output", "x_grid", "estimation"},
                 "config");
  ExperimentConfig cfg;
  if (!j.contains("model")) throw ConfigError("config.model is required");
  cfg.model = model_from(j.at("model"));

  if (j.contains("laguerre")) {
    const auto& l = j.at("laguerre");
    reject_unknown(l, {"alpha", "K"}, "laguerre");
    cfg.laguerre.alpha = num(l, "alpha", cfg.laguerre.alpha, "laguerre");
    cfg.laguerre.K = static_cast<int>(integer(l, "K", cfg.laguerre.K, "laguerre"));
  }
  try {
    cfg.laguerre.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("laguerre: ") + e.what());
  }

  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    reject_unknown(s, {"T", "a", "rho", "c_eps", "seed"}, "scheme");
    cfg.scheme.T = num(s, "T", cfg.scheme.T, "scheme");
    cfg.scheme.a = num(s, "a", cfg.scheme.a, "scheme");
    cfg.scheme.rho = num(s, "rho", cfg.scheme.rho, "scheme");
    cfg.scheme.c_eps = num(s, "c_eps", cfg.scheme.c_eps, "scheme");
    const long long seed = integer(s, "seed", 0, "scheme");
    if (seed < 0) throw ConfigError("scheme.seed must be >= 0");
    cfg.scheme.seed = static_cast<std::uint64_t>(seed);
  }
  try {
    (void)cfg.sampling();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }

  if (j.contains("mc")) {
    const auto& m = j.at("mc");
    reject_unknown(m, {"replications", "workers"}, "mc");
    cfg.mc.replications = static_cast<int>(integer(m, "replications", cfg.mc.replications, "mc"));
    cfg.mc.workers = static_cast<int>(integer(m, "workers", cfg.mc.workers, "mc"));
  }
  if (cfg.mc.replications < 1) throw ConfigError("mc.replications must be >= 1");
  if (cfg.mc.workers < 1) throw ConfigError("mc.workers must be >= 1");

  if (j.contains("output")) {
    const auto& o = j.at("output");
    reject_unknown(o, {"directory", "formats"}, "output");
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) throw ConfigError("output.directory must be a string");
      cfg.output.directory = o.at("directory").get<std::string>();
    }
    if (o.contains("formats")) {
      const auto& f = o.at("formats");
      if (!f.is_array()) throw ConfigError("output.formats must be an array");
      cfg.output.csv = cfg.output.json = false;
      for (const auto& v : f) {
        const auto s = v.is_string() ? v.get<std::string>() : std::string();
        if (s == "csv") cfg.output.csv = true;
        else if (s == "json") cfg.output.json = true;
        else throw ConfigError("output.formats entries must be \"csv\" or \"json\"");
      }
    }
  }

  if (j.contains("x_grid")) {
    const auto& g = j.at("x_grid");
    reject_unknown(g, {"min", "max", "points"}, "x_grid");
    cfg.x_grid.min = num(g, "min", cfg.x_grid.min, "x_grid");
    cfg.x_grid.max = num(g, "max", cfg.x_grid.max, "x_grid");
    cfg.x_grid.points = static_cast<int>(integer(g, "points", cfg.x_grid.points, "x_grid"));
  }
  if (cfg.x_grid.points < 1) throw ConfigError("x_grid is empty (points < 1)");
  if (cfg.x_grid.min < 0.0) throw ConfigError("x_grid.min must be >= 0");
  if (cfg.x_grid.max < cfg.x_grid.min) throw ConfigError("x_grid is empty (max < min)");

  if (j.contains("estimation")) {
    const auto& e = j.at("estimation");
    reject_unknown(e, {"T_est", "ci_level"}, "estimation");
    cfg.T_est = num(e, "T_est", cfg.T_est, "estimation");
    cfg.ci_level = num(e, "ci_level", cfg.ci_level, "estimation");
  }
  if (!(cfg.T_est > 0.0 && cfg.T_est <= cfg.scheme.T)) {
    throw ConfigError("estimation.T_est must lie in (0, scheme.T]");
  }
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) {
    throw ConfigError("estimation.ci_level must lie in (0, 1)");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["model"] = {{"x0", c.model.x0}, {"c", c.model.c}, {"D", c.model.D},
                {"q", c.model.q},   {"jumps", jumps_json(c.model.jumps)}};
  j["laguerre"] = {{"alpha", c.laguerre.alpha}, {"K", c.laguerre.K}};
  j["scheme"] = {{"T", c.scheme.T},         {"a", c.scheme.a},
                 {"rho", c.scheme.rho},     {"c_eps", c.scheme.c_eps},
                 {"seed", c.scheme.seed}};
  j["mc"] = {{"replications", c.mc.replications}, {"workers", c.mc.workers}};
  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.json) formats.push_back("json");
  j["output"] = {{"directory", c.output.directory}, {"formats", formats}};
  j["x_grid"] = {{"min", c.x_grid.min}, {"max", c.x_grid.max}, {"points", c.x_grid.points}};
  j["estimation"] = {{"T_est", c.T_est}, {"ci_level", c.ci_level}};
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace levyscale
