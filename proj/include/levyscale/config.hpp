#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levyscale/laguerre.hpp"
#include "levyscale/levy_model.hpp"
#include "levyscale/oracle.hpp"
#include "levyscale/simulator.hpp"

namespace levyscale {

struct SchemeBlock {
  double T = 100.0;
  double a = 1.0;
  double rho = 0.49;
  double c_eps = 1.0;
  std::uint64_t seed = 0;
};

struct McBlock {
  int replications = 100;
  int workers = 1;
};

struct OutputBlock {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

struct XGrid {
  double min = 0.0;
  double max = 10.0;
  int points = 101;

  std::vector<double> values() const;
};

struct ExperimentConfig {
  LevyModel model;
  LaguerreParams laguerre;
  SchemeBlock scheme;
  McBlock mc;
  OutputBlock output;
  XGrid x_grid;
  double T_est = 1.0;
  double ci_level = 0.95;

  SamplingScheme sampling() const;
  /// Closed-form oracle applicable to the model, if any.
  std::optional<oracle::ClosedFormKind> closed_form_kind() const;
};

/// Model block: {x0, c, sigma | D, q, jumps: {kind, ...}} with kind one of
/// none, exponential {rate, mu}, compound_gamma {rate, shape, scale},
/// gamma_subordinator {shape, rate}.
LevyModel parse_model(const std::string& json_text);

/// Parses and validates every block; ConfigError on any problem.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of the parsed configuration (sorted keys, defaults
/// filled in) and its 64-bit FNV-1a hash as 16 hex digits.
std::string canonical_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

}  // namespace levyscale
