#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "levyscale/estimators.hpp"

namespace levyscale {

struct McConfig {
  LevyModel model;
  LaguerreParams params;
  SamplingScheme scheme;
  std::uint64_t seed = 0;
  int replications = 1;
  int workers = 1;
  std::vector<double> xs;  // CI coverage points
  EstimateOptions options;
};

/// One replication; stream = replication index.
struct McReplication {
  int index = 0;
  bool done = false;
  bool degenerate = false;
  std::size_t jump_count = 0;
  double D_hat = 0.0, gamma_hat = 0.0, p_hat = 0.0;
  double v0_hat = 0.0;  // sqrt of the gamma diagonal of Sigma_hat
  std::vector<double> W, W_lo, W_hi, Z, Z_lo, Z_hi;
  std::vector<int> cover_W, cover_Z;
};

struct McMoments {
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double se = 0.0;    // standard error of the mean
  double rmse = 0.0;
  double sd = 0.0;
};

struct McSummary {
  int used = 0;        // non-degenerate replications
  int degenerate = 0;
  McMoments D, gamma, p;
  McMoments jumps;     // jump count against lambda T
  double gamma_var_T = 0.0;      // sample variance of sqrt(T)(gamma_hat - gamma_0)
  double gamma_v0_sq = 0.0;      // closed-form asymptotic variance
  NormalityScreen gamma_normality;  // on sqrt(T)(gamma_hat - gamma_0) / v0_hat
  std::vector<double> xs;
  std::vector<double> W_true, Z_true;
  std::vector<double> coverage_W, coverage_Z;
};

struct McResult {
  std::vector<McReplication> reps;  // replication order
  McSummary summary;
  bool failed = false;
  std::string failure;
};

/// Runs the replications on a bounded pool of threads. A replication that
/// throws anything other than DegenerateEstimate stops the run; the
/// finished replications are kept and `failed` is set.
McResult run_mc(const McConfig& config);

McSummary summarize(const McConfig& config, const std::vector<McReplication>& reps);

/// Per-replication CSV, fixed column order.
void write_mc_table(const McResult& result, const std::string& path);
std::string mc_summary_json(const McResult& result);

}  // namespace levyscale
