#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "levyscale/levy_model.hpp"

namespace levyscale {

/// Philox4x32-10 counter-based generator. The key is the user seed, the
/// high half of the counter the stream (replication) index, so every
/// (seed, stream) pair is an independent reproducible sequence.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  /// The bare block function (10 rounds).
  static Counter block(Counter ctr, Key key);

 private:
  Key key_;
  Counter ctr_;
  Counter buf_{};
  int used_ = 4;
};

/// Observation scheme: n steps of size delta on [0, T = n delta], jumps
/// above eps recorded. (a, rho, c_eps) are kept when derived by make_scheme.
struct SamplingScheme {
  std::int64_t n = 0;
  double delta = 0.0;
  double T = 0.0;
  double eps = 0.0;
  double a = 0.0;
  double rho = 0.0;
  double c_eps = 0.0;

  void validate() const;
};

/// n = ceil(T^{1+a}), delta = T / n, eps = c_eps delta^rho. Requires T >= 1,
/// a in (0, 1], rho in (0, 1/2], c_eps > 0.
SamplingScheme make_scheme(double T, double a, double rho, double c_eps);

/// sqrt(T) * int_0^eps (z + z^2) nu(dz); should shrink as T grows.
double s2_quantity(const SamplingScheme& scheme, const JumpMeasure& nu);

/// n delta^2 for the scheme.
double s1_quantity(const SamplingScheme& scheme);

struct JumpRecord {
  double time;
  double size;
};

struct ObservationSet {
  std::vector<double> X;          // X_{i delta}, i = 0..n
  std::vector<JumpRecord> jumps;  // sizes > eps, increasing time
  SamplingScheme scheme;
  double x0 = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Simulates X on the grid. Compound Poisson jumps are placed exactly;
/// for the gamma subordinator, jumps above delta_sim = eps / 10 are exact and
/// the remainder is replaced by its mean drift.
ObservationSet simulate(const LevyModel& model, const SamplingScheme& scheme,
                        std::uint64_t seed, std::uint64_t stream = 0);

/// Writes grid.csv (i,t,X), jumps.csv (t,size) and observations.json into
/// `dir`, creating it when needed.
void write_observations(const ObservationSet& obs, const std::string& dir);
ObservationSet read_observations(const std::string& dir);

}  // namespace levyscale
