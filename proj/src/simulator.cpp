#include "levyscale/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <boost/math/special_functions/expint.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "json.hpp"

#include "levyscale/errors.hpp"

namespace levyscale {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform on (0, 1) with 53 random bits.
double open_uniform(Philox4x32& eng) {
  const std::uint64_t hi = eng() >> 5;
  const std::uint64_t lo = eng() >> 6;
  return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
}

// Jump sizes from nu restricted to (lower, inf), normalised.
class JumpSampler {
 public:
  JumpSampler(const JumpMeasure& nu, double lower) : nu_(nu), lower_(lower) {}

  double operator()(Philox4x32& eng) const {
    switch (nu_.kind()) {
      case JumpKind::compound_poisson_exponential:
        return boost::random::exponential_distribution<double>(nu_.mu())(eng);
      case JumpKind::compound_poisson_gamma:
        return boost::random::gamma_distribution<double>(nu_.shape(),
                                                         nu_.scale())(eng);
      case JumpKind::gamma_subordinator: {
        // density prop. to e^{-b z} / z on (lower, inf): propose
        // lower + Exp(b), accept with probability lower / z
        boost::random::exponential_distribution<double> expo(nu_.rate());
        for (;;) {
          const double z = lower_ + expo(eng);
          if (open_uniform(eng) * z <= lower_) return z;
        }
      }
      case JumpKind::none:
        break;
    }
    return 0.0;
  }

 private:
  const JumpMeasure& nu_;
  double lower_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, static_cast<std::uint32_t>(stream),
           static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 4) {
    buf_ = block(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    used_ = 0;
  }
  return buf_[used_++];
}

void SamplingScheme::validate() const {
  if (n < 1) throw DomainError("scheme needs n >= 1");
  if (!(delta > 0.0)) throw DomainError("scheme needs delta > 0");
  if (!(eps > 0.0)) throw DomainError("scheme needs eps > 0");
  if (std::abs(T - static_cast<double>(n) * delta) > 1e-9 * T) {
    throw DomainError("scheme needs T = n delta");
  }
}

SamplingScheme make_scheme(double T, double a, double rho, double c_eps) {
  if (!(T >= 1.0)) throw DomainError("make_scheme needs T >= 1");
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("make_scheme needs a in (0, 1]");
  if (!(rho > 0.0 && rho <= 0.5)) {
    throw DomainError("make_scheme needs rho in (0, 1/2]");
  }
  if (!(c_eps > 0.0)) throw DomainError("make_scheme needs c_eps > 0");
  SamplingScheme s;
  // guard against T^{1+a} landing a hair above an integer
  const double target = std::pow(T, 1.0 + a);
  s.n = static_cast<std::int64_t>(std::ceil(target - 1e-9 * target));
  s.T = T;
  s.delta = T / static_cast<double>(s.n);
  s.eps = c_eps * std::pow(s.delta, rho);
  s.a = a;
  s.rho = rho;
  s.c_eps = c_eps;
  return s;
}

double s2_quantity(const SamplingScheme& scheme, const JumpMeasure& nu) {
  if (nu.is_none()) return 0.0;
  return std::sqrt(scheme.T) * (nu.small_jump_moment(scheme.eps, 1) +
                                nu.small_jump_moment(scheme.eps, 2));
}

double s1_quantity(const SamplingScheme& scheme) {
  return static_cast<double>(scheme.n) * scheme.delta * scheme.delta;
}

ObservationSet simulate(const LevyModel& model, const SamplingScheme& scheme,
                        std::uint64_t seed, std::uint64_t stream) {
  scheme.validate();
  model.validate(false);
  const auto n = static_cast<std::size_t>(scheme.n);
  const double dt = scheme.delta;
  const double T = scheme.T;

  ObservationSet obs;
  obs.scheme = scheme;
  obs.x0 = model.x0;
  obs.seed = seed;
  obs.stream = stream;
  obs.X.resize(n + 1);

  // Separate sub-streams for the diffusion and the jumps.
  Philox4x32 gauss_eng(seed, 2 * stream);
  Philox4x32 jump_eng(seed, 2 * stream + 1);

  const JumpMeasure& nu = model.jumps;
  double drift = model.c;
  std::vector<JumpRecord> all;
  if (!nu.is_none()) {
    double lower = 0.0;
    double rate = nu.total_mass();
    if (nu.kind() == JumpKind::gamma_subordinator) {
      lower = scheme.eps / 10.0;
      rate = nu.shape() * boost::math::expint(1, nu.rate() * lower);
      drift -= nu.small_jump_moment(lower, 1);
    }
    const auto count = boost::random::poisson_distribution<std::int64_t, double>(
        rate * T)(jump_eng);
    JumpSampler sampler(nu, lower);
    all.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) {
      const double t = T * open_uniform(jump_eng);
      all.push_back({t, sampler(jump_eng)});
    }
    std::sort(all.begin(), all.end(),
              [](const JumpRecord& l, const JumpRecord& r) { return l.time < r.time; });
  }

  const double sd = model.sigma() * std::sqrt(dt);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  double W = 0.0;
  double L = 0.0;
  std::size_t next = 0;
  obs.X[0] = model.x0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (sd > 0.0) W += sd * normal(gauss_eng);
    const double t_end = i == n ? T : t;
    while (next < all.size() && all[next].time <= t_end) L += all[next++].size;
    obs.X[i] = model.x0 + drift * t + W - L;
  }
  for (const auto& j : all) {
    if (j.size > scheme.eps) obs.jumps.push_back(j);
  }
  return obs;
}

void write_observations(const ObservationSet& obs, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  {
    std::ofstream grid(fs::path(dir) / "grid.csv");
    if (!grid) throw IoError("cannot open grid.csv in " + dir);
    grid << "i,t,X\n";
    for (std::size_t i = 0; i < obs.X.size(); ++i) {
      grid << i << ',' << fmt(static_cast<double>(i) * obs.scheme.delta) << ','
           << fmt(obs.X[i]) << '\n';
    }
    if (!grid) throw IoError("write failed: grid.csv");
  }
  {
    std::ofstream jumps(fs::path(dir) / "jumps.csv");
    if (!jumps) throw IoError("cannot open jumps.csv in " + dir);
    jumps << "t,size\n";
    for (const auto& j : obs.jumps) {
      jumps << fmt(j.time) << ',' << fmt(j.size) << '\n';
    }
    if (!jumps) throw IoError("write failed: jumps.csv");
  }
  nlohmann::ordered_json side;
  side["scheme"] = {{"n", obs.scheme.n},         {"delta", obs.scheme.delta},
                    {"T", obs.scheme.T},         {"eps", obs.scheme.eps},
                    {"a", obs.scheme.a},         {"rho", obs.scheme.rho},
                    {"c_eps", obs.scheme.c_eps}};
  side["x0"] = obs.x0;
  side["seed"] = obs.seed;
  side["stream"] = obs.stream;
  side["jump_count"] = obs.jumps.size();
  std::ofstream meta(fs::path(dir) / "observations.json");
  if (!meta) throw IoError("cannot open observations.json in " + dir);
  meta << side.dump(2) << '\n';
  if (!meta) throw IoError("write failed: observations.json");
}

ObservationSet read_observations(const std::string& dir) {
  namespace fs = std::filesystem;
  ObservationSet obs;
  std::ifstream meta(fs::path(dir) / "observations.json");
  if (!meta) throw IoError("cannot open observations.json in " + dir);
  nlohmann::json side;
  try {
    meta >> side;
    const auto& s = side.at("scheme");
    obs.scheme.n = s.at("n").get<std::int64_t>();
    obs.scheme.delta = s.at("delta").get<double>();
    obs.scheme.T = s.at("T").get<double>();
    obs.scheme.eps = s.at("eps").get<double>();
    obs.scheme.a = s.value("a", 0.0);
    obs.scheme.rho = s.value("rho", 0.0);
    obs.scheme.c_eps = s.value("c_eps", 0.0);
    obs.x0 = side.at("x0").get<double>();
    obs.seed = side.value("seed", std::uint64_t{0});
    obs.stream = side.value("stream", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad observations.json: ") + e.what());
  }

  auto read_rows = [&](const std::string& name, std::size_t cols,
                       auto&& sink) {
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw IoError("cannot open " + name + " in " + dir);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> v(cols);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t pos = 0;
      for (std::size_t c = 0; c < cols; ++c) {
        std::size_t used = 0;
        try {
          v[c] = std::stod(line.substr(pos), &used);
        } catch (const std::exception&) {
          throw IoError("bad number in " + name + ": " + line);
        }
        pos += used + 1;
      }
      sink(v);
    }
  };
  obs.X.reserve(static_cast<std::size_t>(obs.scheme.n) + 1);
  read_rows("grid.csv", 3, [&](const std::vector<double>& v) { obs.X.push_back(v[2]); });
  read_rows("jumps.csv", 2, [&](const std::vector<double>& v) {
    obs.jumps.push_back({v[0], v[1]});
  });
  if (obs.X.size() != static_cast<std::size_t>(obs.scheme.n) + 1) {
    throw IoError("grid.csv row count does not match scheme n");
  }
  return obs;
}

}  // namespace levyscale
