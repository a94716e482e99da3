#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "levyscale/errors.hpp"
#include "levyscale/simulator.hpp"

using namespace levyscale;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct MeanSe {
  double mean, se;
};

MeanSe mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / (v.size() - 1) / v.size())};
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using P = Philox4x32;
  CHECK(P::block({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(P::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(P::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});

  P a(5, 0), b(5, 0), c(5, 1);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs |= x != c();
  }
  CHECK(differs);
}

TEST_CASE("sampling scheme") {
  const auto s = make_scheme(100.0, 1.0, 0.49, 1.0);
  CHECK(s.n == 10000);
  CHECK(s.delta == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(s.eps == doctest::Approx(std::pow(0.01, 0.49)).epsilon(1e-14));
  CHECK(s1_quantity(s) == doctest::Approx(1.0).epsilon(1e-12));
  const auto h = make_scheme(16.0, 0.5, 0.3, 2.0);
  CHECK(h.n == 64);
  CHECK(h.delta == doctest::Approx(0.25));
  CHECK_THROWS_AS(make_scheme(0.5, 1.0, 0.49, 1.0), DomainError);
  CHECK_THROWS_AS(make_scheme(10.0, 0.0, 0.49, 1.0), DomainError);
  CHECK_THROWS_AS(make_scheme(10.0, 1.5, 0.49, 1.0), DomainError);
  CHECK_THROWS_AS(make_scheme(10.0, 1.0, 0.6, 1.0), DomainError);
  CHECK_THROWS_AS(make_scheme(10.0, 1.0, 0.4, 0.0), DomainError);
}

TEST_CASE("S2 quantity") {
  for (double T : {100.0, 400.0, 1600.0}) {
    CHECK(s2_quantity(make_scheme(T, 1.0, 0.49, 1.0), JumpMeasure::none()) == 0.0);
  }
  const auto nu = JumpMeasure::exponential(1.0, 1.0);
  double prev = INFINITY;
  for (double T : {100.0, 400.0, 1600.0}) {
    const auto s = make_scheme(T, 1.0, 0.49, 1.0);
    const double e = s.eps;
    // int_0^e (z + z^2) e^{-z} dz in closed form
    const double m1 = 1.0 - std::exp(-e) * (1.0 + e);
    const double m2 = 2.0 - std::exp(-e) * (e * e + 2.0 * e + 2.0);
    const double v = s2_quantity(s, nu);
    CHECK(v == doctest::Approx(std::sqrt(T) * (m1 + m2)).epsilon(1e-9));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("deterministic drift path") {
  const LevyModel m{2.0, 1.5, 0.0, 0.0, JumpMeasure::none()};
  const auto s = make_scheme(10.0, 1.0, 0.49, 1.0);
  const auto obs = simulate(m, s, 1);
  REQUIRE(obs.X.size() == 101);
  for (std::size_t i = 0; i < obs.X.size(); ++i) CHECK(obs.X[i] == 2.0 + 1.5 * (i * s.delta));
  CHECK(obs.jumps.empty());
}

TEST_CASE("reproducibility") {
  const LevyModel m{0.0, 1.5, 0.5, 0.1, JumpMeasure::exponential(1.0, 1.0)};
  const auto s = make_scheme(20.0, 1.0, 0.49, 1.0);
  const auto a = simulate(m, s, 99, 3), b = simulate(m, s, 99, 3), c = simulate(m, s, 99, 4);
  CHECK(a.X == b.X);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    CHECK(a.jumps[i].time == b.jumps[i].time);
    CHECK(a.jumps[i].size == b.jumps[i].size);
  }
  CHECK(a.X != c.X);
  CHECK(a.X[0] == m.x0);
}

TEST_CASE("recorded jumps exceed the threshold") {
  const LevyModel models[] = {
      {0.0, 1.5, 0.5, 0.1, JumpMeasure::exponential(1.0, 1.0)},
      {0.0, 2.0, 0.2, 0.1, JumpMeasure::gamma_subordinator(0.8, 1.5)},
      {0.0, 2.0, 0.2, 0.1, JumpMeasure::compound_gamma(1.5, 0.5, 1.0)}};
  const auto s = make_scheme(30.0, 1.0, 0.49, 1.0);
  for (const auto& m : models) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto obs = simulate(m, s, seed);
      double last = 0.0;
      for (const auto& j : obs.jumps) {
        CHECK(j.size > s.eps);
        CHECK(j.time > 0.0);
        CHECK(j.time <= s.T);
        CHECK(j.time >= last);
        last = j.time;
      }
    }
  }
}

TEST_CASE("compound Poisson path reconstruction") {
  const LevyModel m{1.0, 1.5, 0.0, 0.0, JumpMeasure::exponential(1.0, 1.0)};
  const auto s = make_scheme(50.0, 0.5, 0.5, 1e-12);  // eps far below any sampled jump
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obs = simulate(m, s, seed);
    double L = 0.0;
    for (const auto& j : obs.jumps) L += j.size;
    CHECK(std::abs(obs.X.back() - (m.x0 + m.c * s.T - L)) < 1e-10);
  }
}

TEST_CASE("jump counts are Poisson(nu(eps, inf) T)") {
  const LevyModel m{0.0, 1.5, 0.5, 0.1, JumpMeasure::exponential(1.0, 1.0)};
  const auto s = make_scheme(10.0, 0.5, 0.49, 1.0);
  std::vector<double> counts;
  for (int r = 0; r < 1000; ++r) counts.push_back(simulate(m, s, 7, r).jumps.size());
  const auto ms = mean_se(counts);
  CHECK(std::abs(ms.mean - m.jumps.tail(s.eps) * s.T) < 3.0 * ms.se);
}

TEST_CASE("Brownian increments have variance sigma^2 delta") {
  const LevyModel m{0.0, 0.0, 0.5, 0.0, JumpMeasure::none()};
  const auto s = make_scheme(100.0, 1.0, 0.49, 1.0);
  const auto obs = simulate(m, s, 3);
  std::vector<double> sq;
  for (std::size_t i = 1; i < obs.X.size(); ++i) {
    const double d = obs.X[i] - obs.X[i - 1];
    sq.push_back(d * d);
  }
  const auto ms = mean_se(sq);
  CHECK(std::abs(ms.mean - 1.0 * s.delta) < 3.0 * ms.se);
}

TEST_CASE("gamma subordinator paths have the right mean") {
  const LevyModel m{0.0, 2.0, 0.0, 0.0, JumpMeasure::gamma_subordinator(0.8, 1.5)};
  const auto s = make_scheme(20.0, 0.5, 0.49, 1.0);
  std::vector<double> end;
  for (int r = 0; r < 400; ++r) end.push_back(simulate(m, s, 11, r).X.back());
  const auto ms = mean_se(end);
  CHECK(std::abs(ms.mean - (m.c - m.jumps.mean()) * s.T) < 3.0 * ms.se);
}

TEST_CASE("observation files round-trip") {
  namespace fs = std::filesystem;
  const LevyModel m{0.5, 1.5, 0.5, 0.1, JumpMeasure::exponential(1.0, 1.0)};
  const auto s = make_scheme(10.0, 1.0, 0.49, 1.0);
  const auto obs = simulate(m, s, 21, 2);
  write_observations(obs, "sim_a");
  const auto back = read_observations("sim_a");
  CHECK(back.X == obs.X);
  REQUIRE(back.jumps.size() == obs.jumps.size());
  for (std::size_t i = 0; i < obs.jumps.size(); ++i) CHECK(back.jumps[i].size == obs.jumps[i].size);
  CHECK(back.scheme.n == s.n);
  CHECK(back.scheme.eps == s.eps);
  CHECK(back.seed == 21);
  CHECK(back.stream == 2);
  write_observations(back, "sim_b");
  for (const char* f : {"grid.csv", "jumps.csv", "observations.json"}) {
    CHECK(slurp(fs::path("sim_a") / f) == slurp(fs::path("sim_b") / f));
  }
  const auto none = simulate({0.0, 1.0, 0.5, 0.0, JumpMeasure::none()}, s, 1);
  write_observations(none, "sim_none");
  CHECK(slurp(fs::path("sim_none") / "jumps.csv") == "t,size\n");
  CHECK_THROWS_AS(read_observations("does_not_exist"), IoError);
}
