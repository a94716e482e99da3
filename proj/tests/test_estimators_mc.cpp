// Monte Carlo checks of the estimators against population values.
#include <cmath>

#include "doctest.h"
#include "levyscale/estimators.hpp"
#include "levyscale/mc.hpp"
#include "levyscale/scale_series.hpp"

using namespace levyscale;

namespace {

const LevyModel kExp{0.0, 1.5, 0.5, 0.1, JumpMeasure::exponential(1.0, 1.0)};

struct Stats {
  double mean = 0.0, se = 0.0;
};

Stats stats(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / (v.size() - 1) / v.size())};
}

}  // namespace

TEST_CASE("D_hat is unbiased on Brownian motion") {
  const LevyModel bm{0.0, 1.5, 0.5, 0.1, JumpMeasure::none()};
  SamplingScheme s;
  s.n = 1000;
  s.delta = 1e-3;
  s.T = 1.0;
  s.eps = 0.01;
  std::vector<double> d(500);
  for (int r = 0; r < 500; ++r) d[r] = estimate_D(simulate(bm, s, 11, r)).value;
  const auto st = stats(d);
  CHECK(std::abs(st.mean - 0.5) <= 3.0 * st.se);
  // sd of D_hat is D sqrt(2 / n)
  CHECK(st.se * std::sqrt(500.0) == doctest::Approx(0.5 * std::sqrt(2.0 / 1000)).epsilon(0.15));
}

TEST_CASE("nu_hat matches the truncated population functional") {
  const auto s = make_scheme(100.0, 1.0, 0.49, 1.0);
  std::vector<double> v(500);
  for (int r = 0; r < 500; ++r) {
    v[r] = nu_hat(simulate(kExp, s, 12, r), [](double z) { return z; });
  }
  const auto st = stats(v);
  const double truth = (s.eps + 1.0) * std::exp(-s.eps);  // int_eps^inf z e^{-z} dz
  CHECK(std::abs(st.mean - truth) <= 3.0 * st.se);
}

TEST_CASE("gamma_hat and p_hat at T = 400") {
  McConfig cfg;
  cfg.model = kExp;
  cfg.params = {1.0, 20};
  cfg.scheme = make_scheme(400.0, 1.0, 0.49, 1.0);
  cfg.seed = 2024;
  cfg.replications = 300;
  cfg.workers = 2;
  cfg.xs = {1.0, 3.0};
  const auto res = run_mc(cfg);
  REQUIRE_FALSE(res.failed);
  const auto& s = res.summary;
  CHECK(s.degenerate == 0);

  // bias is O(1/T); allow it on top of three standard errors
  CHECK(std::abs(s.gamma.bias) <= 3.0 * s.gamma.se + 1.0 / cfg.scheme.T);
  CHECK(std::abs(s.p.bias) <= 3.0 * s.p.se + 1.0 / cfg.scheme.T);
  CHECK(std::abs(s.jumps.bias) <= 3.0 * s.jumps.se);
  CHECK(s.gamma_var_T == doctest::Approx(s.gamma_v0_sq).epsilon(0.3));
  CHECK(s.gamma_normality.p_value > 0.01);

  // Sigma_hat averages to the population Sigma
  const auto pop = population_sigma(kExp, cfg.params);
  const int ig = static_cast<int>(pop.rows()) - 1;
  double vg = 0.0;
  for (const auto& r : res.reps) vg += r.v0_hat * r.v0_hat;
  vg /= res.reps.size();
  CHECK(vg == doctest::Approx(pop(ig, ig)).epsilon(0.05));

  for (double c : s.coverage_W) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}
