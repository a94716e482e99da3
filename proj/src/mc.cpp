#include "levyscale/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "levyscale/errors.hpp"

namespace levyscale {
namespace {

McMoments moments(const std::vector<double>& v, double truth) {
  McMoments m;
  m.truth = truth;
  const double n = static_cast<double>(v.size());
  if (v.empty()) return m;
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    s += x;
    s2 += (x - truth) * (x - truth);
  }
  m.mean = s / n;
  m.bias = m.mean - truth;
  m.rmse = std::sqrt(s2 / n);
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  m.se = m.sd / std::sqrt(n);
  return m;
}

McReplication run_one(const McConfig& cfg, int index) {
  McReplication r;
  r.index = index;
  const auto obs = simulate(cfg.model, cfg.scheme, cfg.seed,
                            static_cast<std::uint64_t>(index));
  r.jump_count = obs.jumps.size();
  const auto rep = estimate_report(obs, cfg.model.q, cfg.model.c, cfg.params,
                                   cfg.xs, cfg.options);
  r.D_hat = rep.est.D_raw;
  r.p_hat = rep.p_raw;
  r.done = true;
  if (rep.degenerate) {
    r.degenerate = true;
    return r;
  }
  r.gamma_hat = rep.est.theta.gamma;
  const auto last = rep.cov.Sigma.rows() - 1;
  r.v0_hat = std::sqrt(std::max(rep.cov.Sigma(last, last), 0.0));
  for (const auto& pt : rep.points) {
    r.W.push_back(pt.W);
    r.W_lo.push_back(pt.W_lo);
    r.W_hi.push_back(pt.W_hi);
    r.Z.push_back(pt.Z);
    r.Z_lo.push_back(pt.Z_lo);
    r.Z_hi.push_back(pt.Z_hi);
  }
  return r;
}

}  // namespace

McSummary summarize(const McConfig& cfg, const std::vector<McReplication>& reps) {
  McSummary s;
  const ScaleApprox truth(cfg.model, cfg.params);
  const double gamma0 = truth.coeffs().theta.gamma;
  const double T = cfg.scheme.T;
  std::vector<double> D, g, p, jumps, zstd;
  s.xs = cfg.xs;
  for (double x : cfg.xs) {
    s.W_true.push_back(truth.W(x));
    s.Z_true.push_back(truth.Z(x));
  }
  std::vector<int> hitW(cfg.xs.size(), 0), hitZ(cfg.xs.size(), 0);
  for (const auto& r : reps) {
    if (!r.done) continue;
    jumps.push_back(static_cast<double>(r.jump_count));
    D.push_back(r.D_hat);
    if (r.degenerate) {
      ++s.degenerate;
      continue;
    }
    ++s.used;
    g.push_back(r.gamma_hat);
    p.push_back(r.p_hat);
    if (r.v0_hat > 0.0) zstd.push_back(std::sqrt(T) * (r.gamma_hat - gamma0) / r.v0_hat);
    for (std::size_t i = 0; i < cfg.xs.size() && i < r.W.size(); ++i) {
      hitW[i] += r.W_lo[i] <= s.W_true[i] && s.W_true[i] <= r.W_hi[i];
      hitZ[i] += r.Z_lo[i] <= s.Z_true[i] && s.Z_true[i] <= r.Z_hi[i];
    }
  }
  s.D = moments(D, cfg.model.D);
  s.gamma = moments(g, gamma0);
  s.p = moments(p, truth.coeffs().p);
  s.jumps = moments(jumps, cfg.model.jumps.is_none()
                               ? 0.0
                               : cfg.model.jumps.tail(cfg.scheme.eps) * T);
  s.gamma_var_T = s.gamma.sd * s.gamma.sd * T;
  s.gamma_v0_sq = gamma_asymptotic_variance(cfg.model);
  s.gamma_normality = anderson_darling_standard(zstd);
  for (std::size_t i = 0; i < cfg.xs.size(); ++i) {
    const double n = s.used > 0 ? static_cast<double>(s.used) : 1.0;
    s.coverage_W.push_back(hitW[i] / n);
    s.coverage_Z.push_back(hitZ[i] / n);
  }
  return s;
}

McResult run_mc(const McConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("mc.replications must be >= 1");
  McResult res;
  res.reps.resize(static_cast<std::size_t>(cfg.replications));
  std::atomic<int> next{0};
  std::atomic<bool> abort{false};
  std::mutex fail_mu;
  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const int i = next++;
      if (i >= cfg.replications) return;
      try {
        res.reps[static_cast<std::size_t>(i)] = run_one(cfg, i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!res.failed) {
          res.failed = true;
          res.failure = "replication " + std::to_string(i) + ": " + e.what();
        }
        abort = true;
        return;
      }
    }
  };
  const int nw = std::clamp(cfg.workers, 1, cfg.replications);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  res.summary = summarize(cfg, res.reps);
  return res;
}

void write_mc_table(const McResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  const auto& xs = result.summary.xs;
  out << "replication,status,jump_count,D_hat,gamma_hat,p_hat,v0_hat";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << ",W_hat_" << i << ",W_lo_" << i << ",W_hi_" << i << ",Z_hat_" << i
        << ",Z_lo_" << i << ",Z_hi_" << i;
  }
  out << '\n' << std::setprecision(17);
  for (const auto& r : result.reps) {
    const char* status = !r.done ? "missing" : r.degenerate ? "degenerate" : "ok";
    out << r.index << ',' << status << ',' << r.jump_count << ',' << r.D_hat << ','
        << r.gamma_hat << ',' << r.p_hat << ',' << r.v0_hat;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i < r.W.size()) {
        out << ',' << r.W[i] << ',' << r.W_lo[i] << ',' << r.W_hi[i] << ',' << r.Z[i]
            << ',' << r.Z_lo[i] << ',' << r.Z_hi[i];
      } else {
        out << ",,,,,,";
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string mc_summary_json(const McResult& result) {
  using nlohmann::ordered_json;
  const McSummary& s = result.summary;
  auto mom = [](const McMoments& m) {
    return ordered_json{{"truth", m.truth}, {"mean", m.mean}, {"bias", m.bias},
                        {"se", m.se},       {"rmse", m.rmse}, {"sd", m.sd}};
  };
  ordered_json j;
  j["failed"] = result.failed;
  if (result.failed) j["failure"] = result.failure;
  j["replications"] = result.reps.size();
  j["used"] = s.used;
  j["degenerate"] = s.degenerate;
  j["D_hat"] = mom(s.D);
  j["gamma_hat"] = mom(s.gamma);
  j["p_hat"] = mom(s.p);
  j["jump_count"] = mom(s.jumps);
  j["gamma_var_T"] = s.gamma_var_T;
  j["gamma_v0_sq"] = s.gamma_v0_sq;
  j["gamma_normality"] = {{"A2", s.gamma_normality.A2},
                          {"p_value", s.gamma_normality.p_value}};
  ordered_json cov = ordered_json::array();
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    cov.push_back({{"x", s.xs[i]},
                   {"W_true", s.W_true[i]},
                   {"Z_true", s.Z_true[i]},
                   {"coverage_W", s.coverage_W[i]},
                   {"coverage_Z", s.coverage_Z[i]}});
  }
  j["coverage"] = cov;
  return j.dump(2);
}

}  // namespace levyscale
