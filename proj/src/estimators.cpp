#include "levyscale/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/statistics/anderson_darling.hpp>

#include "json.hpp"
#include "levyscale/errors.hpp"

namespace levyscale {
namespace {

// Empirical psi(r) - q.
double psi_hat_excess(const ObservationSet& obs, double r, double D, double c,
                      double q) {
  double s = 0.0;
  for (const auto& j : obs.jumps) s += std::expm1(-r * j.size);
  return c * r + D * r * r + s / obs.scheme.T - q;
}

}  // namespace

DEstimate estimate_D(const ObservationSet& obs, double T_est) {
  if (!(T_est > 0.0)) throw DomainError("estimate_D needs T_est > 0");
  const double dt = obs.scheme.delta;
  const auto m = static_cast<std::size_t>(std::floor(T_est / dt + 1e-9));
  if (m + 1 > obs.X.size()) {
    throw DomainError("estimate_D: window exceeds the observed data");
  }
  double qv = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double d = obs.X[i] - obs.X[i - 1];
    qv += d * d;
  }
  double jumps = 0.0;
  for (const auto& j : obs.jumps) {
    if (j.time <= T_est) jumps += j.size * j.size;
  }
  DEstimate est;
  est.value = (qv - jumps) / (2.0 * T_est);
  est.negative = est.value < 0.0;
  return est;
}

std::vector<double> nu_hat(const ObservationSet& obs, std::size_t dim,
                           const std::function<void(double, std::span<double>)>& H) {
  std::vector<double> sum(dim, 0.0);
  std::vector<double> v(dim);
  for (const auto& j : obs.jumps) {
    H(j.size, v);
    for (std::size_t d = 0; d < dim; ++d) sum[d] += v[d];
  }
  for (double& s : sum) s /= obs.scheme.T;
  return sum;
}

double nu_hat(const ObservationSet& obs, const std::function<double(double)>& H) {
  double s = 0.0;
  for (const auto& j : obs.jumps) s += H(j.size);
  return s / obs.scheme.T;
}

double psi_hat_deriv(const ObservationSet& obs, double r, double D, double c) {
  double s = 0.0;
  for (const auto& j : obs.jumps) s += j.size * std::exp(-r * j.size);
  return c + 2.0 * D * r - s / obs.scheme.T;
}

GammaEstimate estimate_gamma(const ObservationSet& obs, double q, double D_hat,
                             double c) {
  GammaEstimate g;
  if (q == 0.0) return g;
  if (q < 0.0) throw DomainError("estimate_gamma needs q >= 0");
  const double D = std::max(D_hat, 0.0);
  auto f = [&](double r) { return psi_hat_excess(obs, r, D, c, q); };

  // Box from the Brownian root with (c, D) at 2q.
  double scale = D > 0.0 ? (-c + std::sqrt(c * c + 8.0 * D * q)) / (2.0 * D)
                         : 2.0 * q / std::max(c, 1e-12);
  double hi = 10.0 * std::max(scale, 1e-8);
  int grow = 0;
  while (f(hi) <= 0.0 && grow < 60) {
    hi *= 2.0;
    ++grow;
  }
  if (f(hi) <= 0.0) {
    // no sign change: golden-section on the squared objective
    double a = 0.0, b = hi;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, b); ++it) {
      const double x1 = b - phi * (b - a);
      const double x2 = a + phi * (b - a);
      if (f(x1) * f(x1) < f(x2) * f(x2)) b = x2; else a = x1;
    }
    g.value = 0.5 * (a + b);
    g.boundary = true;
    return g;
  }
  // psi_hat(0) - q = -q < 0, convex: a single upward crossing in (0, hi]
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  g.value = 0.5 * (lo + hi);
  return g;
}

CoeffEstimate estimate_coeffs(const ObservationSet& obs, double q, double c,
                              const LaguerreParams& params, double T_est,
                              std::optional<ThetaParams> theta_override) {
  params.validate();
  CoeffEstimate est;
  est.params = params;
  const auto D = estimate_D(obs, T_est);
  est.D_raw = D.value;
  est.D_negative = D.negative;
  if (theta_override) {
    est.theta = *theta_override;
  } else {
    const auto g = estimate_gamma(obs, q, D.value, c);
    est.gamma_boundary = g.boundary;
    est.theta = {c, std::max(D.value, 0.0), g.value};
  }
  const std::size_t n = params.size();
  const HLayout lay{params.K};
  auto v = nu_hat(obs, lay.size(), [&](double z, std::span<double> out) {
    h_functionals(est.theta, params, z, out);
  });
  est.a_f.assign(v.begin(), v.begin() + static_cast<long>(n));
  est.a_F.assign(v.begin() + static_cast<long>(n),
                 v.begin() + static_cast<long>(2 * n));
  est.p = v[lay.p()];
  if (!(est.p < 1.0)) {
    throw DegenerateEstimate("p_hat >= 1", est.p);
  }
  auto A = build_Af(est.a_f, params.alpha);
  est.a_G = solve_aG(A, est.a_F, &est.solve_residual);
  return est;
}

PlugIn plug_in(const CoeffEstimate& est) {
  return {est.theta.c, est.theta.D, est.theta.gamma, est.p};
}

CurvePoint estimate_W(const CoeffEstimate& est, double q, double x) {
  const PlugIn at = plug_in(est);
  auto t = scale_terms(x, at, est.params);
  double w = 0.0, z = 0.0;
  for (std::size_t k = 0; k < est.a_G.size(); ++k) {
    w += t.Q[k] * est.a_G[k];
    z += t.Qs[k] * est.a_G[k];
  }
  return {t.P - w, 1.0 + q * (t.Ps - z)};
}

void influence_vector(const ThetaParams& theta, const LaguerreParams& params,
                      double psi_deriv, double z, std::span<double> out) {
  const HLayout lay{params.K};
  h_functionals(theta, params, z, out.first(lay.size()));
  // influence of gamma_hat: -k_gamma / psi'(gamma)
  out[lay.size()] = -std::expm1(-theta.gamma * z) / psi_deriv;
}

Eigen::MatrixXd population_sigma(const LevyModel& model,
                                 const LaguerreParams& params) {
  const ThetaParams theta = true_theta(model);
  const double d = laplace_exponent_deriv(model, theta.gamma);
  const std::size_t dim = HLayout{params.K}.size() + 1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  if (model.jumps.is_none()) return S;
  std::vector<double> h(dim);
  const auto flat = nu_functional_exact(
      model.jumps, dim * dim, [&](double z, std::span<double> out) {
        influence_vector(theta, params, d, z, h);
        for (std::size_t i = 0; i < dim; ++i)
          for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = h[i] * h[j];
      });
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * dim + j];
  return S;
}

Covariance covariance(const ObservationSet& obs, const CoeffEstimate& est,
                      double /*q*/) {
  const LaguerreParams& params = est.params;
  const int K = params.K;
  const HLayout lay{K};
  const auto m = static_cast<Eigen::Index>(lay.size());  // 2K + 3
  const Eigen::Index dim = m + 1;
  const double T = obs.scheme.T;

  Covariance cov;
  cov.psi_deriv = psi_hat_deriv(obs, est.theta.gamma, est.theta.D, est.theta.c);
  cov.Sigma = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd dH_mean = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd h(dim);
  std::vector<double> buf(lay.size());
  for (const auto& j : obs.jumps) {
    influence_vector(est.theta, params, cov.psi_deriv, j.size,
                     std::span<double>(h.data(), static_cast<std::size_t>(dim)));
    cov.Sigma.selfadjointView<Eigen::Lower>().rankUpdate(h);
    h_functionals_dgamma(est.theta, params, j.size, buf);
    for (Eigen::Index d = 0; d < m; ++d) dH_mean(d) += buf[static_cast<std::size_t>(d)];
  }
  cov.Sigma = cov.Sigma.selfadjointView<Eigen::Lower>();
  cov.Sigma /= T;
  dH_mean /= T;

  cov.Gamma = Eigen::MatrixXd::Identity(dim, dim);
  cov.Gamma.block(0, m, m, 1) = dH_mean;

  // B = (B*, -I); B*_{kj} = -(a^G_{k-j} - a^G_{k-j-1}) / sqrt(2 alpha)
  const Eigen::Index n = K + 1;
  const double root = std::sqrt(2.0 * params.alpha);
  cov.B = Eigen::MatrixXd::Zero(n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double cur = est.a_G[static_cast<std::size_t>(k - j)];
      const double prev = k - j >= 1 ? est.a_G[static_cast<std::size_t>(k - j - 1)] : 0.0;
      cov.B(k, j) = -(cur - prev) / root;
    }
    cov.B(k, n + k) = -1.0;
  }

  if (dim > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.Sigma,
                                                       Eigen::EigenvaluesOnly);
    cov.min_eigenvalue = eig.eigenvalues().minCoeff();
    cov.psd = cov.min_eigenvalue >= -1e-10;
  }
  return cov;
}

Gradients gradients(const CoeffEstimate& est, const Eigen::MatrixXd& B,
                    double x) {
  const LaguerreParams& params = est.params;
  const Eigen::Index n = params.K + 1;
  const PlugIn at = plug_in(est);
  const auto t = scale_terms(x, at, params);
  const Eigen::MatrixXd A = build_Af(est.a_f, params.alpha);

  auto row = [&](const std::vector<double>& Qv, const std::vector<double>& dQp,
                 const std::vector<double>& dQg, double dPp, double dPg) {
    Eigen::VectorXd Q = Eigen::Map<const Eigen::VectorXd>(Qv.data(), n);
    // u^T = Q^T A^{-1}  <=>  A^T u = Q
    Eigen::VectorXd u =
        A.triangularView<Eigen::Lower>().transpose().solve(Q);
    Eigen::RowVectorXd r(2 * n + 2);
    r.head(2 * n) = u.transpose() * B;
    double wp = dPp, wg = dPg;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double a = est.a_G[static_cast<std::size_t>(k)];
      wp -= dQp[static_cast<std::size_t>(k)] * a;
      wg -= dQg[static_cast<std::size_t>(k)] * a;
    }
    r(2 * n) = wp;
    r(2 * n + 1) = wg;
    return r;
  };
  Gradients g;
  g.C = row(t.Q, t.dQ_dp, t.dQ_dgamma, t.dP_dp, t.dP_dgamma);
  g.Cstar = row(t.Qs, t.dQs_dp, t.dQs_dgamma, t.dPs_dp, t.dPs_dgamma);
  return g;
}

EstimationReport estimate_report(const ObservationSet& obs, double q, double c,
                                 const LaguerreParams& params,
                                 std::span<const double> xs,
                                 const EstimateOptions& opts) {
  EstimationReport rep;
  rep.q = q;
  rep.c = c;
  rep.ci_level = opts.ci_level;
  rep.scheme = obs.scheme;
  rep.jump_count = obs.jumps.size();
  try {
    rep.est = estimate_coeffs(obs, q, c, params, opts.T_est, opts.theta_override);
  } catch (const DegenerateEstimate& e) {
    rep.degenerate = true;
    rep.p_raw = e.raw();
    rep.note = e.what();
    return rep;
  }
  rep.p_raw = rep.est.p;
  rep.cov = covariance(obs, rep.est, q);
  if (!rep.cov.psd) rep.note = "Sigma_hat not positive semidefinite; CIs suppressed";

  const double zq = boost::math::quantile(boost::math::normal_distribution<double>(),
                                          0.5 + 0.5 * opts.ci_level);
  const double T = obs.scheme.T;
  const Eigen::MatrixXd& S = rep.cov.Sigma;
  const Eigen::MatrixXd& G = rep.cov.Gamma;
  for (double x : xs) {
    PointInference pt;
    pt.x = x;
    const auto cp = estimate_W(rep.est, q, x);
    pt.W = cp.W;
    pt.Z = cp.Z;
    const auto g = gradients(rep.est, rep.cov.B, x);
    Eigen::MatrixXd J(2, S.rows());
    J.row(0) = g.C * G;
    J.row(1) = q * (g.Cstar * G);
    pt.joint = J * S * J.transpose();
    pt.sigma_K = pt.joint(0, 0);
    pt.sigma_star_K = pt.joint(1, 1);
    pt.ci_available = rep.cov.psd;
    if (pt.ci_available) {
      const double hw = zq * std::sqrt(std::max(pt.sigma_K, 0.0) / T);
      const double hz = zq * std::sqrt(std::max(pt.sigma_star_K, 0.0) / T);
      pt.W_lo = pt.W - hw;
      pt.W_hi = pt.W + hw;
      pt.Z_lo = pt.Z - hz;
      pt.Z_hi = pt.Z + hz;
    }
    rep.points.push_back(pt);
  }
  return rep;
}

std::string report_json(const EstimationReport& r) {
  using nlohmann::ordered_json;
  auto matrix = [](const Eigen::MatrixXd& m) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      a.push_back(row);
    }
    return a;
  };
  ordered_json j;
  j["degenerate"] = r.degenerate;
  j["note"] = r.note;
  j["q"] = r.q;
  j["c"] = r.c;
  j["scheme"] = {{"n", r.scheme.n}, {"delta", r.scheme.delta}, {"T", r.scheme.T},
                 {"eps", r.scheme.eps}};
  j["jump_count"] = r.jump_count;
  j["laguerre"] = {{"alpha", r.est.params.alpha}, {"K", r.est.params.K}};
  j["D_hat_raw"] = r.est.D_raw;
  j["D_hat"] = r.est.theta.D;
  j["D_hat_negative"] = r.est.D_negative;
  j["gamma_hat"] = r.est.theta.gamma;
  j["gamma_hat_boundary"] = r.est.gamma_boundary;
  j["p_hat"] = r.p_raw;
  if (!r.degenerate) {
    j["a_f_hat"] = r.est.a_f;
    j["a_F_hat"] = r.est.a_F;
    j["a_G_hat"] = r.est.a_G;
    j["solve_residual"] = r.est.solve_residual;
    j["psi_hat_deriv"] = r.cov.psi_deriv;
    j["Sigma_hat_min_eigenvalue"] = r.cov.min_eigenvalue;
    j["Sigma_hat_psd"] = r.cov.psd;
    j["Sigma_hat"] = matrix(r.cov.Sigma);
    j["Gamma_hat"] = matrix(r.cov.Gamma);
    j["B_hat"] = matrix(r.cov.B);
    j["ci_level"] = r.ci_level;
    ordered_json pts = ordered_json::array();
    for (const auto& p : r.points) {
      ordered_json o;
      o["x"] = p.x;
      o["W_hat"] = p.W;
      o["Z_hat"] = p.Z;
      o["sigma_K"] = p.sigma_K;
      o["sigma_star_K"] = p.sigma_star_K;
      o["joint"] = {{p.joint(0, 0), p.joint(0, 1)}, {p.joint(1, 0), p.joint(1, 1)}};
      o["ci_available"] = p.ci_available;
      if (p.ci_available) {
        o["W_ci"] = {p.W_lo, p.W_hi};
        o["Z_ci"] = {p.Z_lo, p.Z_hi};
      }
      pts.push_back(o);
    }
    j["points"] = pts;
  }
  return j.dump(2);
}

void write_report(const EstimationReport& report, const std::string& json_path,
                  const std::string& csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot open " + json_path);
    out << report_json(report) << '\n';
    if (!out) throw IoError("write failed: " + json_path);
  }
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot open " + csv_path);
  out << std::setprecision(17)
      << "x,W_hat,Z_hat,W_lo,W_hi,Z_lo,Z_hi,sigma_K,sigma_star_K\n";
  for (const auto& p : report.points) {
    out << p.x << ',' << p.W << ',' << p.Z << ',';
    if (p.ci_available) {
      out << p.W_lo << ',' << p.W_hi << ',' << p.Z_lo << ',' << p.Z_hi;
    } else {
      out << ",,,";
    }
    out << ',' << p.sigma_K << ',' << p.sigma_star_K << '\n';
  }
  if (!out) throw IoError("write failed: " + csv_path);
}

double gamma_asymptotic_variance(const LevyModel& model) {
  const double gamma = lundberg_exponent(model, model.q);
  const JumpMeasure& nu = model.jumps;
  // nu((e^{-g z} - 1)^2) = nu(e^{-2 g z} - 1) - 2 nu(e^{-g z} - 1)
  const double nu_k2 = nu.laplace_term(2.0 * gamma) - 2.0 * nu.laplace_term(gamma);
  const double d = laplace_exponent_deriv(model, gamma);
  return nu_k2 / (d * d);
}

NormalityScreen anderson_darling_standard(std::vector<double> z) {
  NormalityScreen s;
  if (z.empty()) return s;
  std::sort(z.begin(), z.end());
  s.A2 = boost::math::statistics::anderson_darling_normality_statistic(z, 0.0, 1.0);
  // Asymptotic CDF of A^2 (Marsaglia & Marsaglia 2004).
  const double a = s.A2;
  double cdf;
  if (a <= 0.0) {
    cdf = 0.0;
  } else if (a < 2.0) {
    cdf = std::exp(-1.2337141 / a) / std::sqrt(a) *
          (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * a) * a) * a) * a) * a);
  } else {
    cdf = std::exp(-std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * a) * a) * a) * a) * a));
  }
  s.p_value = 1.0 - cdf;
  return s;
}

}  // namespace levyscale
