#include "levyscale/scale_series.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "levyscale/errors.hpp"
#include "levyscale/exp_util.hpp"
#include "levyscale/quadrature.hpp"

namespace levyscale {
namespace {

constexpr double kGammaZero = 1e-10;

double gamma_eff(double gamma) { return gamma < kGammaZero ? 0.0 : gamma; }

// E_gamma(z) = (1 - e^{-gamma z}) / gamma, limit z.
double e_gamma(double gamma, double z) { return exp_ratio(-gamma, z); }

// Laplace transforms L_k(s) = int_0^inf e^{-s u} phi_k(u) du, k = 0..K.
std::vector<double> laguerre_laplace(double alpha, int K, double s) {
  std::vector<double> out(static_cast<std::size_t>(K) + 1);
  const double w = (s - alpha) / (s + alpha);
  out[0] = std::sqrt(2.0 * alpha) / (s + alpha);
  for (int k = 1; k <= K; ++k) out[k] = out[k - 1] * w;
  return out;
}

// Divided differences (L_k(s) - L_k(t)) / (s - t), exact for s == t too.
std::vector<double> laguerre_laplace_divdiff(double alpha, int K, double s,
                                             double t) {
  const double root = std::sqrt(2.0 * alpha);
  const double ws = (s - alpha) / (s + alpha);
  const double wt = (t - alpha) / (t + alpha);
  const double w_dd = 2.0 * alpha / ((s + alpha) * (t + alpha));
  const double g_dd = -1.0 / ((s + alpha) * (t + alpha));
  const double g_t = 1.0 / (t + alpha);
  std::vector<double> out(static_cast<std::size_t>(K) + 1);
  // product rule: (w^k g)[s,t] = w_s^k g[s,t] + (w^k)[s,t] g(t),
  // (w^k)[s,t] = w[s,t] * S_k with S_k = sum_{j<k} w_s^j w_t^{k-1-j}
  double ws_pow = 1.0;
  double S = 0.0;
  for (int k = 0; k <= K; ++k) {
    out[k] = root * (ws_pow * g_dd + w_dd * S * g_t);
    S = wt * S + ws_pow;
    ws_pow *= ws;
  }
  return out;
}

void check_p(double p) {
  if (!(p < 1.0)) {
    throw DomainError("p >= 1: the ladder-height mass is not defective");
  }
}

}  // namespace

void PlugIn::validate() const {
  if (!(p < 1.0)) throw DomainError("p must be < 1");
  if (!(D >= 0.0)) throw DomainError("D must be >= 0");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (D == 0.0 && !(c > 0.0)) throw DomainError("D = 0 needs c > 0");
}

double ftilde_q(const LevyModel& model, const ThetaParams& theta, double x) {
  if (x < 0.0) throw DomainError("ftilde_q needs x >= 0");
  const JumpMeasure& nu = model.jumps;
  if (nu.is_none()) return 0.0;
  const double gamma = theta.gamma;
  if (theta.D == 0.0) return nu.exp_tail(x, gamma) / theta.c;
  const double beta = theta.beta();
  if (nu.kind() == JumpKind::compound_poisson_exponential) {
    const double mu = nu.mu();
    const double w = nu.rate() * mu / (mu + gamma);
    return w * std::exp(-mu * x) * exp_ratio(mu - beta, x) / theta.D;
  }
  quad::Tolerance tol;
  tol.rel = 1e-11;
  tol.abs = 1e-15;
  auto r = quad::integrate(
      [&](double y) {
        return std::exp(-beta * (x - y)) * nu.exp_tail(y, gamma);
      },
      0.0, x, tol);
  if (!r.converged) {
    throw NumericalFailure("ftilde_q: quadrature did not converge", r.error);
  }
  return r.value / theta.D;
}

double h_p(const ThetaParams& theta, double z) {
  const double E = e_gamma(gamma_eff(theta.gamma), z);
  if (theta.D > 0.0) return E / (theta.beta() * theta.D);
  return E / theta.c;
}

double p_value(const LevyModel& model, const ThetaParams& theta) {
  if (!check_npc(model).holds) {
    throw DomainError("p_value: net profit condition violated");
  }
  const JumpMeasure& nu = model.jumps;
  if (nu.is_none()) return 0.0;
  const double gamma = gamma_eff(theta.gamma);
  // nu(E_gamma) = -nu(e^{-gamma z} - 1) / gamma, or nu(z) at gamma = 0
  const double nu_E = gamma == 0.0 ? nu.mean() : -nu.laplace_term(gamma) / gamma;
  const double p = theta.D > 0.0 ? nu_E / (theta.beta() * theta.D)
                                 : nu_E / theta.c;
  check_p(p);
  return p;
}

void h_functionals(const ThetaParams& theta, const LaguerreParams& params,
                   double z, std::span<double> out) {
  const int K = params.K;
  const double alpha = params.alpha;
  const HLayout lay{K};
  const double gamma = gamma_eff(theta.gamma);
  if (z <= 0.0) {
    std::fill(out.begin(), out.begin() + static_cast<long>(lay.size()), 0.0);
    return;
  }
  std::vector<double> psi = psi_integral_all(alpha, K, z, -gamma);
  const double E = e_gamma(gamma, z);
  const double root = std::sqrt(2.0 * alpha);

  // R_k(z) = int_0^z e^{-gamma(z-y)} Psi_k(y; 0) dy
  std::vector<double> R(psi.size());
  R[0] = (root * E - psi[0]) / alpha;
  for (int k = 1; k <= K; ++k) {
    R[k] = -R[k - 1] - (psi[k] - psi[k - 1]) / alpha;
  }

  if (theta.D > 0.0) {
    const double D = theta.D;
    const double beta = theta.beta();
    // M_k(z) = int_0^z e^{-gamma(z-y)} int_y^inf e^{-beta(x-y)} phi_k(x) dx dy
    const double up = beta + alpha;
    const double down = beta - alpha;
    double M = psi[0] / up;
    for (int k = 0; k <= K; ++k) {
      if (k > 0) M = (down * M + psi[k] - psi[k - 1]) / up;
      out[lay.f(k)] = M / D;
      out[lay.F(k)] = (R[k] / D + M / D) / beta;
    }
    out[lay.p()] = E / (beta * D);
  } else {
    const double c = theta.c;
    for (int k = 0; k <= K; ++k) {
      out[lay.f(k)] = psi[k] / c;
      out[lay.F(k)] = R[k] / c;
    }
    out[lay.p()] = E / c;
  }
}

std::vector<double> h_functionals(const ThetaParams& theta,
                                  const LaguerreParams& params, double z) {
  std::vector<double> out(HLayout{params.K}.size());
  h_functionals(theta, params, z, out);
  return out;
}

std::vector<double> h_functionals_nested(const ThetaParams& theta,
                                         const LaguerreParams& params,
                                         double z) {
  const int K = params.K;
  const double alpha = params.alpha;
  const HLayout lay{K};
  const std::size_t n = params.size();
  const double gamma = gamma_eff(theta.gamma);
  std::vector<double> out(lay.size(), 0.0);
  if (z <= 0.0) return out;
  quad::Tolerance tol;
  tol.rel = 1e-12;
  tol.abs = 1e-15;

  if (theta.D == 0.0) {
    // integrand over y in [0, z]: e^{-gamma(z-y)} (phi_k(y), Psi_k(y; 0))
    auto r = quad::integrate_vector(
        [&](double y, std::span<double> v) {
          const double kern = std::exp(-gamma * (z - y));
          auto phi = laguerre_fn_all(alpha, K, y);
          auto psi0 = psi_integral_all(alpha, K, y, 0.0);
          for (std::size_t k = 0; k < n; ++k) {
            v[k] = kern * phi[k];
            v[n + k] = kern * psi0[k];
          }
          v[2 * n] = kern;
        },
        2 * n + 1, 0.0, z, tol);
    for (std::size_t d = 0; d < lay.size(); ++d) out[d] = r.value[d] / theta.c;
    return out;
  }

  const double beta = theta.beta();
  const double D = theta.D;
  auto inner = [&](double y, std::span<double> v) {
    auto r = quad::integrate_vector_to_infinity(
        [&](double x, std::span<double> w) {
          const double kern = std::exp(-beta * (x - y));
          auto phi = laguerre_fn_all(alpha, K, x);
          auto psi0 = psi_integral_all(alpha, K, x, 0.0);
          for (std::size_t k = 0; k < n; ++k) {
            w[k] = kern * phi[k];
            w[n + k] = kern * psi0[k];
          }
          w[2 * n] = kern;
        },
        2 * n + 1, y, std::max(beta, alpha), tol);
    const double kern = std::exp(-gamma * (z - y));
    for (std::size_t d = 0; d < 2 * n + 1; ++d) v[d] = kern * r.value[d];
  };
  auto r = quad::integrate_vector(inner, 2 * n + 1, 0.0, z, tol);
  for (std::size_t d = 0; d < lay.size(); ++d) out[d] = r.value[d] / D;
  return out;
}

void h_functionals_dgamma(const ThetaParams& theta,
                          const LaguerreParams& params, double z,
                          std::span<double> out) {
  const int K = params.K;
  const double alpha = params.alpha;
  const HLayout lay{K};
  const std::size_t n = params.size();
  const double gamma = gamma_eff(theta.gamma);
  if (z <= 0.0) {
    std::fill(out.begin(), out.begin() + static_cast<long>(lay.size()), 0.0);
    return;
  }
  std::vector<double> psi = psi_integral_all(alpha, K, z, -gamma);
  std::vector<double> dpsi(n);
  psi_integral_db_all(alpha, K, z, -gamma, psi, dpsi);
  for (double& v : dpsi) v = -v;  // b = -gamma
  const double E = e_gamma(gamma, z);
  const double dE = -exp_ratio_ds(-gamma, z);
  const double root = std::sqrt(2.0 * alpha);

  std::vector<double> R(n), dR(n);
  R[0] = (root * E - psi[0]) / alpha;
  dR[0] = (root * dE - dpsi[0]) / alpha;
  for (std::size_t k = 1; k < n; ++k) {
    R[k] = -R[k - 1] - (psi[k] - psi[k - 1]) / alpha;
    dR[k] = -dR[k - 1] - (dpsi[k] - dpsi[k - 1]) / alpha;
  }

  if (theta.D > 0.0) {
    const double D = theta.D;
    const double beta = theta.beta();
    const double up = beta + alpha;
    const double down = beta - alpha;
    double M = psi[0] / up;
    double dM = (dpsi[0] - M) / up;
    for (int k = 0; k <= K; ++k) {
      if (k > 0) {
        const double M_prev = M;
        M = (down * M_prev + psi[k] - psi[k - 1]) / up;
        dM = (down * dM + M_prev - M + dpsi[k] - dpsi[k - 1]) / up;
      }
      const double HF = (R[k] / D + M / D) / beta;
      out[lay.f(k)] = dM / D;
      out[lay.F(k)] = (dR[k] / D + dM / D) / beta - HF / beta;
    }
    out[lay.p()] = dE / (beta * D) - E / (beta * beta * D);
  } else {
    const double c = theta.c;
    for (int k = 0; k <= K; ++k) {
      out[lay.f(k)] = dpsi[k] / c;
      out[lay.F(k)] = dR[k] / c;
    }
    out[lay.p()] = dE / c;
  }
}

void h_functionals_dgamma_fd(const ThetaParams& theta,
                             const LaguerreParams& params, double z,
                             std::span<double> out, double step) {
  const std::size_t dim = HLayout{params.K}.size();
  ThetaParams up = theta;
  ThetaParams down = theta;
  // one-sided at the boundary gamma = 0
  double h_lo = step;
  if (theta.gamma < step) h_lo = theta.gamma;
  up.gamma = theta.gamma + step;
  down.gamma = theta.gamma - h_lo;
  std::vector<double> a(dim), b(dim);
  h_functionals(up, params, z, a);
  h_functionals(down, params, z, b);
  for (std::size_t d = 0; d < dim; ++d) out[d] = (a[d] - b[d]) / (step + h_lo);
}

CoefficientSet coeffs_true(const LevyModel& model, const LaguerreParams& params,
                           CoeffMethod method) {
  params.validate();
  model.validate(true);
  CoefficientSet cs;
  cs.params = params;
  cs.theta = true_theta(model);
  const int K = params.K;
  const std::size_t n = params.size();
  cs.a_f.assign(n, 0.0);
  cs.a_F.assign(n, 0.0);
  cs.a_G.assign(n, 0.0);
  const JumpMeasure& nu = model.jumps;
  if (nu.is_none()) return cs;
  const ThetaParams& th = cs.theta;
  const double gamma = gamma_eff(th.gamma);

  if (method == CoeffMethod::closed_form &&
      nu.kind() == JumpKind::compound_poisson_exponential) {
    const double mu = nu.mu();
    const double w = nu.rate() * mu / (mu + gamma);  // T(y) = w e^{-mu y}
    auto Lmu = laguerre_laplace(params.alpha, K, mu);
    if (th.D > 0.0) {
      const double beta = th.beta();
      auto dd = laguerre_laplace_divdiff(params.alpha, K, beta, mu);
      for (std::size_t k = 0; k < n; ++k) {
        cs.a_f[k] = -w * dd[k] / th.D;
        cs.a_F[k] = (w * Lmu[k] / (mu * th.D) + cs.a_f[k]) / beta;
      }
      cs.p = w / (mu * beta * th.D);
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        cs.a_f[k] = w * Lmu[k] / th.c;
        cs.a_F[k] = w * Lmu[k] / (mu * th.c);
      }
      cs.p = w / (mu * th.c);
    }
  } else if (method == CoeffMethod::nested) {
    const std::size_t dim = HLayout{K}.size();
    auto v = nu_functional_exact(nu, dim, [&](double z, std::span<double> out) {
      auto h = h_functionals_nested(th, params, z);
      std::copy(h.begin(), h.end(), out.begin());
    });
    std::copy(v.begin(), v.begin() + static_cast<long>(n), cs.a_f.begin());
    std::copy(v.begin() + static_cast<long>(n), v.begin() + static_cast<long>(2 * n),
              cs.a_F.begin());
    cs.p = v[HLayout{K}.p()];
  } else {
    const std::size_t dim = HLayout{K}.size();
    auto v = nu_functional_exact(nu, dim, [&](double z, std::span<double> out) {
      h_functionals(th, params, z, out);
    });
    std::copy(v.begin(), v.begin() + static_cast<long>(n), cs.a_f.begin());
    std::copy(v.begin() + static_cast<long>(n), v.begin() + static_cast<long>(2 * n),
              cs.a_F.begin());
    cs.p = p_value(model, th);
  }
  check_p(cs.p);
  auto A = build_Af(cs.a_f, params.alpha);
  cs.a_G = solve_aG(A, cs.a_F, &cs.solve_residual);
  return cs;
}

Eigen::MatrixXd build_Af(std::span<const double> a_f, double alpha) {
  const auto n = static_cast<Eigen::Index>(a_f.size());
  const double root = std::sqrt(2.0 * alpha);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    A(k, k) = 1.0 - a_f[0] / root;
    for (Eigen::Index l = 0; l < k; ++l) {
      A(k, l) = -(a_f[static_cast<std::size_t>(k - l)] -
                  a_f[static_cast<std::size_t>(k - l - 1)]) /
                root;
    }
  }
  return A;
}

std::vector<double> solve_aG(const Eigen::MatrixXd& A,
                             std::span<const double> a_F, double* residual) {
  const auto n = A.rows();
  if (A.cols() != n || static_cast<std::size_t>(n) != a_F.size()) {
    throw DomainError("solve_aG: dimension mismatch");
  }
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    smallest = std::min(smallest, std::abs(A(k, k)));
  }
  if (smallest < 1e-10) {
    throw IllConditioned("solve_aG: near-singular diagonal of A^f", smallest);
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = a_F[static_cast<std::size_t>(k)];
    for (Eigen::Index l = 0; l < k; ++l) s -= A(k, l) * x[static_cast<std::size_t>(l)];
    x[static_cast<std::size_t>(k)] = s / A(k, k);
  }
  double res = 0.0;
  double scale = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = 0.0;
    for (Eigen::Index l = 0; l <= k; ++l) s += A(k, l) * x[static_cast<std::size_t>(l)];
    res = std::max(res, std::abs(s - a_F[static_cast<std::size_t>(k)]));
    scale = std::max(scale, std::abs(a_F[static_cast<std::size_t>(k)]));
  }
  if (res > 1e-12 * std::max(scale, 1e-300) && res > 0.0) {
    throw NumericalFailure("solve_aG: residual above tolerance", res);
  }
  if (residual) *residual = res;
  return x;
}

double gbar_partial_sum(const CoefficientSet& coeffs, double x) {
  if (x < 0.0) throw DomainError("gbar_partial_sum needs x >= 0");
  return partial_sum(coeffs.a_G, coeffs.params.alpha, x);
}

ScaleTerms scale_terms(double x, const PlugIn& at,
                       const LaguerreParams& params) {
  at.validate();
  if (x < 0.0) throw DomainError("scale terms need x >= 0");
  const int K = params.K;
  const double alpha = params.alpha;
  const std::size_t n = params.size();
  const double gamma = gamma_eff(at.gamma);
  const double one_minus_p = 1.0 - at.p;

  ScaleTerms t;
  t.Q.resize(n);
  t.dQ_dp.resize(n);
  t.dQ_dgamma.resize(n);
  t.Qs.resize(n);
  t.dQs_dp.resize(n);
  t.dQs_dgamma.resize(n);

  std::vector<double> psi_g = psi_integral_all(alpha, K, x, gamma);
  std::vector<double> dpsi_g(n);
  psi_integral_db_all(alpha, K, x, gamma, psi_g, dpsi_g);

  if (at.D > 0.0) {
    const double D = at.D;
    const double beta = at.c / D + gamma;
    const double bg = beta + gamma;
    const double den = D * one_minus_p * bg;
    const double dlog_den = 2.0 / bg;  // d/dgamma log(beta + gamma)
    std::vector<double> psi_b = psi_integral_all(alpha, K, x, -beta);
    std::vector<double> dpsi_b(n);
    psi_integral_db_all(alpha, K, x, -beta, psi_b, dpsi_b);

    // e^{gamma x} - e^{-beta x} = e^{-beta x} expm1((beta + gamma) x)
    const double nP = std::exp(-beta * x) * std::expm1(bg * x);
    const double dnP = x * (std::exp(gamma * x) + std::exp(-beta * x));
    t.P = nP / den;
    t.dP_dgamma = dnP / den - t.P * dlog_den;

    const double nPs = exp_ratio(gamma, x) - exp_ratio(-beta, x);
    const double dnPs = exp_ratio_ds(gamma, x) + exp_ratio_ds(-beta, x);
    t.Ps = nPs / den;
    t.dPs_dgamma = dnPs / den - t.Ps * dlog_den;

    for (std::size_t k = 0; k < n; ++k) {
      const double nQ = gamma * psi_g[k] + beta * psi_b[k];
      const double dnQ = psi_g[k] + gamma * dpsi_g[k] + psi_b[k] - beta * dpsi_b[k];
      t.Q[k] = nQ / den;
      t.dQ_dgamma[k] = dnQ / den - t.Q[k] * dlog_den;
      const double nQs = psi_g[k] - psi_b[k];
      const double dnQs = dpsi_g[k] + dpsi_b[k];
      t.Qs[k] = nQs / den;
      t.dQs_dgamma[k] = dnQs / den - t.Qs[k] * dlog_den;
    }
  } else {
    const double den = at.c * one_minus_p;
    const double eg = std::exp(gamma * x);
    t.P = eg / den;
    t.dP_dgamma = x * eg / den;
    t.Ps = exp_ratio(gamma, x) / den;
    t.dPs_dgamma = exp_ratio_ds(gamma, x) / den;
    std::vector<double> phi = laguerre_fn_all(alpha, K, x);
    for (std::size_t k = 0; k < n; ++k) {
      t.Q[k] = (phi[k] + gamma * psi_g[k]) / den;
      t.dQ_dgamma[k] = (psi_g[k] + gamma * dpsi_g[k]) / den;
      t.Qs[k] = psi_g[k] / den;
      t.dQs_dgamma[k] = dpsi_g[k] / den;
    }
  }
  // every term carries 1 / (1 - p)
  t.dP_dp = t.P / one_minus_p;
  t.dPs_dp = t.Ps / one_minus_p;
  for (std::size_t k = 0; k < n; ++k) {
    t.dQ_dp[k] = t.Q[k] / one_minus_p;
    t.dQs_dp[k] = t.Qs[k] / one_minus_p;
  }
  return t;
}

double eval_P(double x, const PlugIn& at) {
  return scale_terms(x, at, LaguerreParams{1.0, 0}).P;
}

double eval_Pstar(double x, const PlugIn& at) {
  return scale_terms(x, at, LaguerreParams{1.0, 0}).Ps;
}

void eval_Q_all(double x, const PlugIn& at, const LaguerreParams& params,
                std::span<double> out) {
  auto t = scale_terms(x, at, params);
  std::copy(t.Q.begin(), t.Q.end(), out.begin());
}

void eval_Qstar_all(double x, const PlugIn& at, const LaguerreParams& params,
                    std::span<double> out) {
  auto t = scale_terms(x, at, params);
  std::copy(t.Qs.begin(), t.Qs.end(), out.begin());
}

double eval_Q(double x, int k, const PlugIn& at, const LaguerreParams& params) {
  if (k < 0) throw DomainError("eval_Q needs k >= 0");
  LaguerreParams upto{params.alpha, k};
  return scale_terms(x, at, upto).Q[static_cast<std::size_t>(k)];
}

double eval_Qstar(double x, int k, const PlugIn& at,
                  const LaguerreParams& params) {
  if (k < 0) throw DomainError("eval_Qstar needs k >= 0");
  LaguerreParams upto{params.alpha, k};
  return scale_terms(x, at, upto).Qs[static_cast<std::size_t>(k)];
}

double eval_W(double x, const PlugIn& at, const LaguerreParams& params,
              std::span<const double> a_G) {
  auto t = scale_terms(x, at, params);
  double dot = 0.0;
  for (std::size_t k = 0; k < a_G.size(); ++k) dot += t.Q[k] * a_G[k];
  return t.P - dot;
}

double eval_Z(double x, double q, const PlugIn& at,
              const LaguerreParams& params, std::span<const double> a_G) {
  auto t = scale_terms(x, at, params);
  double dot = 0.0;
  for (std::size_t k = 0; k < a_G.size(); ++k) dot += t.Qs[k] * a_G[k];
  return 1.0 + q * (t.Ps - dot);
}

ScaleApprox::ScaleApprox(const LevyModel& model, const LaguerreParams& params,
                         CoeffMethod method)
    : model_(model), coeffs_(coeffs_true(model, params, method)) {}

ScaleApprox::ScaleApprox(const LevyModel& model, CoefficientSet coeffs)
    : model_(model), coeffs_(std::move(coeffs)) {}

PlugIn ScaleApprox::plug_in() const {
  return {model_.c, coeffs_.theta.D, coeffs_.theta.gamma, coeffs_.p};
}

double ScaleApprox::W(double x) const {
  return eval_W(x, plug_in(), coeffs_.params, coeffs_.a_G);
}

double ScaleApprox::Z(double x) const {
  return eval_Z(x, model_.q, plug_in(), coeffs_.params, coeffs_.a_G);
}

double eval_WK(const ScaleApprox& approx, double x) { return approx.W(x); }
double eval_ZK(const ScaleApprox& approx, double x) { return approx.Z(x); }

void write_curve_csv(const std::string& path, const ScaleApprox& approx,
                     std::span<const double> xs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << std::setprecision(17);
  out << "x,W_K,Z_K\n";
  for (double x : xs) out << x << ',' << approx.W(x) << ',' << approx.Z(x) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace levyscale
