#include "levyscale/levy_model.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "levyscale/errors.hpp"
#include "levyscale/quadrature.hpp"

namespace levyscale {

std::string to_string(JumpKind kind) {
  switch (kind) {
    case JumpKind::none:
      return "none";
    case JumpKind::compound_poisson_exponential:
      return "compound_poisson_exponential";
    case JumpKind::compound_poisson_gamma:
      return "compound_poisson_gamma";
    case JumpKind::gamma_subordinator:
      return "gamma_subordinator";
  }
  return "unknown";
}

JumpMeasure JumpMeasure::none() { return JumpMeasure{}; }

JumpMeasure JumpMeasure::exponential(double rate, double mu) {
  if (!(rate > 0.0) || !(mu > 0.0)) {
    throw DomainError("exponential jumps need rate > 0 and mu > 0");
  }
  JumpMeasure m;
  m.kind_ = JumpKind::compound_poisson_exponential;
  m.rate_ = rate;
  m.mu_ = mu;
  return m;
}

JumpMeasure JumpMeasure::compound_gamma(double rate, double shape,
                                        double scale) {
  if (!(rate > 0.0) || !(shape > 0.0) || !(scale > 0.0)) {
    throw DomainError("gamma jumps need rate, shape, scale > 0");
  }
  JumpMeasure m;
  m.kind_ = JumpKind::compound_poisson_gamma;
  m.rate_ = rate;
  m.shape_ = shape;
  m.scale_ = scale;
  return m;
}

JumpMeasure JumpMeasure::gamma_subordinator(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma subordinator needs shape > 0 and rate > 0");
  }
  JumpMeasure m;
  m.kind_ = JumpKind::gamma_subordinator;
  m.shape_ = shape;
  m.rate_ = rate;
  return m;
}

double JumpMeasure::density(double z) const {
  if (z <= 0.0) return 0.0;
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return rate_ * mu_ * std::exp(-mu_ * z);
    case JumpKind::compound_poisson_gamma:
      return rate_ * std::exp((shape_ - 1.0) * std::log(z) - z / scale_ -
                              std::lgamma(shape_) - shape_ * std::log(scale_));
    case JumpKind::gamma_subordinator:
      return shape_ * std::exp(-rate_ * z) / z;
  }
  return 0.0;
}

double JumpMeasure::tail(double x) const {
  x = std::max(x, 0.0);
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return rate_ * std::exp(-mu_ * x);
    case JumpKind::compound_poisson_gamma:
      return rate_ * boost::math::gamma_q(shape_, x / scale_);
    case JumpKind::gamma_subordinator:
      if (x == 0.0) return std::numeric_limits<double>::infinity();
      return shape_ * boost::math::expint(1, rate_ * x);
  }
  return 0.0;
}

double JumpMeasure::total_mass() const { return tail(0.0); }

double JumpMeasure::mean() const {
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return rate_ / mu_;
    case JumpKind::compound_poisson_gamma:
      return rate_ * shape_ * scale_;
    case JumpKind::gamma_subordinator:
      return shape_ / rate_;
  }
  return 0.0;
}

double JumpMeasure::second_moment() const {
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return 2.0 * rate_ / (mu_ * mu_);
    case JumpKind::compound_poisson_gamma:
      return rate_ * shape_ * (shape_ + 1.0) * scale_ * scale_;
    case JumpKind::gamma_subordinator:
      return shape_ / (rate_ * rate_);
  }
  return 0.0;
}

double JumpMeasure::small_jump_moment(double eps, int power) const {
  if (power != 1 && power != 2) {
    throw DomainError("small_jump_moment supports power 1 or 2");
  }
  if (eps <= 0.0) return 0.0;
  const double moment = power == 1 ? mean() : second_moment();
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return moment * boost::math::gamma_p(1.0 + power, mu_ * eps);
    case JumpKind::compound_poisson_gamma:
      return moment * boost::math::gamma_p(shape_ + power, eps / scale_);
    case JumpKind::gamma_subordinator:
      return moment * boost::math::gamma_p(static_cast<double>(power),
                                           rate_ * eps);
  }
  return 0.0;
}

double JumpMeasure::laplace_term(double theta) const {
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return -rate_ * theta / (mu_ + theta);
    case JumpKind::compound_poisson_gamma:
      return rate_ * std::expm1(-shape_ * std::log1p(scale_ * theta));
    case JumpKind::gamma_subordinator:
      return -shape_ * std::log1p(theta / rate_);
  }
  return 0.0;
}

std::complex<double> JumpMeasure::laplace_term(
    std::complex<double> theta) const {
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return -rate_ * theta / (mu_ + theta);
    case JumpKind::compound_poisson_gamma:
      return rate_ * (std::pow(1.0 + scale_ * theta, -shape_) - 1.0);
    case JumpKind::gamma_subordinator:
      return -shape_ * std::log(1.0 + theta / rate_);
  }
  return 0.0;
}

double JumpMeasure::laplace_term_deriv(double theta) const {
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return -rate_ * mu_ / ((mu_ + theta) * (mu_ + theta));
    case JumpKind::compound_poisson_gamma:
      return -rate_ * shape_ * scale_ *
             std::exp(-(shape_ + 1.0) * std::log1p(scale_ * theta));
    case JumpKind::gamma_subordinator:
      return -shape_ / (rate_ + theta);
  }
  return 0.0;
}

double JumpMeasure::exp_tail(double y, double gamma) const {
  y = std::max(y, 0.0);
  switch (kind_) {
    case JumpKind::none:
      return 0.0;
    case JumpKind::compound_poisson_exponential:
      return rate_ * mu_ * std::exp(-mu_ * y) / (mu_ + gamma);
    case JumpKind::compound_poisson_gamma: {
      const double r = 1.0 / scale_ + gamma;
      const double q = boost::math::gamma_q(shape_, r * y);
      if (q == 0.0) return 0.0;
      return rate_ * std::exp(gamma * y - shape_ * std::log1p(scale_ * gamma)) *
             q;
    }
    case JumpKind::gamma_subordinator: {
      if (y == 0.0) return std::numeric_limits<double>::infinity();
      const double e1 = boost::math::expint(1, (rate_ + gamma) * y);
      if (e1 == 0.0) return 0.0;
      return shape_ * std::exp(gamma * y) * e1;
    }
  }
  return 0.0;
}

double JumpMeasure::decay_rate() const {
  switch (kind_) {
    case JumpKind::none:
      return 1.0;
    case JumpKind::compound_poisson_exponential:
      return mu_;
    case JumpKind::compound_poisson_gamma:
      return 1.0 / scale_;
    case JumpKind::gamma_subordinator:
      return rate_;
  }
  return 1.0;
}

double LevyModel::sigma() const { return std::sqrt(2.0 * D); }

void LevyModel::validate(bool require_npc) const {
  if (!(D >= 0.0)) throw DomainError("D must be >= 0");
  if (!(q >= 0.0)) throw DomainError("q must be >= 0");
  if (!std::isfinite(c) || !std::isfinite(x0)) {
    throw DomainError("c and x0 must be finite");
  }
  if (require_npc && !check_npc(*this).holds) {
    throw DomainError("net profit condition c > nu(z) violated");
  }
}

double ThetaParams::beta() const { return D > 0.0 ? c / D + gamma : gamma; }

double laplace_exponent(const LevyModel& model, double theta) {
  if (theta < 0.0) throw DomainError("laplace_exponent needs theta >= 0");
  return model.c * theta + model.D * theta * theta +
         model.jumps.laplace_term(theta);
}

std::complex<double> laplace_exponent(const LevyModel& model,
                                      std::complex<double> theta) {
  return model.c * theta + model.D * theta * theta +
         model.jumps.laplace_term(theta);
}

double laplace_exponent_deriv(const LevyModel& model, double theta) {
  if (theta < 0.0) throw DomainError("laplace_exponent_deriv needs theta >= 0");
  return model.c + 2.0 * model.D * theta +
         model.jumps.laplace_term_deriv(theta);
}

NpcCheck check_npc(const LevyModel& model) {
  const double margin = model.c - model.jumps.mean();
  return {margin > 0.0, margin};
}

double lundberg_exponent(const LevyModel& model, double q, double theta_max) {
  if (q < 0.0) throw DomainError("lundberg_exponent needs q >= 0");
  const auto npc = check_npc(model);
  if (!npc.holds) {
    throw DomainError("lundberg_exponent: net profit condition violated");
  }
  if (q == 0.0) return 0.0;

  auto excess = [&](double t) { return laplace_exponent(model, t) - q; };
  double hi = theta_max;
  for (int i = 0; excess(hi) <= 0.0; ++i) {
    if (i > 60) {
      throw NumericalFailure("lundberg_exponent: no bracket found", excess(hi));
    }
    hi *= 2.0;
  }
  double lo = 0.0;
  while (hi - lo > 1e-8 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  double root = 0.5 * (lo + hi);
  for (int i = 0; i < 5; ++i) {
    const double f = excess(root);
    const double next = root - f / laplace_exponent_deriv(model, root);
    if (!(next >= lo && next <= hi)) break;
    if (next == root) break;
    root = next;
  }
  const double residual = std::abs(excess(root));
  if (residual > 1e-12 * std::max(1.0, q)) {
    throw NumericalFailure("lundberg_exponent: residual above tolerance",
                           residual);
  }
  return root;
}

ThetaParams true_theta(const LevyModel& model) {
  return {model.c, model.D, lundberg_exponent(model, model.q)};
}

std::vector<double> nu_functional_exact(
    const JumpMeasure& nu, std::size_t dim,
    const std::function<void(double, std::span<double>)>& h) {
  if (nu.is_none()) return std::vector<double>(dim, 0.0);
  const double decay = nu.decay_rate();
  const double split = 1.0 / decay;
  quad::Tolerance tol;
  tol.rel = 1e-10;
  tol.abs = 1e-15;

  std::vector<double> hv(dim);
  auto integrand = [&](double z, std::span<double> out) {
    const double rho = nu.density(z);
    if (rho == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    h(z, hv);
    for (std::size_t d = 0; d < dim; ++d) out[d] = hv[d] * rho;
  };
  auto head = quad::integrate_vector(integrand, dim, 0.0, split, tol);
  auto tail = quad::integrate_vector_to_infinity(integrand, dim, split, decay,
                                                 tol);
  if (!head.converged || !tail.converged) {
    throw NumericalFailure("nu_functional_exact: quadrature did not converge",
                           head.error + tail.error);
  }
  for (std::size_t d = 0; d < dim; ++d) head.value[d] += tail.value[d];
  return head.value;
}

double nu_functional_exact(const JumpMeasure& nu,
                           const std::function<double(double)>& h) {
  return nu_functional_exact(nu, 1, [&](double z, std::span<double> out) {
    out[0] = h(z);
  })[0];
}

}  // namespace levyscale
