#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace levyscale {

enum class JumpKind {
  none,
  compound_poisson_exponential,
  compound_poisson_gamma,
  gamma_subordinator,
};

std::string to_string(JumpKind kind);

/// Levy measure nu of the subordinator L on (0, inf). Parametric families
/// only; every functional the library needs has a closed form here.
///
///   compound_poisson_exponential: nu(dz) = rate * mu * exp(-mu z) dz
///   compound_poisson_gamma:       nu(dz) = rate * Gamma(shape, scale) density
///   gamma_subordinator:           nu(dz) = shape * z^{-1} exp(-rate z) dz
class JumpMeasure {
 public:
  JumpMeasure() = default;

  static JumpMeasure none();
  static JumpMeasure exponential(double rate, double mu);
  static JumpMeasure compound_gamma(double rate, double shape, double scale);
  static JumpMeasure gamma_subordinator(double shape, double rate);

  JumpKind kind() const noexcept { return kind_; }
  bool is_none() const noexcept { return kind_ == JumpKind::none; }
  bool finite_activity() const noexcept {
    return kind_ != JumpKind::gamma_subordinator;
  }

  // Family parameters; meaning depends on kind() (see class comment).
  double rate() const noexcept { return rate_; }
  double mu() const noexcept { return mu_; }
  double shape() const noexcept { return shape_; }
  double scale() const noexcept { return scale_; }

  /// Density of nu w.r.t. Lebesgue measure.
  double density(double z) const;
  /// nu((x, inf)); infinite at 0 for the gamma subordinator.
  double tail(double x) const;
  /// nu(R_+); +inf for infinite activity.
  double total_mass() const;
  /// nu(z) and nu(z^2).
  double mean() const;
  double second_moment() const;
  /// int_0^eps z^power nu(dz), power in {1, 2}.
  double small_jump_moment(double eps, int power) const;

  /// nu(e^{-theta z} - 1), theta >= 0 (or Re theta > -decay for complex).
  double laplace_term(double theta) const;
  std::complex<double> laplace_term(std::complex<double> theta) const;
  /// d/dtheta nu(e^{-theta z} - 1) = -nu(z e^{-theta z}).
  double laplace_term_deriv(double theta) const;

  /// int_y^inf e^{-gamma (z - y)} nu(dz). This is the inner integral of
  /// the density f~_q and reduces to a closed form for each family.
  double exp_tail(double y, double gamma) const;

  /// Exponential decay rate of the density at infinity; used as the scale
  /// of semi-infinite quadrature maps.
  double decay_rate() const;

 private:
  JumpKind kind_ = JumpKind::none;
  double rate_ = 0.0;
  double mu_ = 0.0;
  double shape_ = 0.0;
  double scale_ = 0.0;
};

/// X_t = x0 + c t + sigma W_t - L_t with D = sigma^2 / 2, plus the discount
/// rate q of the scale function.
struct LevyModel {
  double x0 = 0.0;
  double c = 0.0;
  double D = 0.0;
  double q = 0.0;
  JumpMeasure jumps;

  double sigma() const;
  /// Throws DomainError when D < 0, q < 0 or (require_npc) NPC fails.
  void validate(bool require_npc = false) const;
};

/// theta = (D, gamma) with the known premium rate c carried along so that
/// beta can be derived.
struct ThetaParams {
  double c = 0.0;
  double D = 0.0;
  double gamma = 0.0;

  /// c / D + gamma when D > 0, gamma otherwise.
  double beta() const;
};

double laplace_exponent(const LevyModel& model, double theta);
std::complex<double> laplace_exponent(const LevyModel& model,
                                      std::complex<double> theta);
double laplace_exponent_deriv(const LevyModel& model, double theta);

struct NpcCheck {
  bool holds;
  double margin;  // c - nu(z)
};
NpcCheck check_npc(const LevyModel& model);

/// Phi(q): largest root of psi(theta) = q. Requires NPC.
double lundberg_exponent(const LevyModel& model, double q,
                         double theta_max = 50.0);

/// True parameter theta_0 = (D, Phi(q)) of the model.
ThetaParams true_theta(const LevyModel& model);

/// Quadrature of int H dnu over (0, inf) for an R^dim-valued H, relative
/// tolerance 1e-10. Throws NumericalFailure when not converged.
std::vector<double> nu_functional_exact(
    const JumpMeasure& nu, std::size_t dim,
    const std::function<void(double, std::span<double>)>& h);
double nu_functional_exact(const JumpMeasure& nu,
                           const std::function<double(double)>& h);

}  // namespace levyscale
