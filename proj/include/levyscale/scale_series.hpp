#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "levyscale/laguerre.hpp"
#include "levyscale/levy_model.hpp"

namespace levyscale {

/// Expansion state: p and the coefficient vectors of p f_q, p Fbar_q and
/// Gbar_q in the Laguerre basis.
struct CoefficientSet {
  double p = 0.0;
  std::vector<double> a_f;
  std::vector<double> a_F;
  std::vector<double> a_G;
  LaguerreParams params;
  ThetaParams theta;
  double solve_residual = 0.0;  // |A a_G - a_F|_inf
};

/// Layout of the stacked functional vector returned by h_functionals:
/// [H^f_0..K, H^F_0..K, H_p], length 2K + 3.
struct HLayout {
  int K;
  std::size_t f(int k) const { return static_cast<std::size_t>(k); }
  std::size_t F(int k) const { return static_cast<std::size_t>(K + 1 + k); }
  std::size_t p() const { return static_cast<std::size_t>(2 * K + 2); }
  std::size_t size() const { return static_cast<std::size_t>(2 * K + 3); }
};

enum class CoeffMethod {
  closed_form,  // exact integrals where the jump family allows, else quadrature
  quadrature,   // nu-quadrature of the closed-form H functionals
  nested,       // nu-quadrature of nested-quadrature H functionals (slow)
};

/// Density part f~_q(x) of the ladder-height law (p f_q = f~_q).
double ftilde_q(const LevyModel& model, const ThetaParams& theta, double x);

/// p = nu(H_p(.; theta)). DomainError if NPC fails or the result is >= 1.
double p_value(const LevyModel& model, const ThetaParams& theta);

/// H_p(z; theta) alone.
double h_p(const ThetaParams& theta, double z);

/// Stacked (H^f, H^F, H_p)(z; theta) into out (HLayout order).
void h_functionals(const ThetaParams& theta, const LaguerreParams& params,
                   double z, std::span<double> out);
std::vector<double> h_functionals(const ThetaParams& theta,
                                  const LaguerreParams& params, double z);

/// Cross-check path: the same functionals from their defining iterated
/// integrals by adaptive quadrature.
std::vector<double> h_functionals_nested(const ThetaParams& theta,
                                         const LaguerreParams& params,
                                         double z);

/// d/dgamma of the stacked functionals (beta moves with gamma, D fixed),
/// from the differentiated recurrences.
void h_functionals_dgamma(const ThetaParams& theta,
                          const LaguerreParams& params, double z,
                          std::span<double> out);

/// Central-difference version of h_functionals_dgamma (one-sided at
/// gamma = 0).
void h_functionals_dgamma_fd(const ThetaParams& theta,
                             const LaguerreParams& params, double z,
                             std::span<double> out, double step = 1e-6);

/// Coefficients at the true parameter theta_0 = (D, Phi(q)).
CoefficientSet coeffs_true(const LevyModel& model, const LaguerreParams& params,
                           CoeffMethod method = CoeffMethod::closed_form);

/// Lower-triangular Toeplitz matrix A^f_K.
Eigen::MatrixXd build_Af(std::span<const double> a_f, double alpha);

/// Forward substitution A a_G = a_F. IllConditioned when a pivot is below
/// 1e-10 in magnitude; NumericalFailure when the residual exceeds
/// 1e-12 |a_F|_inf. `residual` receives |A a_G - a_F|_inf when given.
std::vector<double> solve_aG(const Eigen::MatrixXd& A,
                             std::span<const double> a_F,
                             double* residual = nullptr);

/// Gbar_{q,K}(x) = sum_k a^G_k phi_k(x).
double gbar_partial_sum(const CoefficientSet& coeffs, double x);

/// Point (p, gamma, D) at which P, Q, P*, Q* are evaluated, with c known.
struct PlugIn {
  double c = 0.0;
  double D = 0.0;
  double gamma = 0.0;
  double p = 0.0;
  void validate() const;
};

double eval_P(double x, const PlugIn& at);
double eval_Pstar(double x, const PlugIn& at);
double eval_Q(double x, int k, const PlugIn& at, const LaguerreParams& params);
double eval_Qstar(double x, int k, const PlugIn& at,
                  const LaguerreParams& params);
void eval_Q_all(double x, const PlugIn& at, const LaguerreParams& params,
                std::span<double> out);
void eval_Qstar_all(double x, const PlugIn& at, const LaguerreParams& params,
                    std::span<double> out);

/// Values and (p, gamma)-gradients of the P/Q terms at one x.
struct ScaleTerms {
  double P = 0.0, dP_dp = 0.0, dP_dgamma = 0.0;
  double Ps = 0.0, dPs_dp = 0.0, dPs_dgamma = 0.0;
  std::vector<double> Q, dQ_dp, dQ_dgamma;
  std::vector<double> Qs, dQs_dp, dQs_dgamma;
};
ScaleTerms scale_terms(double x, const PlugIn& at,
                       const LaguerreParams& params);

/// W_K = P - Q.a_G and Z_K = 1 + q (P* - Q*.a_G) at a plug-in point.
double eval_W(double x, const PlugIn& at, const LaguerreParams& params,
              std::span<const double> a_G);
double eval_Z(double x, double q, const PlugIn& at,
              const LaguerreParams& params, std::span<const double> a_G);

/// W_K and Z_K for a model at its true parameters.
class ScaleApprox {
 public:
  ScaleApprox(const LevyModel& model, const LaguerreParams& params,
              CoeffMethod method = CoeffMethod::closed_form);
  ScaleApprox(const LevyModel& model, CoefficientSet coeffs);

  const LevyModel& model() const { return model_; }
  const CoefficientSet& coeffs() const { return coeffs_; }
  PlugIn plug_in() const;

  double W(double x) const;
  double Z(double x) const;

 private:
  LevyModel model_;
  CoefficientSet coeffs_;
};

double eval_WK(const ScaleApprox& approx, double x);
double eval_ZK(const ScaleApprox& approx, double x);

/// CSV with header x,W_K,Z_K and one row per grid point.
void write_curve_csv(const std::string& path, const ScaleApprox& approx,
                     std::span<const double> xs);

}  // namespace levyscale
