#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "levyscale/laguerre.hpp"
#include "levyscale/levy_model.hpp"
#include "levyscale/scale_series.hpp"
#include "levyscale/simulator.hpp"

namespace levyscale {

/// Jump-corrected realised variance over [0, T_est], halved. Raw value;
/// `negative` is set when it is below zero.
struct DEstimate {
  double value = 0.0;
  bool negative = false;
};
DEstimate estimate_D(const ObservationSet& obs, double T_est = 1.0);

/// (1 / T) sum over recorded jumps of H(size), R^dim-valued.
std::vector<double> nu_hat(const ObservationSet& obs, std::size_t dim,
                           const std::function<void(double, std::span<double>)>& H);
double nu_hat(const ObservationSet& obs, const std::function<double(double)>& H);

/// Root of c r + D r^2 + nu_hat(e^{-r z} - 1) = q; exactly 0 when q = 0.
struct GammaEstimate {
  double value = 0.0;
  bool boundary = false;  // no sign change; best point of the box returned
};
GammaEstimate estimate_gamma(const ObservationSet& obs, double q, double D_hat,
                             double c);

/// Empirical psi'(r) = c + 2 D r - nu_hat(z e^{-r z}).
double psi_hat_deriv(const ObservationSet& obs, double r, double D, double c);

struct CoeffEstimate {
  ThetaParams theta;   // (max(D_raw, 0), gamma_hat)
  double D_raw = 0.0;
  bool D_negative = false;
  bool gamma_boundary = false;
  double p = 0.0;
  std::vector<double> a_f, a_F, a_G;
  LaguerreParams params;
  double solve_residual = 0.0;
};

/// theta_hat, p_hat and coefficient estimates. Throws DegenerateEstimate
/// when p_hat >= 1 and IllConditioned when A^f is near singular.
/// With `theta_override`, theta_hat is replaced (oracle mode).
CoeffEstimate estimate_coeffs(const ObservationSet& obs, double q, double c,
                              const LaguerreParams& params, double T_est = 1.0,
                              std::optional<ThetaParams> theta_override = {});

PlugIn plug_in(const CoeffEstimate& est);

/// W_hat_K(x) and Z_hat_K(x).
struct CurvePoint {
  double W = 0.0;
  double Z = 0.0;
};
CurvePoint estimate_W(const CoeffEstimate& est, double q, double x);

/// Plug-in covariance blocks. Parameter order of Sigma / Gamma:
/// [a^f_0..K, a^F_0..K, p, gamma], size 2K + 4.
struct Covariance {
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Gamma;
  Eigen::MatrixXd B;  // (K+1) x (2K+2): d a^G / d (a^f, a^F)
  double min_eigenvalue = 0.0;
  bool psd = true;
  double psi_deriv = 0.0;  // psi_hat'(gamma_hat)
};
Covariance covariance(const ObservationSet& obs, const CoeffEstimate& est,
                      double q);

/// Stacked influence vector (H^f, H^F, H_p, H~_gamma)(z) with
/// H~_gamma(z) = (1 - e^{-gamma z}) / psi'(gamma).
void influence_vector(const ThetaParams& theta, const LaguerreParams& params,
                      double psi_deriv, double z, std::span<double> out);

/// nu(H~ H~^T) at the true parameters by quadrature: the population
/// counterpart of Sigma_hat.
Eigen::MatrixXd population_sigma(const LevyModel& model,
                                 const LaguerreParams& params);

/// Gradient rows C_K(x) and C*_K(x) of W and (P* - Q* a^G) with respect to
/// the parameter vector.
struct Gradients {
  Eigen::RowVectorXd C;
  Eigen::RowVectorXd Cstar;
};
Gradients gradients(const CoeffEstimate& est, const Eigen::MatrixXd& B,
                    double x);

struct PointInference {
  double x = 0.0;
  double W = 0.0, Z = 0.0;
  double sigma_K = 0.0, sigma_star_K = 0.0;
  Eigen::Matrix2d joint = Eigen::Matrix2d::Zero();
  double W_lo = 0.0, W_hi = 0.0, Z_lo = 0.0, Z_hi = 0.0;
  bool ci_available = true;
};

struct EstimationReport {
  CoeffEstimate est;
  double q = 0.0;
  double c = 0.0;
  double ci_level = 0.95;
  SamplingScheme scheme;
  std::size_t jump_count = 0;
  Covariance cov;
  std::vector<PointInference> points;
  bool degenerate = false;
  double p_raw = 0.0;
  std::string note;
};

struct EstimateOptions {
  double T_est = 1.0;
  double ci_level = 0.95;
  std::optional<ThetaParams> theta_override;
};

/// Full pipeline on one data set. A degenerate p_hat is reported in the
/// result (degenerate = true, no curves) rather than thrown.
EstimationReport estimate_report(const ObservationSet& obs, double q, double c,
                                 const LaguerreParams& params,
                                 std::span<const double> xs,
                                 const EstimateOptions& opts = {});

std::string report_json(const EstimationReport& report);
void write_report(const EstimationReport& report, const std::string& json_path,
                  const std::string& csv_path);

/// nu(k_gamma^2) / psi'(gamma)^2 with k_gamma(z) = e^{-gamma z} - 1.
double gamma_asymptotic_variance(const LevyModel& model);

/// Anderson-Darling A^2 of a sample against N(0, 1) and its upper-tail
/// p-value (asymptotic distribution, parameters known).
struct NormalityScreen {
  double A2 = 0.0;
  double p_value = 1.0;
};
NormalityScreen anderson_darling_standard(std::vector<double> z);

}  // namespace levyscale
