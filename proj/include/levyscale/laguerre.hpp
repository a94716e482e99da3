#pragma once

#include <span>
#include <vector>

namespace levyscale {

/// Basis scale alpha and truncation order K of the Laguerre expansion.
struct LaguerreParams {
  double alpha = 1.0;
  int K = 40;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(K) + 1; }
};

/// L_k(x) by the three-term recurrence.
double laguerre_poly(int k, double x);

/// phi_{alpha,k}(x) = sqrt(2 alpha) L_k(2 alpha x) exp(-alpha x).
double laguerre_fn(double alpha, int k, double x);

/// phi_{alpha,0..K}(x) into out[0..K]. The exponential factor is folded
/// into the seeds of the recurrence, so large x never overflows.
void laguerre_fn_all(double alpha, int K, double x, std::span<double> out);
std::vector<double> laguerre_fn_all(double alpha, int K, double x);

/// Psi_{alpha,k}(x; b) = int_0^x e^{b (x - z)} phi_{alpha,k}(z) dz.
double psi_integral(const LaguerreParams& params, int k, double x, double b);

/// Psi_{alpha,0..K}(x; b) into out[0..K].
///
/// Integrating phi_k' = -alpha phi_k - 2 alpha sum_{j<k} phi_j against the
/// kernel gives the first-order recurrence
///   (b + alpha) Psi_k = (b - alpha) Psi_{k-1} - (phi_k - phi_{k-1}).
/// It is run upwards when |(b - alpha)/(b + alpha)|^K stays small and
/// downwards from a padded start otherwise, which also covers b = -alpha.
void psi_integral_all(double alpha, int K, double x, double b,
                      std::span<double> out);
std::vector<double> psi_integral_all(double alpha, int K, double x, double b);

/// d/db Psi_{alpha,0..K}(x; b), same recurrence differentiated in b.
/// `psi` must hold psi_integral_all(alpha, K, x, b).
void psi_integral_db_all(double alpha, int K, double x, double b,
                         std::span<const double> psi, std::span<double> out);

/// <f, phi_{alpha,k}> for f sampled on x_i = i h, i = 0..n-1 (composite
/// Simpson). `tail_bound` estimates sqrt(2 alpha) int_{x_max}^inf |f|
/// assuming exponential decay past the grid; +inf if f does not decay.
struct Projection {
  double value = 0.0;
  double tail_bound = 0.0;
};
Projection project_grid(std::span<const double> f, double h,
                        const LaguerreParams& params, int k);

/// sum_k coeffs[k] phi_{alpha,k}(x).
double partial_sum(std::span<const double> coeffs, double alpha, double x);

}  // namespace levyscale
