#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace levyscale::quad {

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-13;
  int max_subdivisions = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

struct VectorResult {
  std::vector<double> value;
  double error = 0.0;  // max-norm error estimate
  bool converged = true;
};

/// Vector integrand: writes f(x) into `out` (size fixed by the caller).
using VectorIntegrand = std::function<void(double, std::span<double>)>;

/// Adaptive Gauss-Kronrod (7/15) on a finite interval.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol = {});

/// Integral over [a, inf) through the substitution x = a - log(u) / scale.
/// `scale` should roughly match the decay rate of the integrand.
Result integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double scale, const Tolerance& tol = {});

/// Same as `integrate`, for R^dim-valued integrands. Subdivision is driven
/// by the largest component error.
VectorResult integrate_vector(const VectorIntegrand& f, std::size_t dim,
                              double a, double b, const Tolerance& tol = {});

VectorResult integrate_vector_to_infinity(const VectorIntegrand& f,
                                          std::size_t dim, double a,
                                          double scale,
                                          const Tolerance& tol = {});

/// Fixed composite 20-point Gauss-Legendre rule on [a, b] split into
/// `panels` equal panels. Used where the integrand is entire and a fixed
/// cost is preferable to adaptivity.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule gauss_legendre_panels(double a, double b, int panels);

}  // namespace levyscale::quad
