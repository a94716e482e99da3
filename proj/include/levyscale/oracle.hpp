#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyscale/levy_model.hpp"

namespace levyscale::oracle {

/// Value of an inverted transform with an error estimate from comparing
/// against the same method at half the node count.
struct Inversion {
  double value = 0.0;
  double error_estimate = 0.0;
  bool flagged = false;  // error_estimate above the requested tolerance
};

struct TalbotOptions {
  int nodes = 32;
  double tolerance = 1e-6;  // relative, for the flag
};

/// W^(q)(x) by fixed-Talbot inversion of 1/(psi(theta) - q), run on the
/// transform shifted by Phi(q) so that its rightmost singularity sits at 0.
Inversion laplace_invert_scale(const LevyModel& model, double q, double x,
                               const TalbotOptions& opts = {});

/// Same target by Euler summation of the Bromwich integral (cross-check).
Inversion laplace_invert_scale_euler(const LevyModel& model, double q,
                                     double x);

/// Distribution on a uniform grid x_i = i h, i = 0..n-1, with an atom at 0.
/// `gbar` is the tail P(> x_i); `density` the absolutely continuous part;
/// `tail_mass` = gbar at the last node (mass beyond the grid).
struct GridDistribution {
  double h = 0.0;
  double x_max = 0.0;
  double atom = 0.0;
  std::vector<double> density;
  std::vector<double> gbar;

  std::size_t size() const { return gbar.size(); }
  /// atom + trapezoid of density + mass beyond x_max.
  double total_mass() const;
  /// Linear interpolation of gbar; 0 past x_max.
  double gbar_at(double x) const;
};

/// Compound geometric law with parameter p and ladder density f (mass 1)
/// sampled on x_i = i h, through the defective renewal equation
///   Gbar = p Fbar + p f * Gbar
/// marched with trapezoid weights. `fbar` is the tail of f on the same grid;
/// when absent it is 1 - (cumulative trapezoid of f). Throws DomainError for
/// p outside [0, 1) and NumericalFailure when the mass deficit exceeds 1e-4.
GridDistribution compound_geometric_grid(
    std::span<const double> f, double p, double h,
    std::optional<std::span<const double>> fbar = std::nullopt);

/// Cross-check: sum_k (1 - p) p^k F^{*k} by repeated trapezoid convolution,
/// stopped when p^k < 1e-12. Returns gbar on the grid.
std::vector<double> compound_geometric_series(std::span<const double> f,
                                              double p, double h);

/// Ladder density f_q = f~_q / p of a model on a grid, with x_max doubled
/// from `x_max` until the tail mass p Fbar_q(x_max) is below 1e-6.
struct LadderGrid {
  double p = 0.0;
  double h = 0.0;
  std::vector<double> f;
  std::vector<double> fbar;
};
LadderGrid ladder_grid(const LevyModel& model, double h, double x_max);

/// Gbar_q on a grid for a model (ladder_grid + compound_geometric_grid).
GridDistribution model_gbar_grid(const LevyModel& model, double h,
                                 double x_max);

enum class ClosedFormKind { brownian_drift, cramer_lundberg_exponential };

/// Exact W^(q) for the supported special cases. The model must be of the
/// matching kind (no jumps / exponential jumps with D = 0).
double closed_form_W(ClosedFormKind kind, const LevyModel& model, double q,
                     double x);

/// Oracle CSV: x, W_talbot, W_closed, err_estimate. W_closed is empty when
/// `kind` is not given.
void write_oracle_csv(const std::string& path, const LevyModel& model,
                      double q, std::span<const double> xs,
                      std::optional<ClosedFormKind> kind);

}  // namespace levyscale::oracle
