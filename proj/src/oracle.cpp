#include "levyscale/oracle.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "levyscale/errors.hpp"
#include "levyscale/quadrature.hpp"
#include "levyscale/scale_series.hpp"

namespace levyscale::oracle {
namespace {

using cd = std::complex<double>;

// Shifted transform s -> 1 / (psi(s + Phi) - q).
struct ShiftedTransform {
  const LevyModel& model;
  double q;
  double phi;
  cd operator()(cd s) const {
    return 1.0 / (laplace_exponent(model, s + phi) - q);
  }
};

double talbot(const ShiftedTransform& F, double t, int M) {
  const double pi = std::numbers::pi;
  const double r = 2.0 * M / (5.0 * t);
  double sum = 0.5 * std::exp(r * t) * F(cd(r, 0.0)).real();
  for (int k = 1; k < M; ++k) {
    const double theta = k * pi / M;
    const double cot = std::cos(theta) / std::sin(theta);
    const cd s(r * theta * cot, r * theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    sum += (std::exp(t * s) * F(s) * cd(1.0, sigma)).real();
  }
  return r / M * sum;
}

// Abate-Whitt Euler summation with binomial averaging of partial sums.
double euler(const ShiftedTransform& F, double t, int N, int M) {
  const double pi = std::numbers::pi;
  const double A = 18.4;
  const double scale = std::exp(A / 2.0) / t;
  std::vector<double> partial;
  double s = 0.5 * F(cd(A / (2.0 * t), 0.0)).real();
  for (int k = 1; k <= N + M; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s += sign * F(cd(A / (2.0 * t), k * pi / t)).real();
    if (k >= N) partial.push_back(s);
  }
  double avg = 0.0;
  double binom = 1.0;  // C(M, j)
  for (int j = 0; j <= M; ++j) {
    avg += binom * partial[static_cast<std::size_t>(j)];
    binom = binom * (M - j) / (j + 1.0);
  }
  return scale * avg / std::pow(2.0, M);
}

std::vector<double> trapezoid_convolve(std::span<const double> a,
                                       std::span<const double> b, double h) {
  const std::size_t n = a.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double s = 0.5 * (a[0] * b[i] + a[i] * b[0]);
    for (std::size_t j = 1; j < i; ++j) s += a[j] * b[i - j];
    out[i] = h * s;
  }
  return out;
}

std::vector<double> tail_from_density(std::span<const double> f, double h) {
  std::vector<double> fbar(f.size());
  double cum = 0.0;
  fbar[0] = 1.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    cum += 0.5 * h * (f[i - 1] + f[i]);
    fbar[i] = 1.0 - cum;
  }
  return fbar;
}

// Solves y_i = b_i + p h [ sum_{j=1}^{i-1} f_j y_{i-j} + (f_0 y_i + f_i y_0)/2 ]
// with y_0 = b_0.
std::vector<double> march(std::span<const double> f, std::span<const double> b,
                          double p, double h) {
  const std::size_t n = f.size();
  std::vector<double> y(n);
  y[0] = b[0];
  const double lead = 1.0 - 0.5 * p * h * f[0];
  for (std::size_t i = 1; i < n; ++i) {
    double s = 0.5 * f[i] * y[0];
    for (std::size_t j = 1; j < i; ++j) s += f[j] * y[i - j];
    y[i] = (b[i] + p * h * s) / lead;
  }
  return y;
}

}  // namespace

Inversion laplace_invert_scale(const LevyModel& model, double q, double x,
                               const TalbotOptions& opts) {
  if (!(x > 0.0)) throw DomainError("laplace_invert_scale needs x > 0");
  if (opts.nodes < 4) throw DomainError("Talbot needs at least 4 nodes");
  const double phi = lundberg_exponent(model, q);
  const ShiftedTransform F{model, q, phi};
  const double grow = std::exp(phi * x);
  const double full = grow * talbot(F, x, opts.nodes);
  const double half = grow * talbot(F, x, opts.nodes / 2);
  Inversion r;
  r.value = full;
  r.error_estimate = std::abs(full - half);
  r.flagged = r.error_estimate > opts.tolerance * std::max(1.0, std::abs(full));
  return r;
}

Inversion laplace_invert_scale_euler(const LevyModel& model, double q,
                                     double x) {
  if (!(x > 0.0)) throw DomainError("laplace_invert_scale_euler needs x > 0");
  const double phi = lundberg_exponent(model, q);
  const ShiftedTransform F{model, q, phi};
  const double grow = std::exp(phi * x);
  const double a = grow * euler(F, x, 15, 11);
  const double b = grow * euler(F, x, 20, 11);
  Inversion r;
  r.value = a;
  r.error_estimate = std::abs(a - b);
  r.flagged = r.error_estimate > 1e-6 * std::max(1.0, std::abs(a));
  return r;
}

double GridDistribution::total_mass() const {
  double mass = atom;
  for (std::size_t i = 1; i < density.size(); ++i) {
    mass += 0.5 * h * (density[i - 1] + density[i]);
  }
  return mass + (gbar.empty() ? 0.0 : gbar.back());
}

double GridDistribution::gbar_at(double x) const {
  if (x < 0.0) return 1.0;
  if (x >= x_max) return 0.0;
  const double u = x / h;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= gbar.size()) return gbar.back();
  const double w = u - static_cast<double>(i);
  return (1.0 - w) * gbar[i] + w * gbar[i + 1];
}

GridDistribution compound_geometric_grid(
    std::span<const double> f, double p, double h,
    std::optional<std::span<const double>> fbar) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("compound_geometric_grid needs p in [0, 1)");
  }
  if (!(h > 0.0) || f.size() < 2) {
    throw DomainError("compound_geometric_grid needs h > 0 and >= 2 nodes");
  }
  std::vector<double> tail;
  if (fbar) {
    if (fbar->size() != f.size()) throw DomainError("fbar size mismatch");
    tail.assign(fbar->begin(), fbar->end());
  } else {
    tail = tail_from_density(f, h);
  }

  GridDistribution g;
  g.h = h;
  g.x_max = h * static_cast<double>(f.size() - 1);
  g.atom = 1.0 - p;

  std::vector<double> b(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) b[i] = p * tail[i];
  g.gbar = march(f, b, p, h);
  // density solves g = p (1 - p) f + p f * g
  for (std::size_t i = 0; i < f.size(); ++i) b[i] = p * (1.0 - p) * f[i];
  g.density = march(f, b, p, h);

  const double deficit = std::abs(1.0 - g.total_mass());
  if (deficit > 1e-4) {
    throw NumericalFailure("compound_geometric_grid: grid too coarse", deficit);
  }
  return g;
}

std::vector<double> compound_geometric_series(std::span<const double> f,
                                              double p, double h) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("compound_geometric_series needs p in [0, 1)");
  }
  const std::size_t n = f.size();
  std::vector<double> gbar(n, 0.0);
  std::vector<double> power(f.begin(), f.end());  // f^{*k}
  double weight = (1.0 - p) * p;                  // (1 - p) p^k
  for (int k = 1; weight / (1.0 - p) >= 1e-12 && k < 10000; ++k) {
    auto tail = tail_from_density(power, h);
    for (std::size_t i = 0; i < n; ++i) gbar[i] += weight * tail[i];
    power = trapezoid_convolve(power, f, h);
    weight *= p;
  }
  return gbar;
}

LadderGrid ladder_grid(const LevyModel& model, double h, double x_max) {
  model.validate(true);
  const ThetaParams theta = true_theta(model);
  LadderGrid out;
  out.h = h;
  out.p = p_value(model, theta);
  if (out.p == 0.0) {
    throw DomainError("ladder_grid: no jumps, the ladder law is degenerate");
  }
  const auto rule = quad::gauss_legendre_panels(0.0, h, 1);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const auto n = static_cast<std::size_t>(std::llround(x_max / h)) + 1;
    out.f.assign(n, 0.0);
    out.fbar.assign(n, 0.0);
    double cum = 0.0;
    out.f[0] = ftilde_q(model, theta, 0.0);
    out.fbar[0] = out.p;
    for (std::size_t i = 1; i < n; ++i) {
      const double lo = h * static_cast<double>(i - 1);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        cum += rule.weights[j] * ftilde_q(model, theta, lo + rule.nodes[j]);
      }
      out.f[i] = ftilde_q(model, theta, h * static_cast<double>(i));
      out.fbar[i] = out.p - cum;
    }
    if (out.fbar.back() < 1e-6) break;
    x_max *= 2.0;
  }
  for (std::size_t i = 0; i < out.f.size(); ++i) {
    out.f[i] /= out.p;
    out.fbar[i] = std::max(0.0, out.fbar[i] / out.p);
  }
  return out;
}

GridDistribution model_gbar_grid(const LevyModel& model, double h,
                                 double x_max) {
  const LadderGrid lg = ladder_grid(model, h, x_max);
  return compound_geometric_grid(lg.f, lg.p, lg.h,
                                 std::span<const double>(lg.fbar));
}

double closed_form_W(ClosedFormKind kind, const LevyModel& model, double q,
                     double x) {
  if (x < 0.0) return 0.0;
  const double c = model.c;
  switch (kind) {
    case ClosedFormKind::brownian_drift: {
      if (!model.jumps.is_none()) {
        throw DomainError("brownian_drift closed form needs no jumps");
      }
      if (model.D == 0.0) {
        if (!(c > 0.0)) throw DomainError("pure drift needs c > 0");
        return std::exp(q / c * x) / c;
      }
      const double D = model.D;
      const double gamma = lundberg_exponent(model, q);
      const double beta = c / D + gamma;
      return std::exp(-beta * x) * std::expm1((beta + gamma) * x) /
             (D * (beta + gamma));
    }
    case ClosedFormKind::cramer_lundberg_exponential: {
      if (model.jumps.kind() != JumpKind::compound_poisson_exponential ||
          model.D != 0.0) {
        throw DomainError(
            "cramer_lundberg_exponential closed form needs exponential jumps "
            "and D = 0");
      }
      const double lambda = model.jumps.rate();
      const double mu = model.jumps.mu();
      // psi(theta) = q  <=>  c theta^2 + (c mu - lambda - q) theta - q mu = 0
      const double b = c * mu - lambda - q;
      const double disc = std::sqrt(b * b + 4.0 * c * q * mu);
      const double t1 =
          b > 0.0 ? 2.0 * q * mu / (b + disc) : (-b + disc) / (2.0 * c);
      const double t2 = t1 > 0.0 ? -q * mu / (c * t1) : -b / c;
      const double A = (mu + t1) / (c * (t1 - t2));
      const double B = (mu + t2) / (c * (t2 - t1));
      return A * std::exp(t1 * x) + B * std::exp(t2 * x);
    }
  }
  throw DomainError("closed_form_W: unsupported kind");
}

void write_oracle_csv(const std::string& path, const LevyModel& model,
                      double q, std::span<const double> xs,
                      std::optional<ClosedFormKind> kind) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << std::setprecision(17) << "x,W_talbot,W_closed,err_estimate\n";
  for (double x : xs) {
    out << x << ',';
    Inversion inv;
    if (x > 0.0) {
      inv = laplace_invert_scale(model, q, x);
      out << inv.value;
    } else {
      out << (model.D > 0.0 ? 0.0 : 1.0 / model.c);  // W(0)
    }
    out << ',';
    if (kind) out << closed_form_W(*kind, model, q, x);
    out << ',' << inv.error_estimate << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace levyscale::oracle
