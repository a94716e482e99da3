#include "levyscale/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace levyscale::quad {
namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss7 = boost::math::quadrature::gauss<double, 7>;
using Gauss20 = boost::math::quadrature::gauss<double, 20>;

struct Panel {
  double a;
  double b;
  std::vector<double> value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// One Kronrod-15 / Gauss-7 pair on [a, b]. Kronrod abscissae alternate
// Gauss / Kronrod-only, starting with the shared centre node.
Panel apply_rule(const VectorIntegrand& f, std::size_t dim, double a,
                 double b, std::vector<double>& work_plus,
                 std::vector<double>& work_minus) {
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss7::weights();
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  Panel panel{a, b, std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> gauss(dim, 0.0);

  f(centre, work_plus);
  for (std::size_t d = 0; d < dim; ++d) {
    panel.value[d] = wk[0] * work_plus[d];
    gauss[d] = wg[0] * work_plus[d];
  }
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = half * xk[i];
    f(centre - dx, work_minus);
    f(centre + dx, work_plus);
    for (std::size_t d = 0; d < dim; ++d) {
      const double s = work_plus[d] + work_minus[d];
      panel.value[d] += wk[i] * s;
      if (i % 2 == 0) gauss[d] += wg[i / 2] * s;
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    panel.value[d] *= half;
    gauss[d] *= half;
    panel.error = std::max(panel.error, std::abs(panel.value[d] - gauss[d]));
  }
  return panel;
}

VectorResult adaptive(const VectorIntegrand& f, std::size_t dim, double a,
                      double b, const Tolerance& tol) {
  std::vector<double> wp(dim), wm(dim);
  std::priority_queue<Panel> heap;
  heap.push(apply_rule(f, dim, a, b, wp, wm));

  auto totals = [&](std::vector<double>& sum, double& err) {
    // priority_queue has no iteration; rebuild from a copy.
    auto copy = heap;
    std::fill(sum.begin(), sum.end(), 0.0);
    err = 0.0;
    while (!copy.empty()) {
      const Panel& p = copy.top();
      for (std::size_t d = 0; d < dim; ++d) sum[d] += p.value[d];
      err += p.error;
      copy.pop();
    }
  };

  std::vector<double> sum(dim);
  double err = heap.top().error;
  sum = heap.top().value;
  int splits = 0;
  bool converged = false;
  while (true) {
    double scale = 0.0;
    for (double v : sum) scale = std::max(scale, std::abs(v));
    if (err <= std::max(tol.abs, tol.rel * scale)) {
      converged = true;
      break;
    }
    if (splits >= tol.max_subdivisions) break;
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(std::move(worst));
      break;
    }
    Panel left = apply_rule(f, dim, worst.a, mid, wp, wm);
    Panel right = apply_rule(f, dim, mid, worst.b, wp, wm);
    for (std::size_t d = 0; d < dim; ++d) {
      sum[d] += left.value[d] + right.value[d] - worst.value[d];
    }
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++splits;
    // Incremental sums drift; resynchronise now and then.
    if (splits % 256 == 0) totals(sum, err);
  }
  totals(sum, err);
  return {std::move(sum), err, converged};
}

}  // namespace

VectorResult integrate_vector(const VectorIntegrand& f, std::size_t dim,
                              double a, double b, const Tolerance& tol) {
  if (a == b) return {std::vector<double>(dim, 0.0), 0.0, true};
  if (b < a) {
    auto r = adaptive(f, dim, b, a, tol);
    for (double& v : r.value) v = -v;
    return r;
  }
  return adaptive(f, dim, a, b, tol);
}

VectorResult integrate_vector_to_infinity(const VectorIntegrand& f,
                                          std::size_t dim, double a,
                                          double scale,
                                          const Tolerance& tol) {
  std::vector<double> inner(dim);
  auto mapped = [&](double u, std::span<double> out) {
    const double x = a - std::log(u) / scale;
    f(x, inner);
    const double jac = 1.0 / (scale * u);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = inner[d] * jac;
      out[d] = std::isfinite(v) ? v : 0.0;
    }
  };
  return adaptive(mapped, dim, 0.0, 1.0, tol);
}

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol) {
  auto r = integrate_vector(
      [&](double x, std::span<double> out) { out[0] = f(x); }, 1, a, b, tol);
  return {r.value[0], r.error, r.converged};
}

Result integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double scale, const Tolerance& tol) {
  auto r = integrate_vector_to_infinity(
      [&](double x, std::span<double> out) { out[0] = f(x); }, 1, a, scale,
      tol);
  return {r.value[0], r.error, r.converged};
}

Rule gauss_legendre_panels(double a, double b, int panels) {
  const auto& xs = Gauss20::abscissa();
  const auto& ws = Gauss20::weights();
  Rule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * 20);
  rule.weights.reserve(rule.nodes.capacity());
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double centre = lo + 0.5 * width;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double dx = 0.5 * width * xs[i];
      rule.nodes.push_back(centre - dx);
      rule.weights.push_back(0.5 * width * ws[i]);
      rule.nodes.push_back(centre + dx);
      rule.weights.push_back(0.5 * width * ws[i]);
    }
  }
  return rule;
}

}  // namespace levyscale::quad
