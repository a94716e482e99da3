#include "levyscale/laguerre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levyscale/errors.hpp"
#include "levyscale/exp_util.hpp"

namespace levyscale {
namespace {

constexpr double kForwardGrowthLimit = 6.9;  // log(1e3)

// Number of orders to pad a downward recurrence whose per-step contraction
// is 1/|ratio|, so that a zero start is forgotten to ~1e-18 relative.
int backward_padding(double log_ratio, double x) {
  const double need = std::log(1e18 * std::max(1.0, x)) * 1.3;
  return static_cast<int>(std::ceil(need / log_ratio)) + 4;
}

bool use_forward(double up, double down, int K) {
  // up * y_k = down * y_{k-1} + drive
  const double ratio = std::abs(down) / std::abs(up);
  if (!(ratio > 1.0)) return true;
  return K * std::log(ratio) <= kForwardGrowthLimit;
}

}  // namespace

void LaguerreParams::validate() const {
  if (!(alpha > 0.0)) throw DomainError("Laguerre alpha must be > 0");
  if (K < 0) throw DomainError("Laguerre K must be >= 0");
}

double laguerre_poly(int k, double x) {
  if (k < 0) throw DomainError("laguerre_poly needs k >= 0");
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 - x;
  for (int j = 1; j < k; ++j) {
    const double next = ((2.0 * j + 1.0 - x) * cur - j * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double laguerre_fn(double alpha, int k, double x) {
  return std::sqrt(2.0 * alpha) * laguerre_poly(k, 2.0 * alpha * x) *
         std::exp(-alpha * x);
}

void laguerre_fn_all(double alpha, int K, double x, std::span<double> out) {
  const double t = 2.0 * alpha * x;
  out[0] = std::sqrt(2.0 * alpha) * std::exp(-alpha * x);
  if (K == 0) return;
  out[1] = out[0] * (1.0 - t);
  for (int j = 1; j < K; ++j) {
    out[j + 1] = ((2.0 * j + 1.0 - t) * out[j] - j * out[j - 1]) / (j + 1.0);
  }
}

std::vector<double> laguerre_fn_all(double alpha, int K, double x) {
  std::vector<double> out(static_cast<std::size_t>(K) + 1);
  laguerre_fn_all(alpha, K, x, out);
  return out;
}

void psi_integral_all(double alpha, int K, double x, double b,
                      std::span<double> out) {
  if (x == 0.0) {
    std::fill(out.begin(), out.begin() + K + 1, 0.0);
    return;
  }
  const double up = b + alpha;
  const double down = b - alpha;
  const double root = std::sqrt(2.0 * alpha);
  if (use_forward(up, down, K)) {
    std::vector<double> phi = laguerre_fn_all(alpha, K, x);
    out[0] = root * std::exp(-alpha * x) * exp_ratio(up, x);
    for (int k = 1; k <= K; ++k) {
      out[k] = (down * out[k - 1] - (phi[k] - phi[k - 1])) / up;
    }
    return;
  }
  const int N = K + backward_padding(std::log(std::abs(down / up)), x);
  std::vector<double> phi = laguerre_fn_all(alpha, N, x);
  double y = 0.0;  // Psi_N
  for (int k = N; k >= 1; --k) {
    const double lower = (up * y + (phi[k] - phi[k - 1])) / down;
    if (k - 1 <= K) out[k - 1] = lower;
    y = lower;
  }
}

std::vector<double> psi_integral_all(double alpha, int K, double x, double b) {
  std::vector<double> out(static_cast<std::size_t>(K) + 1);
  psi_integral_all(alpha, K, x, b, out);
  return out;
}

double psi_integral(const LaguerreParams& params, int k, double x, double b) {
  if (x < 0.0) throw DomainError("psi_integral needs x >= 0");
  if (k < 0) throw DomainError("psi_integral needs k >= 0");
  return psi_integral_all(params.alpha, k, x, b)[static_cast<std::size_t>(k)];
}

void psi_integral_db_all(double alpha, int K, double x, double b,
                         std::span<const double> psi, std::span<double> out) {
  if (x == 0.0) {
    std::fill(out.begin(), out.begin() + K + 1, 0.0);
    return;
  }
  // (b + alpha) Psi'_k = (b - alpha) Psi'_{k-1} + (Psi_{k-1} - Psi_k)
  const double up = b + alpha;
  const double down = b - alpha;
  if (use_forward(up, down, K)) {
    out[0] = std::sqrt(2.0 * alpha) * std::exp(-alpha * x) *
             exp_ratio_ds(up, x);
    for (int k = 1; k <= K; ++k) {
      out[k] = (down * out[k - 1] + (psi[k - 1] - psi[k])) / up;
    }
    return;
  }
  const int N = K + 2 * backward_padding(std::log(std::abs(down / up)), x);
  std::vector<double> full(static_cast<std::size_t>(N) + 1);
  psi_integral_all(alpha, N, x, b, full);
  double y = 0.0;
  for (int k = N; k >= 1; --k) {
    const double lower = (up * y - (full[k - 1] - full[k])) / down;
    if (k - 1 <= K) out[k - 1] = lower;
    y = lower;
  }
}

Projection project_grid(std::span<const double> f, double h,
                        const LaguerreParams& params, int k) {
  const std::size_t n = f.size();
  Projection result;
  if (n < 2) return result;
  auto g = [&](std::size_t i) {
    return f[i] * laguerre_fn(params.alpha, k, static_cast<double>(i) * h);
  };
  // Simpson on the largest even number of intervals, trapezoid on the rest.
  const std::size_t intervals = n - 1;
  const std::size_t even = intervals - intervals % 2;
  double sum = 0.0;
  for (std::size_t i = 0; i + 2 <= even; i += 2) {
    sum += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
  }
  if (even < intervals) sum += 0.5 * h * (g(n - 2) + g(n - 1));
  result.value = sum;

  const double last = std::abs(f[n - 1]);
  if (last == 0.0) {
    result.tail_bound = 0.0;
  } else {
    const std::size_t back = std::max<std::size_t>(1, n / 10);
    const double earlier = std::abs(f[n - 1 - back]);
    const double rate =
        std::log(earlier / last) / (static_cast<double>(back) * h);
    result.tail_bound = rate > 0.0 ? std::sqrt(2.0 * params.alpha) * last / rate
                                   : std::numeric_limits<double>::infinity();
  }
  return result;
}

double partial_sum(std::span<const double> coeffs, double alpha, double x) {
  if (coeffs.empty()) return 0.0;
  const int K = static_cast<int>(coeffs.size()) - 1;
  std::vector<double> phi = laguerre_fn_all(alpha, K, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) sum += coeffs[k] * phi[k];
  return sum;
}

}  // namespace levyscale
