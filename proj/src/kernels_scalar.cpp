#include "tusla/kernels.hpp"

#include <cmath>

namespace tusla::kernels {
namespace {

// Four interleaved partial sums; must match the lane layout of the SIMD table.
template <class Term>
double lane_reduce(std::size_t n, Term term) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) acc[k] += term(i + k);
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = n4; i < n; ++i) total += term(i);
  return total;
}

double dot(const double* a, const double* b, std::size_t n) {
  return lane_reduce(n, [&](std::size_t i) { return a[i] * b[i]; });
}

double sum_squares(const double* a, std::size_t n) {
  return lane_reduce(n, [&](std::size_t i) { return a[i] * a[i]; });
}

void affine_combine(double a, const double* x, double b, const double* y, double divisor,
                    double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (a * x[i] + b * y[i]) / divisor;
}

void langevin_update(const double* theta, const double* drift, const double* noise, double step,
                     double noise_scale, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (theta[i] - step * drift[i]) + noise_scale * noise[i];
  }
}

void adam_update(double* theta, double* m, double* v, const double* g, const AdamCoefficients& c,
                 std::size_t n) {
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_m_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    theta[i] = theta[i] - (c.alpha * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

double sum_abs_diff_pow(const double* a, const double* b, std::size_t n, int p) {
  if (p == 1) return lane_reduce(n, [&](std::size_t i) { return std::fabs(a[i] - b[i]); });
  return lane_reduce(n, [&](std::size_t i) {
    const double d = a[i] - b[i];
    return d * d;
  });
}

void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols);
}

void matvec_transposed(const double* w, std::size_t rows, std::size_t cols, const double* x,
                       double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += xr * row[c];
  }
}

void scaled_outer(double scale, const double* u, std::size_t rows, const double* v,
                  std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double su = scale * u[r];
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = su * v[c];
  }
}

const KernelTable kScalar{
    "scalar",        &dot,         &sum_squares,       &affine_combine,
    &langevin_update, &adam_update, &sum_abs_diff_pow, &matvec,
    &matvec_transposed, &scaled_outer,
};

}  // namespace

const KernelTable& scalar() { return kScalar; }

}  // namespace tusla::kernels
