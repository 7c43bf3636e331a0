#include "tusla/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace tusla::kernels {
namespace {

inline double lanes_total(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double total = lanes_total(acc);
  for (std::size_t i = n4; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_squares(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(x, x));
  }
  double total = lanes_total(acc);
  for (std::size_t i = n4; i < n; ++i) total += a[i] * a[i];
  return total;
}

void affine_combine(double a, const double* x, double b, const double* y, double divisor,
                    double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vd = _mm256_set1_pd(divisor);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d num = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                                      _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, _mm256_div_pd(num, vd));
  }
  for (std::size_t i = n4; i < n; ++i) out[i] = (a * x[i] + b * y[i]) / divisor;
}

void langevin_update(const double* theta, const double* drift, const double* noise, double step,
                     double noise_scale, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(step);
  const __m256d vn = _mm256_set1_pd(noise_scale);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d moved =
        _mm256_sub_pd(_mm256_loadu_pd(theta + i), _mm256_mul_pd(vs, _mm256_loadu_pd(drift + i)));
    _mm256_storeu_pd(out + i, _mm256_add_pd(moved, _mm256_mul_pd(vn, _mm256_loadu_pd(noise + i))));
  }
  for (std::size_t i = n4; i < n; ++i) {
    out[i] = (theta[i] - step * drift[i]) + noise_scale * noise[i];
  }
}

void adam_update(double* theta, double* m, double* v, const double* g, const AdamCoefficients& c,
                 std::size_t n) {
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d ob1 = _mm256_set1_pd(one_m_b1);
  const __m256d ob2 = _mm256_set1_pd(one_m_b2);
  const __m256d bias1 = _mm256_set1_pd(c.bias1);
  const __m256d bias2 = _mm256_set1_pd(c.bias2);
  const __m256d alpha = _mm256_set1_pd(c.alpha);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(ob1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(ob2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bias1);
    const __m256d v_hat = _mm256_div_pd(vi, bias2);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(alpha, m_hat),
                                      _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), upd));
  }
  for (std::size_t i = n4; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_m_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    theta[i] = theta[i] - (c.alpha * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

double sum_abs_diff_pow(const double* a, const double* b, std::size_t n, int p) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, p == 1 ? _mm256_andnot_pd(sign_mask, d) : _mm256_mul_pd(d, d));
  }
  double total = lanes_total(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    total += p == 1 ? std::fabs(d) : d * d;
  }
  return total;
}

void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols);
}

void matvec_transposed(const double* w, std::size_t rows, std::size_t cols, const double* x,
                       double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  const std::size_t c4 = cols - cols % 4;
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const __m256d vx = _mm256_set1_pd(xr);
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < c4; c += 4) {
      _mm256_storeu_pd(y + c, _mm256_add_pd(_mm256_loadu_pd(y + c),
                                            _mm256_mul_pd(vx, _mm256_loadu_pd(row + c))));
    }
    for (std::size_t c = c4; c < cols; ++c) y[c] += xr * row[c];
  }
}

void scaled_outer(double scale, const double* u, std::size_t rows, const double* v,
                  std::size_t cols, double* out) {
  const std::size_t c4 = cols - cols % 4;
  for (std::size_t r = 0; r < rows; ++r) {
    const double su = scale * u[r];
    const __m256d vsu = _mm256_set1_pd(su);
    double* dst = out + r * cols;
    for (std::size_t c = 0; c < c4; c += 4) {
      _mm256_storeu_pd(dst + c, _mm256_mul_pd(vsu, _mm256_loadu_pd(v + c)));
    }
    for (std::size_t c = c4; c < cols; ++c) dst[c] = su * v[c];
  }
}

const KernelTable kAvx2{
    "avx2",          &dot,         &sum_squares,       &affine_combine,
    &langevin_update, &adam_update, &sum_abs_diff_pow, &matvec,
    &matvec_transposed, &scaled_outer,
};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace tusla::kernels
