#pragma once

#include <cstddef>
#include <string_view>

// Arithmetic primitives behind the optimizers, the network and the
// estimators. Each entry has a scalar reference implementation and, on x86-64,
// an AVX2 variant picked at runtime. The variants are bitwise identical: every
// reduction accumulates in four interleaved lanes combined as
// (l0 + l1) + (l2 + l3), followed by the tail in index order, and no entry uses
// fused multiply-add.
namespace tusla::kernels {

struct AdamCoefficients {
  double alpha;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^(n+1)
  double bias2;  // 1 - beta2^(n+1)
};

struct KernelTable {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);

  // out[i] = (a * x[i] + b * y[i]) / divisor
  void (*affine_combine)(double a, const double* x, double b, const double* y, double divisor,
                         double* out, std::size_t n);

  // out[i] = (theta[i] - step * drift[i]) + noise_scale * noise[i]
  void (*langevin_update)(const double* theta, const double* drift, const double* noise,
                          double step, double noise_scale, double* out, std::size_t n);

  // In-place moment and parameter update of one ADAM step.
  void (*adam_update)(double* theta, double* m, double* v, const double* g,
                      const AdamCoefficients& c, std::size_t n);

  // sum_i |a[i] - b[i]|^p for p in {1, 2}
  double (*sum_abs_diff_pow)(const double* a, const double* b, std::size_t n, int p);

  // y = W x with W row-major rows x cols.
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 double* y);
  // y = W^T x with W row-major rows x cols; y has cols entries.
  void (*matvec_transposed)(const double* w, std::size_t rows, std::size_t cols,
                            const double* x, double* y);
  // out[r * cols + c] = scale * u[r] * v[c]
  void (*scaled_outer)(double scale, const double* u, std::size_t rows, const double* v,
                       std::size_t cols, double* out);
};

[[nodiscard]] const KernelTable& scalar();

/// AVX2 table, or nullptr when not compiled in or unsupported by the CPU.
[[nodiscard]] const KernelTable* avx2();

/// Table used by the library. Defaults to the best supported variant; the
/// TUSLA_KERNELS environment variable ("scalar" or "avx2") overrides it.
[[nodiscard]] const KernelTable& active();

/// Force a variant by name. Throws UsageError for unknown or unsupported names.
void select(std::string_view name);

}  // namespace tusla::kernels
