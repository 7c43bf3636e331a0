#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tusla/gradient_oracle.hpp"

namespace tusla {
class Rng;
}

// Feed-forward regression networks without biases:
//   f((phi, W_1..W_n), z) = phi . sigma(W_n sigma(... sigma(W_1 z)))
// trained on U(theta, (z, y)) = (y - f)^2 + eta/(2(r+1)) |theta|^(2(r+1)).
// A data sample stores z followed by y.
namespace tusla::nn {

/// Bounded C^2 activation together with the constants that enter every bound.
struct Activation {
  std::string name;
  double (*apply)(double);
  double (*derivative)(double);
  double sup_abs;        // sup |sigma|
  double sup_abs_deriv;  // sup |sigma'|
  double lip_deriv;      // Lip(sigma') = sup |sigma''|

  /// sup|sigma| + sup|sigma'| + Lip(sigma').
  [[nodiscard]] double sobolev_norm() const { return sup_abs + sup_abs_deriv + lip_deriv; }

  [[nodiscard]] static Activation tanh();
  [[nodiscard]] static Activation arctan();
  /// Throws UsageError for names other than "tanh" and "arctan".
  [[nodiscard]] static Activation by_name(const std::string& name);
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  [[nodiscard]] double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  [[nodiscard]] double frobenius_norm() const;
};

[[nodiscard]] Matrix multiply(const Matrix& a, const Matrix& b);

/// Spectral norm by power iteration on A^T A.
[[nodiscard]] double operator_norm(const Matrix& a, int max_iterations = 50,
                                   double tolerance = 1e-8);

struct Architecture {
  std::vector<std::size_t> dims;  // (d_0, ..., d_n); d_0 is the input width
  Activation activation = Activation::tanh();

  [[nodiscard]] std::size_t hidden_layers() const { return dims.size() - 1; }
  [[nodiscard]] std::size_t input_width() const { return dims.front(); }
  /// d_n + sum_i d_i d_{i-1}
  [[nodiscard]] std::size_t parameter_dimension() const;
  /// max_i d_i
  [[nodiscard]] std::size_t diameter() const;
  void validate() const;
};

struct MlpParams {
  std::vector<double> phi;       // d_n
  std::vector<Matrix> weights;   // W_i is d_i x d_{i-1}

  [[nodiscard]] static MlpParams zeros(const Architecture& arch);
  /// Layout: phi, then W_1 .. W_n each row-major.
  [[nodiscard]] static MlpParams unflatten(const Architecture& arch, std::span<const double> flat);
  [[nodiscard]] std::vector<double> flatten() const;
  /// (|phi|^2 + sum |W_i|_F^2)^(1/2)
  [[nodiscard]] double norm() const;
};

/// Entries i.i.d. uniform on [-0.5, 0.5].
[[nodiscard]] MlpParams random_params(const Architecture& arch, Rng& rng);

/// Pre-activations W_i a_{i-1} and activations a_0 = z, a_i = sigma(W_i a_{i-1}).
struct ForwardTrace {
  std::vector<std::vector<double>> pre;  // index i-1 holds layer i
  std::vector<std::vector<double>> act;  // index i holds a_i
  double output = 0.0;
};

[[nodiscard]] ForwardTrace trace_forward(const Architecture& arch, const MlpParams& theta,
                                         std::span<const double> z);
[[nodiscard]] double forward(const Architecture& arch, const MlpParams& theta,
                             std::span<const double> z);

[[nodiscard]] double risk(const Architecture& arch, const MlpParams& theta, const DataSample& x,
                          double eta, double r);

/// Partial derivative of f with respect to theta, by reverse accumulation.
[[nodiscard]] MlpParams output_gradient(const Architecture& arch, const MlpParams& theta,
                                        std::span<const double> z);
/// G(theta, x) = -2 (y - f(theta, z)) d_theta f(theta, z).
[[nodiscard]] MlpParams gradient_g(const Architecture& arch, const MlpParams& theta,
                                   const DataSample& x);
/// H = G + eta |theta|^(2r) theta, the gradient of risk.
[[nodiscard]] MlpParams gradient_h(const Architecture& arch, const MlpParams& theta,
                                   const DataSample& x, double eta, double r);

/// The d_n x d_i matrix [prod_{k=n..i+1} M_{sigma'(pre_k)} W_k] M_{sigma'(pre_i)} so that
/// d_{W_i} sigma(w_1^n, z)(V) = P_i V a_{i-1}. Index i-1 holds layer i.
[[nodiscard]] std::vector<Matrix> layer_jacobians(const Architecture& arch, const MlpParams& theta,
                                                  const ForwardTrace& trace);

/// Prop. constants for G: L1 = 16(n+1) D^(3/2) (1+|sigma|)^(2n+4), rho = 3, q = 2n + 2.
[[nodiscard]] OracleMeta lipschitz_constants(const Architecture& arch);
/// Constants for H: L1 = 16(1+eta)(2r+1)(n+1) D^(3/2) (1+|sigma|)^(2n+4), rho = 3,
/// q - 1 = max(2n+1, 2r).
[[nodiscard]] OracleMeta regularized_lipschitz_constants(const Architecture& arch, double eta,
                                                         double r);

/// 4 D sqrt(n+1) (1+|x|)^2 (1+|sigma|)^(n+2) (1 + |theta|^(n+1)).
[[nodiscard]] double gradient_norm_bound(const Architecture& arch, const MlpParams& theta,
                                         const DataSample& x);

struct PartialBoundReport {
  bool pass = true;
  double df_norm = 0.0;             // |d_theta f|
  double df_bound = 0.0;            // D^(1/2) sqrt(n+1) (1+|x|) (1+|sigma|)^(n+1) (1+|theta|^n)
  std::vector<double> ds_norms;     // ||d_{W_i} sigma(w_1^n, z)||, operator norm
  std::vector<double> ds_bounds;    // sqrt(D) (1+|x|) (1+|sigma|)^(n-i+2) |theta|^(n-i)
  double max_ratio = 0.0;           // largest measured / bound over all inequalities
};

/// Evaluates both derivative-norm inequalities at (theta, x).
[[nodiscard]] PartialBoundReport partial_deriv_bound_check(const Architecture& arch,
                                                           const MlpParams& theta,
                                                           const DataSample& x);

/// GradientOracle over the flattened parameter vector; G only (no penalty).
class MlpOracle final : public GradientOracle {
 public:
  explicit MlpOracle(Architecture arch, std::vector<DataSample> eval_set = {});

  [[nodiscard]] const Architecture& architecture() const noexcept { return arch_; }

  using GradientOracle::evaluate;
  [[nodiscard]] std::size_t dimension() const override { return arch_.parameter_dimension(); }
  void evaluate(std::span<const double> theta, const DataSample& x,
                std::span<double> out) const override;
  [[nodiscard]] OracleMeta meta() const override { return lipschitz_constants(arch_); }
  [[nodiscard]] double k_of(const DataSample& x) const override;
  /// Mean squared error over the held-out evaluation set, if one was given.
  [[nodiscard]] std::optional<double> objective(std::span<const double> theta) const override;
  [[nodiscard]] std::string name() const override;

 private:
  Architecture arch_;
  std::vector<DataSample> eval_set_;
};

/// Synthetic regression data: z ~ U[-1, 1]^d0, y = f(teacher, z) + noise_std * N(0, 1).
class TeacherDataSource final : public DataSource {
 public:
  TeacherDataSource(Architecture arch, MlpParams teacher, double noise_std);

  void sample(Rng& rng, DataSample& out) const override;
  [[nodiscard]] std::size_t sample_size() const override { return arch_.input_width() + 1; }

 private:
  Architecture arch_;
  MlpParams teacher_;
  double noise_std_;
};

}  // namespace tusla::nn
