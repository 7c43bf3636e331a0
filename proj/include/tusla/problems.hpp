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

namespace tusla::problems {

/// Global minimiser of every member of the u_s family.
inline constexpr double kUsMinimizer = 0.1;

// ---------------------------------------------------------------------------
// The superlinear 1-D family
//   u_s(t) = (t-0.1)^2/22 + (t-0.1)^(2s)        if |t-0.1| <= 1
//          = (|t-0.1| - 1/2)/11 + (t-0.1)^(2s)  otherwise
// with data X ~ U[0, 11] entering through the multiplier 12*1{x in [0,1]} - 1.
// ---------------------------------------------------------------------------

[[nodiscard]] double u_s_value(double theta, int s);

/// Exact derivative of u_s (not defined by a stochastic formula).
[[nodiscard]] double u_s_derivative(double theta, int s);

/// Multiplier 12*1{x in [0,1]} - 1; its mean under U[0,11] is 1/11.
[[nodiscard]] double data_multiplier(double x);

/// Stochastic gradient exactly as printed for the experiment: the multiplier
/// scales the whole bracket, so E[G] = u_s'(t) only up to the terms it scales.
[[nodiscard]] double g_s_sample(double theta, double x, int s);

/// Variant whose expectation under U[0,11] equals u_s'(t): the multiplier only
/// scales the 1/11-weighted part.
[[nodiscard]] double g_s_unbiased(double theta, double x, int s);

enum class UsGradient { kPrinted, kUnbiased };

class UsProblem final : public GradientOracle {
 public:
  explicit UsProblem(int s, UsGradient variant = UsGradient::kPrinted);

  [[nodiscard]] int s() const noexcept { return s_; }
  [[nodiscard]] UsGradient variant() const noexcept { return variant_; }

  using GradientOracle::evaluate;
  [[nodiscard]] std::size_t dimension() const override { return 1; }
  void evaluate(std::span<const double> theta, const DataSample& x,
                std::span<double> out) const override;
  /// q = max(1, 2s), rho = 1, and the analytic Lipschitz bound
  /// L1 = 11 (2 + 2s(2s-1)) (valid for pairs on the same branch; see same_branch).
  [[nodiscard]] OracleMeta meta() const override;
  [[nodiscard]] double k_of(const DataSample& x) const override;
  [[nodiscard]] std::optional<double> objective(std::span<const double> theta) const override;
  [[nodiscard]] std::string name() const override;

  /// The printed gradient jumps by |multiplier|/2 at |t - 0.1| = 1, so the
  /// Lipschitz condition only holds for pairs on the same side of it.
  /// The unbiased variant is continuous there and this always returns true.
  [[nodiscard]] bool same_branch(double a, double b) const;

  /// E[K(X)] under U[0, 11] in closed form.
  [[nodiscard]] double expected_k_uniform() const;

 private:
  int s_;
  UsGradient variant_;
};

/// U[lo, hi] data law, by default the experiment's U[0, 11].
class UniformDataSource final : public DataSource {
 public:
  UniformDataSource(double lo = 0.0, double hi = 11.0);

  void sample(Rng& rng, DataSample& out) const override;
  [[nodiscard]] std::size_t sample_size() const override { return 1; }
  [[nodiscard]] std::optional<double> expected_growth_factor(double rho) const override;

  [[nodiscard]] double lo() const noexcept { return lo_; }
  [[nodiscard]] double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// One draw from U[0, 11].
[[nodiscard]] double sample_uniform(Rng& rng);

/// Deterministic data law concentrated on a single observation.
class FixedDataSource final : public DataSource {
 public:
  explicit FixedDataSource(std::vector<double> values) : values_(std::move(values)) {}

  void sample(Rng& rng, DataSample& out) const override;
  [[nodiscard]] std::size_t sample_size() const override { return values_.size(); }
  [[nodiscard]] std::optional<double> expected_growth_factor(double rho) const override;

 private:
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// One neuron with arctan activation and a quadratic penalty:
//   f(w1, w2; x, y) = (y - w2 atan(w1 x + S))^2 + eta (w1^2 + w2^2)
// ---------------------------------------------------------------------------

struct OneNeuronGradient {
  double d_w1;
  double d_w2;
};

[[nodiscard]] double one_neuron_loss(double w1, double w2, double x, double y, double eta,
                                     double shift);
[[nodiscard]] OneNeuronGradient one_neuron_gradient(double w1, double w2, double x, double y,
                                                    double eta, double shift);

/// Parameters (w1, w2); data (x, y).
class OneNeuronProblem final : public GradientOracle {
 public:
  explicit OneNeuronProblem(double eta);

  [[nodiscard]] double eta() const noexcept { return eta_; }
  /// w1* = (4 + eta + 1)(1 + pi^2/16); makes w1* + S = -1 with S = -w1* - 1.
  [[nodiscard]] double w1_star() const noexcept { return w1_star_; }
  [[nodiscard]] double shift() const noexcept { return shift_; }

  using GradientOracle::evaluate;
  [[nodiscard]] std::size_t dimension() const override { return 2; }
  void evaluate(std::span<const double> theta, const DataSample& x,
                std::span<double> out) const override;
  /// q = 3, rho = 3, L1 = 28 + 4 eta from a Jacobian bound using
  /// |atan| <= pi/2, |atan'| <= 1, |atan''| <= 3 sqrt(3)/8.
  [[nodiscard]] OracleMeta meta() const override;
  [[nodiscard]] double k_of(const DataSample& x) const override;
  [[nodiscard]] std::string name() const override { return "one_neuron"; }

 private:
  double eta_;
  double w1_star_;
  double shift_;
};

// ---------------------------------------------------------------------------
// Quadratic u(t) = |t|^2/2 with G(t, x) = t; its Gibbs law is N(0, I/beta).
// ---------------------------------------------------------------------------

class QuadraticProblem final : public GradientOracle {
 public:
  explicit QuadraticProblem(std::size_t dimension = 1);

  using GradientOracle::evaluate;
  [[nodiscard]] std::size_t dimension() const override { return dimension_; }
  void evaluate(std::span<const double> theta, const DataSample& x,
                std::span<double> out) const override;
  [[nodiscard]] OracleMeta meta() const override { return {1.0, 1.0, 1.0}; }
  [[nodiscard]] double k_of(const DataSample& x) const override;
  [[nodiscard]] std::optional<double> objective(std::span<const double> theta) const override;
  [[nodiscard]] std::string name() const override { return "quadratic"; }

 private:
  std::size_t dimension_;
};

}  // namespace tusla::problems
