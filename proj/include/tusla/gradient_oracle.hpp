#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tusla/parameter_vector.hpp"

namespace tusla {

class Rng;

/// Constants of the polynomial-Lipschitz condition
///   |G(t,x) - G(t',x)| <= L1 (1+|x|)^rho (1+|t|+|t'|)^(q-1) |t - t'|.
struct OracleMeta {
  double q = 1.0;
  double rho = 1.0;
  double L1 = 1.0;

  /// Throws UsageError unless q >= 1, rho > 0, L1 > 0.
  void validate() const;
};

/// High-order regularisation eta * theta * |theta|^(2r).
/// eta == 0 switches the penalty off for problems that are dissipative as is.
struct RegularizationParams {
  double eta = 0.0;
  double r = 1.0;

  /// Range checks that do not depend on an oracle: 0 <= eta < 1, r > 0.
  void validate() const;
  /// Additionally requires r >= q/2 + 1 whenever eta > 0.
  void validate_for(const OracleMeta& meta) const;
};

/// One observation X_n. Its layout is problem specific (a scalar for the 1-D
/// family, (z, y) for regression networks); |x| is the Euclidean norm of all of it.
struct DataSample {
  std::vector<double> values;

  [[nodiscard]] double norm() const { return euclidean_norm(values); }
};

/// An i.i.d. data law.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual void sample(Rng& rng, DataSample& out) const = 0;
  [[nodiscard]] virtual std::size_t sample_size() const = 0;
  /// E[(1+|X|)^rho] when the law admits a closed form.
  [[nodiscard]] virtual std::optional<double> expected_growth_factor(double /*rho*/) const {
    return std::nullopt;
  }
};

/// Stochastic gradient G(theta, x) of a concrete objective.
/// Implementations are immutable after construction and safe to share across threads.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  [[nodiscard]] virtual std::size_t dimension() const = 0;

  /// Writes G(theta, x) into out. May produce non-finite values when the
  /// gradient leaves the floating range; callers decide how to react.
  virtual void evaluate(std::span<const double> theta, const DataSample& x,
                        std::span<double> out) const = 0;

  [[nodiscard]] virtual OracleMeta meta() const = 0;

  /// K(x) = 2^q (L1 (1+|x|)^rho + |G(0,x)|) in closed form for this problem.
  [[nodiscard]] virtual double k_of(const DataSample& x) const = 0;

  /// Deterministic objective u(theta) when one exists.
  [[nodiscard]] virtual std::optional<double> objective(std::span<const double> /*theta*/) const {
    return std::nullopt;
  }

  [[nodiscard]] virtual std::string name() const = 0;

  /// Checked convenience wrapper: dimension must match, result must be finite.
  [[nodiscard]] ParameterVector evaluate(const ParameterVector& theta, const DataSample& x) const;
};

/// 2^q (L1 (1+|x|)^rho + |G(0,x)|): the growth constant implied by the Lipschitz condition.
[[nodiscard]] double growth_constant(const OracleMeta& meta, double x_norm, double g_at_zero_norm);

/// g + eta * theta * |theta|^(2r).
[[nodiscard]] ParameterVector regularized_gradient(const ParameterVector& g,
                                                   const ParameterVector& theta,
                                                   const RegularizationParams& reg);

/// h / (1 + sqrt(lambda) |theta|^(2r)). Throws OverflowError if |theta|^(2r) is not finite.
[[nodiscard]] ParameterVector tamed_gradient(const ParameterVector& h, const ParameterVector& theta,
                                             double lambda, double r);

/// The tamed drift H_lambda(theta, x) evaluated without forming |theta|^(2r) for |theta| >= 1:
///   |theta| <  1: (g + eta theta |theta|^(2r)) / (1 + sqrt(lambda) |theta|^(2r))
///   |theta| >= 1: (|theta|^(-2r) g + eta theta) / (|theta|^(-2r) + sqrt(lambda))
[[nodiscard]] ParameterVector overflow_safe_drift(const ParameterVector& g,
                                                  const ParameterVector& theta, double lambda,
                                                  const RegularizationParams& reg);

/// Allocation-free form used inside iteration loops. `theta_norm` must be |theta|.
/// out may alias neither g nor theta.
void overflow_safe_drift_into(std::span<const double> g, std::span<const double> theta,
                              double theta_norm, double lambda, const RegularizationParams& reg,
                              std::span<double> out);

/// Step-size ceiling min{1, 1/(4 eta^2 (8(p+1) C(p, ceil(p/2))^2)^2), 1/(4 eta^2)}.
/// eta == 0 returns 1.
[[nodiscard]] double lambda_max(double eta, int p);

// Precision-generic forms of the two drift routes. They never throw; the
// naive route forms |theta|^(2r) explicitly and so can overflow.
template <std::floating_point T>
[[nodiscard]] std::vector<T> naive_drift_values(std::span<const T> g, std::span<const T> theta,
                                                T lambda, T eta, T r) {
  T ss = 0;
  for (T v : theta) ss += v * v;
  const T power = std::pow(std::sqrt(ss), 2 * r);
  std::vector<T> h(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) h[i] = g[i] + eta * power * theta[i];
  const T denom = 1 + std::sqrt(lambda) * power;
  for (T& v : h) v /= denom;
  return h;
}

template <std::floating_point T>
[[nodiscard]] std::vector<T> safe_drift_values(std::span<const T> g, std::span<const T> theta,
                                               T lambda, T eta, T r) {
  T ss = 0;
  for (T v : theta) ss += v * v;
  const T norm = std::sqrt(ss);
  std::vector<T> out(g.size());
  if (norm < 1) {
    const T power = std::pow(norm, 2 * r);
    const T denom = 1 + std::sqrt(lambda) * power;
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] + eta * power * theta[i]) / denom;
  } else {
    const T inv = std::pow(norm, -2 * r);
    const T denom = inv + std::sqrt(lambda);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = (inv * g[i] + eta * theta[i]) / denom;
  }
  return out;
}

}  // namespace tusla
