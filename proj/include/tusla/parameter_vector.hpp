#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace tusla {

/// Dense parameter vector in R^d. Every entry is finite; construction from
/// values containing NaN or Inf throws OverflowError.
class ParameterVector {
 public:
  explicit ParameterVector(std::size_t dimension);  // zero vector
  explicit ParameterVector(std::vector<double> values);
  ParameterVector(std::initializer_list<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }

  /// Euclidean norm; safe against intermediate overflow for huge entries.
  [[nodiscard]] double norm() const;

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

/// Euclidean norm of a raw span, rescaling when the plain sum of squares
/// would overflow or underflow.
[[nodiscard]] double euclidean_norm(std::span<const double> x);

[[nodiscard]] bool all_finite(std::span<const double> x) noexcept;

}  // namespace tusla
