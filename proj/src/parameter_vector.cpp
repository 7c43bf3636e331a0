#include "tusla/parameter_vector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"

namespace tusla {

bool all_finite(std::span<const double> x) noexcept {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double euclidean_norm(std::span<const double> x) {
  if (x.size() == 1) return std::fabs(x[0]);
  const double ss = kernels::active().sum_squares(x.data(), x.size());
  if (std::isfinite(ss) && ss > std::numeric_limits<double>::min()) return std::sqrt(ss);
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double v : x) {
    const double r = v / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

ParameterVector::ParameterVector(std::size_t dimension) : values_(dimension, 0.0) {}

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values)) {
  if (!all_finite(values_)) throw OverflowError("ParameterVector: non-finite entry");
}

ParameterVector::ParameterVector(std::initializer_list<double> values)
    : ParameterVector(std::vector<double>(values)) {}

double ParameterVector::norm() const { return euclidean_norm(values_); }

}  // namespace tusla
