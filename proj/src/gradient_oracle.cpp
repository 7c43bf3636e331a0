#include "tusla/gradient_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"

namespace tusla {

void OracleMeta::validate() const {
  if (!(q >= 1.0)) throw UsageError("OracleMeta: q must be >= 1");
  if (!(rho > 0.0)) throw UsageError("OracleMeta: rho must be > 0");
  if (!(L1 > 0.0)) throw UsageError("OracleMeta: L1 must be > 0");
}

void RegularizationParams::validate() const {
  if (!(eta >= 0.0 && eta < 1.0)) throw UsageError("regularization: eta must lie in [0, 1)");
  if (!(r > 0.0)) throw UsageError("regularization: r must be > 0");
}

void RegularizationParams::validate_for(const OracleMeta& meta) const {
  validate();
  if (eta > 0.0 && r < meta.q / 2.0 + 1.0) {
    throw UsageError("regularization: r = " + std::to_string(r) + " is below q/2 + 1 = " +
                     std::to_string(meta.q / 2.0 + 1.0));
  }
}

ParameterVector GradientOracle::evaluate(const ParameterVector& theta,
                                         const DataSample& x) const {
  if (theta.size() != dimension()) {
    throw UsageError(name() + ": parameter has dimension " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(dimension()));
  }
  std::vector<double> out(dimension());
  evaluate(theta.values(), x, out);
  if (!all_finite(out)) throw OverflowError(name() + ": gradient is not finite");
  return ParameterVector(std::move(out));
}

double growth_constant(const OracleMeta& meta, double x_norm, double g_at_zero_norm) {
  return std::pow(2.0, meta.q) * (meta.L1 * std::pow(1.0 + x_norm, meta.rho) + g_at_zero_norm);
}

namespace {

void require_same_size(const ParameterVector& a, const ParameterVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

ParameterVector finite_or_throw(std::vector<double> v, const char* op) {
  if (!all_finite(v)) {
    throw OverflowError(std::string(op) + ": non-finite result; use overflow_safe_drift");
  }
  return ParameterVector(std::move(v));
}

}  // namespace

ParameterVector regularized_gradient(const ParameterVector& g, const ParameterVector& theta,
                                     const RegularizationParams& reg) {
  require_same_size(g, theta, "regularized_gradient");
  reg.validate();
  std::vector<double> out(g.size());
  const double power = reg.eta == 0.0 ? 0.0 : std::pow(theta.norm(), 2.0 * reg.r);
  kernels::active().affine_combine(1.0, g.data().data(), reg.eta * power, theta.data().data(), 1.0,
                                   out.data(), out.size());
  return finite_or_throw(std::move(out), "regularized_gradient");
}

ParameterVector tamed_gradient(const ParameterVector& h, const ParameterVector& theta,
                               double lambda, double r) {
  require_same_size(h, theta, "tamed_gradient");
  if (!(lambda >= 0.0)) throw UsageError("tamed_gradient: lambda must be >= 0");
  if (lambda == 0.0) return h;
  const double power = std::pow(theta.norm(), 2.0 * r);
  if (!std::isfinite(power)) throw OverflowError("tamed_gradient: |theta|^(2r) overflows");
  const double denom = 1.0 + std::sqrt(lambda) * power;
  if (!std::isfinite(denom)) throw OverflowError("tamed_gradient: taming denominator overflows");
  std::vector<double> out(h.size());
  kernels::active().affine_combine(1.0, h.data().data(), 0.0, h.data().data(), denom, out.data(),
                                   out.size());
  return finite_or_throw(std::move(out), "tamed_gradient");
}

void overflow_safe_drift_into(std::span<const double> g, std::span<const double> theta,
                              double theta_norm, double lambda, const RegularizationParams& reg,
                              std::span<double> out) {
  const auto& k = kernels::active();
  const std::size_t n = g.size();
  if (theta_norm < 1.0 || lambda == 0.0) {
    const double power = std::pow(theta_norm, 2.0 * reg.r);
    const double denom = lambda == 0.0 ? 1.0 : 1.0 + std::sqrt(lambda) * power;
    const double coeff = reg.eta == 0.0 ? 0.0 : reg.eta * power;
    k.affine_combine(1.0, g.data(), coeff, theta.data(), denom, out.data(), n);
    return;
  }
  const double inv_power = std::pow(theta_norm, -2.0 * reg.r);
  k.affine_combine(inv_power, g.data(), reg.eta, theta.data(), inv_power + std::sqrt(lambda),
                   out.data(), n);
}

ParameterVector overflow_safe_drift(const ParameterVector& g, const ParameterVector& theta,
                                    double lambda, const RegularizationParams& reg) {
  require_same_size(g, theta, "overflow_safe_drift");
  if (!(lambda >= 0.0)) throw UsageError("overflow_safe_drift: lambda must be >= 0");
  reg.validate();
  std::vector<double> out(g.size());
  overflow_safe_drift_into(g.values(), theta.values(), theta.norm(), lambda, reg, out);
  return finite_or_throw(std::move(out), "overflow_safe_drift");
}

double lambda_max(double eta, int p) {
  if (p < 1) throw UsageError("lambda_max: p must be >= 1");
  if (!(eta >= 0.0)) throw UsageError("lambda_max: eta must be >= 0");
  if (eta == 0.0) return 1.0;
  const int k = (p + 1) / 2;  // ceil(p/2)
  double binom = 1.0;
  for (int i = 1; i <= k; ++i) binom = binom * static_cast<double>(p - k + i) / i;
  const double inner = 8.0 * (p + 1) * binom * binom;
  const double four_eta_sq = 4.0 * eta * eta;
  return std::min({1.0, 1.0 / (four_eta_sq * inner * inner), 1.0 / four_eta_sq});
}

}  // namespace tusla
