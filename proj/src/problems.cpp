#include "tusla/problems.hpp"

#include <cmath>
#include <numbers>

#include "tusla/errors.hpp"
#include "tusla/rng.hpp"

namespace tusla::problems {

namespace {

// 2s * d^(2s-1); identically zero for s = 0.
double odd_term(double d, int s) {
  if (s == 0) return 0.0;
  return 2.0 * s * std::pow(d, 2 * s - 1);
}

double even_term(double d, int s) { return s == 0 ? 1.0 : std::pow(d, 2 * s); }

void require_s(int s) {
  if (s < 0) throw UsageError("u_s: s must be >= 0");
}

}  // namespace

double u_s_value(double theta, int s) {
  require_s(s);
  const double d = theta - kUsMinimizer;
  const double a = std::fabs(d);
  if (a <= 1.0) return d * d / 22.0 + even_term(d, s);
  return (a - 0.5) / 11.0 + even_term(d, s);
}

double u_s_derivative(double theta, int s) {
  require_s(s);
  const double d = theta - kUsMinimizer;
  if (std::fabs(d) <= 1.0) return d / 11.0 + odd_term(d, s);
  return std::copysign(1.0, d) / 11.0 + odd_term(d, s);
}

double data_multiplier(double x) { return (x >= 0.0 && x <= 1.0) ? 11.0 : -1.0; }

double g_s_sample(double theta, double x, int s) {
  require_s(s);
  const double d = theta - kUsMinimizer;
  const double a = std::fabs(d);
  const double bracket = a <= 1.0 ? d * d + odd_term(d, s) : (a - 0.5) + odd_term(d, s);
  return data_multiplier(x) * bracket;
}

double g_s_unbiased(double theta, double x, int s) {
  require_s(s);
  const double d = theta - kUsMinimizer;
  const double first = std::fabs(d) <= 1.0 ? d : std::copysign(1.0, d);
  return data_multiplier(x) * first + odd_term(d, s);
}

UsProblem::UsProblem(int s, UsGradient variant) : s_(s), variant_(variant) { require_s(s); }

void UsProblem::evaluate(std::span<const double> theta, const DataSample& x,
                         std::span<double> out) const {
  const double xv = x.values.at(0);
  out[0] = variant_ == UsGradient::kPrinted ? g_s_sample(theta[0], xv, s_)
                                            : g_s_unbiased(theta[0], xv, s_);
}

OracleMeta UsProblem::meta() const {
  const double s = s_;
  return {std::max(1.0, 2.0 * s), 1.0, 11.0 * (2.0 + 2.0 * s * (2.0 * s - 1.0))};
}

double UsProblem::k_of(const DataSample& x) const {
  const double xv = x.values.at(0);
  const double g0 = variant_ == UsGradient::kPrinted ? g_s_sample(0.0, xv, s_)
                                                     : g_s_unbiased(0.0, xv, s_);
  return growth_constant(meta(), x.norm(), std::fabs(g0));
}

std::optional<double> UsProblem::objective(std::span<const double> theta) const {
  return u_s_value(theta[0], s_);
}

std::string UsProblem::name() const {
  return "u_s(s=" + std::to_string(s_) +
         (variant_ == UsGradient::kPrinted ? ",printed)" : ",unbiased)");
}

bool UsProblem::same_branch(double a, double b) const {
  if (variant_ == UsGradient::kUnbiased) return true;
  return (std::fabs(a - kUsMinimizer) <= 1.0) == (std::fabs(b - kUsMinimizer) <= 1.0);
}

double UsProblem::expected_k_uniform() const {
  const OracleMeta m = meta();
  const double c = odd_term(-kUsMinimizer, s_);
  double mean_abs_g0 = 0.0;
  if (variant_ == UsGradient::kPrinted) {
    // |multiplier| is 11 w.p. 1/11 and 1 otherwise.
    mean_abs_g0 = (21.0 / 11.0) * std::fabs(kUsMinimizer * kUsMinimizer + c);
  } else {
    mean_abs_g0 = std::fabs(-11.0 * kUsMinimizer + c) / 11.0 +
                  10.0 * std::fabs(kUsMinimizer + c) / 11.0;
  }
  const double growth = UniformDataSource().expected_growth_factor(m.rho).value();
  return std::pow(2.0, m.q) * (m.L1 * growth + mean_abs_g0);
}

UniformDataSource::UniformDataSource(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(hi > lo) || lo < 0.0) throw UsageError("UniformDataSource: need 0 <= lo < hi");
}

void UniformDataSource::sample(Rng& rng, DataSample& out) const {
  out.values.resize(1);
  out.values[0] = rng.uniform(lo_, hi_);
}

std::optional<double> UniformDataSource::expected_growth_factor(double rho) const {
  // E[(1+X)^rho] for X ~ U[lo, hi], lo >= 0 so |X| = X.
  return (std::pow(1.0 + hi_, rho + 1.0) - std::pow(1.0 + lo_, rho + 1.0)) /
         ((rho + 1.0) * (hi_ - lo_));
}

double sample_uniform(Rng& rng) { return rng.uniform(0.0, 11.0); }

void FixedDataSource::sample(Rng& /*rng*/, DataSample& out) const { out.values = values_; }

std::optional<double> FixedDataSource::expected_growth_factor(double rho) const {
  return std::pow(1.0 + DataSample{values_}.norm(), rho);
}

double one_neuron_loss(double w1, double w2, double x, double y, double eta, double shift) {
  const double residual = y - w2 * std::atan(w1 * x + shift);
  return residual * residual + eta * (w1 * w1 + w2 * w2);
}

OneNeuronGradient one_neuron_gradient(double w1, double w2, double x, double y, double eta,
                                      double shift) {
  const double u = w1 * x + shift;
  const double sig = std::atan(u);
  const double dsig = 1.0 / (1.0 + u * u);
  const double residual = y - w2 * sig;
  return {2.0 * residual * (-w2) * dsig * x + 2.0 * eta * w1,
          2.0 * residual * (-sig) + 2.0 * eta * w2};
}

OneNeuronProblem::OneNeuronProblem(double eta)
    : eta_(eta),
      w1_star_((4.0 + eta + 1.0) * (1.0 + std::numbers::pi * std::numbers::pi / 16.0)),
      shift_(-w1_star_ - 1.0) {
  if (!(eta > 0.0)) throw UsageError("OneNeuronProblem: eta must be > 0");
}

void OneNeuronProblem::evaluate(std::span<const double> theta, const DataSample& x,
                                std::span<double> out) const {
  const auto g = one_neuron_gradient(theta[0], theta[1], x.values.at(0), x.values.at(1), eta_,
                                     shift_);
  out[0] = g.d_w1;
  out[1] = g.d_w2;
}

OracleMeta OneNeuronProblem::meta() const { return {3.0, 3.0, 28.0 + 4.0 * eta_}; }

double OneNeuronProblem::k_of(const DataSample& x) const {
  const double g0 = 2.0 * std::fabs(x.values.at(1)) * std::fabs(std::atan(shift_));
  return growth_constant(meta(), x.norm(), g0);
}

QuadraticProblem::QuadraticProblem(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw UsageError("QuadraticProblem: dimension must be >= 1");
}

void QuadraticProblem::evaluate(std::span<const double> theta, const DataSample& /*x*/,
                                std::span<double> out) const {
  for (std::size_t i = 0; i < dimension_; ++i) out[i] = theta[i];
}

double QuadraticProblem::k_of(const DataSample& x) const {
  return growth_constant(meta(), x.norm(), 0.0);
}

std::optional<double> QuadraticProblem::objective(std::span<const double> theta) const {
  const double n = euclidean_norm(theta);
  return 0.5 * n * n;
}

}  // namespace tusla::problems
