#include "tusla/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <type_traits>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"
#include "tusla/rng.hpp"

namespace tusla {

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::kTusla:
      return "tusla";
    case Algorithm::kSgld:
      return "sgld";
    case Algorithm::kAdam:
      return "adam";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "tusla") return Algorithm::kTusla;
  if (name == "sgld") return Algorithm::kSgld;
  if (name == "adam") return Algorithm::kAdam;
  throw UsageError("unknown algorithm '" + std::string(name) + "'");
}

void TuslaConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("tusla: lambda must be >= 0");
  if (!(beta > 0.0)) throw UsageError("tusla: beta must be > 0");
  if (p_check < 1) throw UsageError("tusla: p_check must be >= 1");
  reg.validate();
}

std::optional<std::string> TuslaConfig::step_size_warning() const {
  const double ceiling = lambda_max(reg.eta, p_check);
  if (lambda <= ceiling) return std::nullopt;
  std::ostringstream os;
  os << "lambda = " << lambda << " exceeds lambda_max(eta = " << reg.eta << ", p = " << p_check
     << ") = " << ceiling;
  return os.str();
}

void SgldConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("sgld: lambda must be >= 0");
  if (!(beta > 0.0)) throw UsageError("sgld: beta must be > 0");
}

void AdamConfig::validate() const {
  if (!(alpha > 0.0)) throw UsageError("adam: alpha must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("adam: beta2 must lie in [0, 1)");
  if (!(eps >= 0.0)) throw UsageError("adam: eps must be >= 0");
}

AdamState AdamState::init(ParameterVector theta0, const AdamConfig& cfg) {
  cfg.validate();
  const std::size_t d = theta0.size();
  return {std::move(theta0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), 0, cfg};
}

Algorithm algorithm_of(const AlgorithmConfig& cfg) noexcept {
  return static_cast<Algorithm>(cfg.index());
}

namespace {

// The raw forms below work in preallocated buffers and never throw on
// non-finite values; the public steps and run() decide what to do with them.

void tusla_drift(std::span<const double> theta, std::span<const double> g, const TuslaConfig& cfg,
                 std::span<double> drift) {
  // A zero step ignores the drift, which may be infinite far out.
  if (cfg.lambda == 0.0) {
    std::fill(drift.begin(), drift.end(), 0.0);
    return;
  }
  const double norm = euclidean_norm(theta);
  if (cfg.taming) {
    overflow_safe_drift_into(g, theta, norm, cfg.lambda, cfg.reg, drift);
    return;
  }
  const double coeff = cfg.reg.eta == 0.0 ? 0.0 : cfg.reg.eta * std::pow(norm, 2.0 * cfg.reg.r);
  kernels::active().affine_combine(1.0, g.data(), coeff, theta.data(), 1.0, drift.data(),
                                   drift.size());
}

void langevin(std::span<const double> theta, std::span<const double> drift,
              std::span<const double> xi, double lambda, double beta, std::span<double> out) {
  kernels::active().langevin_update(theta.data(), drift.data(), xi.data(), lambda,
                                    std::sqrt(2.0 * lambda / beta), out.data(), out.size());
}

kernels::AdamCoefficients adam_coefficients(const AdamConfig& cfg, std::int64_t n) {
  const double e = static_cast<double>(n + 1);
  return {cfg.alpha, cfg.beta1, cfg.beta2, cfg.eps, 1.0 - std::pow(cfg.beta1, e),
          1.0 - std::pow(cfg.beta2, e)};
}

void require_dims(const GradientOracle& oracle, std::size_t theta, std::size_t xi) {
  if (theta != oracle.dimension() || xi != oracle.dimension()) {
    throw UsageError(oracle.name() + ": step inputs must have dimension " +
                     std::to_string(oracle.dimension()));
  }
}

ParameterVector checked(std::vector<double> v, const char* op) {
  if (!all_finite(v)) throw OverflowError(std::string(op) + ": iterate is not finite");
  return ParameterVector(std::move(v));
}

}  // namespace

ParameterVector tusla_step(const ParameterVector& theta, const DataSample& x,
                           const GradientOracle& oracle, const TuslaConfig& cfg,
                           const ParameterVector& xi) {
  cfg.validate();
  require_dims(oracle, theta.size(), xi.size());
  const std::size_t d = theta.size();
  std::vector<double> g(d);
  std::vector<double> drift(d);
  std::vector<double> out(d);
  oracle.evaluate(theta.values(), x, g);
  tusla_drift(theta.values(), g, cfg, drift);
  langevin(theta.values(), drift, xi.values(), cfg.lambda, cfg.beta, out);
  return checked(std::move(out), "tusla_step");
}

ParameterVector sgld_step(const ParameterVector& theta, const DataSample& x,
                          const GradientOracle& oracle, const SgldConfig& cfg,
                          const ParameterVector& xi) {
  cfg.validate();
  require_dims(oracle, theta.size(), xi.size());
  const std::size_t d = theta.size();
  std::vector<double> g(d);
  std::vector<double> out(d);
  oracle.evaluate(theta.values(), x, g);
  langevin(theta.values(), g, xi.values(), cfg.lambda, cfg.beta, out);
  return checked(std::move(out), "sgld_step");
}

AdamState adam_step(const AdamState& state, const DataSample& x, const GradientOracle& oracle) {
  state.cfg.validate();
  const std::size_t d = state.theta.size();
  if (d != oracle.dimension() || state.m.size() != d || state.v.size() != d) {
    throw UsageError("adam_step: state does not match the oracle dimension");
  }
  std::vector<double> g(d);
  oracle.evaluate(state.theta.values(), x, g);
  std::vector<double> theta(state.theta.data());
  AdamState next{ParameterVector(d), state.m, state.v, state.n + 1, state.cfg};
  kernels::active().adam_update(theta.data(), next.m.data(), next.v.data(), g.data(),
                                adam_coefficients(state.cfg, state.n), d);
  next.theta = checked(std::move(theta), "adam_step");
  return next;
}

RunRecord run(const AlgorithmConfig& cfg, const ParameterVector& theta0,
              const GradientOracle& oracle, const DataSource& data, const RunOptions& options) {
  if (options.n_steps < 1) throw UsageError("run: n_steps must be >= 1");
  if (options.record_every < 1) throw UsageError("run: record_every must be >= 1");
  if (!(options.divergence_threshold > 0.0)) {
    throw UsageError("run: divergence_threshold must be > 0");
  }
  const std::size_t d = oracle.dimension();
  if (theta0.size() != d) throw UsageError("run: theta0 does not match the oracle dimension");

  const Algorithm algo = algorithm_of(cfg);
  RunRecord rec;
  std::visit([&rec](const auto& c) {
    c.validate();
    if constexpr (std::is_same_v<std::decay_t<decltype(c)>, TuslaConfig>) {
      if (auto w = c.step_size_warning()) rec.warnings.push_back(*w);
    }
  }, cfg);

  Rng data_rng(derive_seed(options.seed, streams::kData));
  Rng noise_rng(derive_seed(options.seed, streams::kNoiseBase + static_cast<std::uint64_t>(algo)));

  std::vector<double> theta(theta0.data());
  std::vector<double> next(d);
  std::vector<double> g(d);
  std::vector<double> drift(d);
  std::vector<double> xi(d);
  std::vector<double> m(d, 0.0);
  std::vector<double> v(d, 0.0);
  DataSample x;
  x.values.reserve(data.sample_size());

  const bool keep_theta = d <= kFullThetaMaxDim;
  auto record = [&](std::int64_t n, std::span<const double> state, double norm, double grad_norm) {
    StepRecord s;
    s.n = n;
    s.theta_norm = norm;
    if (keep_theta) s.theta.emplace(state.begin(), state.end());
    if (std::isfinite(norm)) s.objective = oracle.objective(state);
    s.grad_norm = grad_norm;
    rec.steps.push_back(std::move(s));
  };

  record(0, theta, euclidean_norm(theta), 0.0);
  rec.final_theta = theta0;

  for (std::int64_t n = 1; n <= options.n_steps; ++n) {
    data.sample(data_rng, x);
    oracle.evaluate(theta, x, g);
    switch (algo) {
      case Algorithm::kTusla: {
        const auto& c = std::get<TuslaConfig>(cfg);
        noise_rng.fill_gaussian(xi);
        tusla_drift(theta, g, c, drift);
        langevin(theta, drift, xi, c.lambda, c.beta, next);
        break;
      }
      case Algorithm::kSgld: {
        const auto& c = std::get<SgldConfig>(cfg);
        noise_rng.fill_gaussian(xi);
        langevin(theta, g, xi, c.lambda, c.beta, next);
        break;
      }
      case Algorithm::kAdam: {
        std::copy(theta.begin(), theta.end(), next.begin());
        kernels::active().adam_update(next.data(), m.data(), v.data(), g.data(),
                                      adam_coefficients(std::get<AdamConfig>(cfg), n - 1), d);
        break;
      }
    }
    const double norm = euclidean_norm(next);
    const double grad_norm = euclidean_norm(g);
    const bool bad = !all_finite(next) || !(norm <= options.divergence_threshold);
    if (bad) {
      rec.diverged = true;
      rec.divergence_step = n;
      rec.final_theta = ParameterVector(theta);
      record(n, next, norm, grad_norm);
      return rec;
    }
    theta.swap(next);
    if (n % options.record_every == 0 || n == options.n_steps) record(n, theta, norm, grad_norm);
  }
  rec.final_theta = ParameterVector(theta);
  return rec;
}

}  // namespace tusla
