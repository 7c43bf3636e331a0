#include "tusla/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string_view>

#include "tusla/gradient_oracle.hpp"
#include "tusla/neural_net.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace tusla::checks {

namespace {

// Allowance for rounding in the evaluation of both sides, not a slack on the bound.
constexpr double kRounding = 1e-12;

constexpr double kEta = 0.01;

// Stable across standard libraries, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double log_uniform(Rng& rng, double lo_exp, double hi_exp) {
  return std::pow(10.0, rng.uniform(lo_exp, hi_exp));
}

std::vector<double> random_vector(Rng& rng, std::size_t d, double norm) {
  std::vector<double> v(d);
  rng.fill_gaussian(v);
  const double n = euclidean_norm(v);
  for (double& x : v) x *= norm / n;
  return v;
}

std::vector<double> difference(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// A problem instance for one draw: the oracle, a sampler for theta, a data
// draw and the penalty used wherever H is involved.
struct Case {
  std::shared_ptr<const GradientOracle> oracle;
  std::function<std::vector<double>(Rng&)> theta;
  std::function<DataSample(Rng&)> data;
  RegularizationParams reg;
  // Pairs must not straddle a discontinuity of G.
  std::function<bool(std::span<const double>, std::span<const double>)> admissible;
};

using CaseFactory = std::function<Case(Rng&)>;

struct NamedFactory {
  std::string name;
  CaseFactory make;
};

Case us_case(int s, problems::UsGradient variant) {
  auto problem = std::make_shared<problems::UsProblem>(s, variant);
  Case c;
  c.oracle = problem;
  c.theta = [](Rng& rng) {
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    return std::vector<double>{sign * log_uniform(rng, -3.0, 2.5)};
  };
  c.data = [](Rng& rng) { return DataSample{{problems::sample_uniform(rng)}}; };
  c.reg = {kEta, s + 10.0};
  c.admissible = [problem](std::span<const double> a, std::span<const double> b) {
    return problem->same_branch(a[0], b[0]);
  };
  return c;
}

Case one_neuron_case() {
  auto problem = std::make_shared<problems::OneNeuronProblem>(kEta);
  Case c;
  c.oracle = problem;
  c.theta = [](Rng& rng) { return random_vector(rng, 2, log_uniform(rng, -3.0, 2.0)); };
  c.data = [](Rng& rng) { return DataSample{{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)}}; };
  c.reg = {kEta, problem->meta().q / 2.0 + 1.0};
  c.admissible = [](std::span<const double>, std::span<const double>) { return true; };
  return c;
}

nn::Architecture random_architecture(Rng& rng, std::size_t max_width) {
  nn::Architecture arch;
  const auto layers = 1 + static_cast<std::size_t>(rng.uniform01() * 3.0);
  arch.dims.push_back(1 + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(max_width)));
  for (std::size_t i = 0; i < layers; ++i) {
    arch.dims.push_back(1 + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(max_width)));
  }
  arch.activation = rng.uniform01() < 0.5 ? nn::Activation::tanh() : nn::Activation::arctan();
  return arch;
}

DataSample network_sample(Rng& rng, const nn::Architecture& arch) {
  DataSample x;
  for (std::size_t j = 0; j < arch.input_width(); ++j) x.values.push_back(rng.uniform(-1.0, 1.0));
  x.values.push_back(rng.uniform(-3.0, 3.0));
  return x;
}

Case network_case(Rng& rng) {
  const nn::Architecture arch = random_architecture(rng, 4);
  auto oracle = std::make_shared<nn::MlpOracle>(arch);
  Case c;
  c.oracle = oracle;
  const std::size_t d = arch.parameter_dimension();
  c.theta = [d](Rng& r) { return random_vector(r, d, log_uniform(r, -2.0, 1.3)); };
  c.data = [arch](Rng& r) { return network_sample(r, arch); };
  c.reg = {kEta, oracle->meta().q / 2.0 + 1.0};
  c.admissible = [](std::span<const double>, std::span<const double>) { return true; };
  return c;
}

std::vector<NamedFactory> standard_cases() {
  return {
      {"u_s(s=2,printed)", [](Rng&) { return us_case(2, problems::UsGradient::kPrinted); }},
      {"u_s(s=26,printed)", [](Rng&) { return us_case(26, problems::UsGradient::kPrinted); }},
      {"u_s(s=2,unbiased)", [](Rng&) { return us_case(2, problems::UsGradient::kUnbiased); }},
      {"one_neuron", [](Rng&) { return one_neuron_case(); }},
      {"mlp", [](Rng& rng) { return network_case(rng); }},
  };
}

// Runs `draws` evaluations of ratio(case, rng) for every standard problem.
// ratio returns lhs / rhs; a value above 1 is a violation.
std::vector<SuiteResult> sweep(const std::string& suite, std::uint64_t seed, std::size_t draws,
                               const std::function<double(const Case&, Rng&)>& ratio) {
  std::vector<SuiteResult> results;
  std::uint64_t index = 0;
  for (const NamedFactory& f : standard_cases()) {
    Rng rng(derive_seed(seed, fnv1a(suite) ^ ++index));
    SuiteResult res{suite, f.name, 0, 0, 0.0};
    // Fixed problems are built once; networks get a fresh architecture per draw.
    const bool per_draw = f.name == "mlp";
    Case c = f.make(rng);
    for (std::size_t i = 0; i < draws; ++i) {
      if (per_draw && i > 0) c = f.make(rng);
      const double r = ratio(c, rng);
      ++res.draws;
      if (!(r <= 1.0 + kRounding)) ++res.violations;
      res.worst_ratio = std::max(res.worst_ratio, r);
    }
    results.push_back(res);
  }
  return results;
}

std::vector<double> gradient(const Case& c, std::span<const double> theta, const DataSample& x) {
  std::vector<double> g(c.oracle->dimension());
  c.oracle->evaluate(theta, x, g);
  return g;
}

std::vector<double> regularized(const Case& c, std::span<const double> theta, const DataSample& x) {
  std::vector<double> h = gradient(c, theta, x);
  const double coeff = c.reg.eta * std::pow(euclidean_norm(theta), 2.0 * c.reg.r);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += coeff * theta[i];
  return h;
}

double random_lambda(Rng& rng, const Case& c) {
  const double ceiling = std::min(1.0, lambda_max(c.reg.eta, 2));
  return std::pow(10.0, rng.uniform(-4.0, std::log10(ceiling)));
}

std::vector<double> tamed(const Case& c, std::span<const double> theta, const DataSample& x,
                          double lambda) {
  const std::vector<double> g = gradient(c, theta, x);
  std::vector<double> out(g.size());
  overflow_safe_drift_into(g, theta, euclidean_norm(theta), lambda, c.reg, out);
  return out;
}

// Draws theta' either close to theta or independently, respecting admissibility.
std::vector<double> partner(const Case& c, Rng& rng, std::span<const double> theta) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<double> other;
    if (rng.uniform01() < 0.5) {
      const double scale = log_uniform(rng, -6.0, -1.0) * std::max(1.0, euclidean_norm(theta));
      const std::vector<double> step = random_vector(rng, theta.size(), scale);
      other.assign(theta.begin(), theta.end());
      for (std::size_t i = 0; i < other.size(); ++i) other[i] += step[i];
    } else {
      other = c.theta(rng);
    }
    if (c.admissible(theta, other) && difference(theta, other) != std::vector<double>(theta.size(), 0.0)) {
      return other;
    }
  }
  // Same-branch partner by a tiny relative perturbation.
  std::vector<double> other(theta.begin(), theta.end());
  for (double& v : other) v *= 1.0 + 1e-9;
  return other;
}

}  // namespace

std::vector<SuiteResult> growth_suite(std::uint64_t seed, std::size_t draws) {
  return sweep("G_growth", seed, draws, [](const Case& c, Rng& rng) {
    const std::vector<double> theta = c.theta(rng);
    const DataSample x = c.data(rng);
    const double lhs = euclidean_norm(gradient(c, theta, x));
    const double rhs = c.oracle->k_of(x) * (1.0 + std::pow(euclidean_norm(theta), c.oracle->meta().q));
    return lhs / rhs;
  });
}

std::vector<SuiteResult> tamed_growth_suite(std::uint64_t seed, std::size_t draws) {
  return sweep("H_growth", seed, draws, [](const Case& c, Rng& rng) {
    const std::vector<double> theta = c.theta(rng);
    const DataSample x = c.data(rng);
    const double lambda = random_lambda(rng, c);
    const double lhs = std::sqrt(lambda) * euclidean_norm(tamed(c, theta, x, lambda));
    const double rhs = c.oracle->k_of(x) + c.reg.eta * euclidean_norm(theta);
    return lhs / rhs;
  });
}

std::vector<SuiteResult> tamed_square_suite(std::uint64_t seed, std::size_t draws) {
  return sweep("sqr_growth", seed, draws, [](const Case& c, Rng& rng) {
    const std::vector<double> theta = c.theta(rng);
    const DataSample x = c.data(rng);
    const double lambda = random_lambda(rng, c);
    const double h = euclidean_norm(tamed(c, theta, x, lambda));
    const double k = c.oracle->k_of(x);
    const double t = euclidean_norm(theta);
    return lambda * h * h / (4.0 * k * k + 2.0 * c.reg.eta * c.reg.eta * t * t);
  });
}

std::vector<SuiteResult> lipschitz_suite(std::uint64_t seed, std::size_t draws) {
  return sweep("G_lipschitz", seed, draws, [](const Case& c, Rng& rng) {
    const std::vector<double> a = c.theta(rng);
    const std::vector<double> b = partner(c, rng, a);
    const DataSample x = c.data(rng);
    const OracleMeta m = c.oracle->meta();
    const double lhs = euclidean_norm(difference(gradient(c, a, x), gradient(c, b, x)));
    const double rhs = m.L1 * std::pow(1.0 + x.norm(), m.rho) *
                       std::pow(1.0 + euclidean_norm(a) + euclidean_norm(b), m.q - 1.0) *
                       euclidean_norm(difference(a, b));
    return lhs / rhs;
  });
}

std::vector<SuiteResult> regularized_lipschitz_suite(std::uint64_t seed, std::size_t draws) {
  auto results = sweep("H_lipschitz", seed, draws, [](const Case& c, Rng& rng) {
    const std::vector<double> a = c.theta(rng);
    const std::vector<double> b = partner(c, rng, a);
    const DataSample x = c.data(rng);
    const OracleMeta m = c.oracle->meta();
    const double big_l = m.L1 + 8.0 * c.reg.r * c.reg.eta;
    const double l = 2.0 * c.reg.r + 1.0;
    const double lhs = euclidean_norm(difference(regularized(c, a, x), regularized(c, b, x)));
    const double rhs = big_l * std::pow(1.0 + x.norm(), m.rho) *
                       std::pow(1.0 + euclidean_norm(a) + euclidean_norm(b), l) *
                       euclidean_norm(difference(a, b));
    return lhs / rhs;
  });

  // Network-specific constants for H.
  Rng rng(derive_seed(seed, 0x4e4c4950ULL));
  SuiteResult res{"H_lipschitz_network", "mlp", 0, 0, 0.0};
  for (std::size_t i = 0; i < draws; ++i) {
    const Case c = network_case(rng);
    const auto& arch = static_cast<const nn::MlpOracle&>(*c.oracle).architecture();
    const OracleMeta m = nn::regularized_lipschitz_constants(arch, c.reg.eta, c.reg.r);
    const std::vector<double> a = c.theta(rng);
    const std::vector<double> b = partner(c, rng, a);
    const DataSample x = c.data(rng);
    const double lhs = euclidean_norm(difference(regularized(c, a, x), regularized(c, b, x)));
    const double rhs = m.L1 * std::pow(1.0 + x.norm(), m.rho) *
                       std::pow(1.0 + euclidean_norm(a) + euclidean_norm(b), m.q - 1.0) *
                       euclidean_norm(difference(a, b));
    const double r = lhs / rhs;
    ++res.draws;
    if (!(r <= 1.0 + kRounding)) ++res.violations;
    res.worst_ratio = std::max(res.worst_ratio, r);
  }
  results.push_back(res);
  return results;
}

std::vector<SuiteResult> derivative_bound_suite(std::uint64_t seed, std::size_t draws) {
  Rng rng(derive_seed(seed, 0x64657276ULL));
  SuiteResult res{"derivative_norms", "mlp", 0, 0, 0.0};
  for (std::size_t i = 0; i < draws; ++i) {
    const nn::Architecture arch = random_architecture(rng, 5);
    const std::vector<double> flat =
        random_vector(rng, arch.parameter_dimension(), log_uniform(rng, -2.0, 1.3));
    const nn::MlpParams theta = nn::MlpParams::unflatten(arch, flat);
    const DataSample x = network_sample(rng, arch);
    const nn::PartialBoundReport rep = nn::partial_deriv_bound_check(arch, theta, x);
    ++res.draws;
    if (!(rep.max_ratio <= 1.0 + kRounding)) ++res.violations;
    res.worst_ratio = std::max(res.worst_ratio, rep.max_ratio);
  }
  return {res};
}

std::vector<SuiteResult> network_gradient_suite(std::uint64_t seed, std::size_t draws) {
  Rng rng(derive_seed(seed, 0x6b656c6cULL));
  SuiteResult res{"network_gradient_norm", "mlp", 0, 0, 0.0};
  for (std::size_t i = 0; i < draws; ++i) {
    const nn::Architecture arch = random_architecture(rng, 5);
    const std::vector<double> flat =
        random_vector(rng, arch.parameter_dimension(), log_uniform(rng, -2.0, 1.3));
    const nn::MlpParams theta = nn::MlpParams::unflatten(arch, flat);
    const DataSample x = network_sample(rng, arch);
    const double lhs = nn::gradient_g(arch, theta, x).norm();
    const double r = lhs / nn::gradient_norm_bound(arch, theta, x);
    ++res.draws;
    if (!(r <= 1.0 + kRounding)) ++res.violations;
    res.worst_ratio = std::max(res.worst_ratio, r);
  }
  return {res};
}

std::vector<SuiteResult> all_bound_suites(std::uint64_t seed, std::size_t draws) {
  std::vector<SuiteResult> all;
  for (auto* suite : {&growth_suite, &tamed_growth_suite, &tamed_square_suite, &lipschitz_suite,
                      &regularized_lipschitz_suite, &derivative_bound_suite,
                      &network_gradient_suite}) {
    auto part = (*suite)(seed, draws);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

FiniteDifferenceReport network_finite_difference_check(std::uint64_t seed,
                                                       std::size_t configurations) {
  Rng rng(derive_seed(seed, 0x66646966ULL));
  FiniteDifferenceReport rep;
  constexpr double kStep = 1e-5;
  for (std::size_t cfg = 0; cfg < configurations; ++cfg) {
    const nn::Architecture arch = random_architecture(rng, 8);
    const nn::MlpParams theta = nn::random_params(arch, rng);
    const DataSample x = network_sample(rng, arch);
    const double eta = rng.uniform(0.01, 0.5);
    const double r = static_cast<double>(arch.hidden_layers()) + 2.0;
    const std::vector<double> flat = theta.flatten();

    const std::vector<double> g = nn::gradient_g(arch, theta, x).flatten();
    const std::vector<double> h = nn::gradient_h(arch, theta, x, eta, r).flatten();
    std::vector<double> fd_g(flat.size());
    std::vector<double> fd_h(flat.size());
    std::vector<double> probe(flat);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      auto loss_at = [&](double value, double e) {
        probe[i] = value;
        const double out = nn::risk(arch, nn::MlpParams::unflatten(arch, probe), x, e, r);
        probe[i] = flat[i];
        return out;
      };
      fd_g[i] = (loss_at(flat[i] + kStep, 0.0) - loss_at(flat[i] - kStep, 0.0)) / (2.0 * kStep);
      fd_h[i] = (loss_at(flat[i] + kStep, eta) - loss_at(flat[i] - kStep, eta)) / (2.0 * kStep);
    }
    auto rel = [](const std::vector<double>& a, const std::vector<double>& b) {
      return euclidean_norm(difference(a, b)) / std::max(euclidean_norm(b), 1e-300);
    };
    rep.max_rel_error_g = std::max(rep.max_rel_error_g, rel(g, fd_g));
    rep.max_rel_error_h = std::max(rep.max_rel_error_h, rel(h, fd_h));
    ++rep.configurations;
  }
  return rep;
}

DissipativityOutcome us_dissipativity(int s, std::uint64_t seed, std::size_t draws,
                                      std::size_t points_per_sign) {
  const problems::UsProblem problem(s);
  const problems::UniformDataSource data;
  const RegularizationParams reg{kEta, s + 10.0};
  const diagnostics::DataExpectations e =
      diagnostics::estimate_expectations(problem, data, seed, problem.expected_k_uniform(), draws);
  const diagnostics::TheoryConstants c =
      diagnostics::theory_constants(problem.meta(), reg, e.k_mean.value, e.growth_mean.value, 2);
  std::uint64_t point = 0;
  const auto h = [&](std::span<const double> theta) {
    return diagnostics::monte_carlo_drift(problem, data, reg, theta, draws,
                                          derive_seed(seed, 0x64697373ULL + point++));
  };
  DissipativityOutcome out;
  out.problem = problem.name();
  out.A = c.A;
  out.B = c.B;
  out.report = diagnostics::dissipativity_check(
      h, c.A, c.B, diagnostics::symmetric_log_grid(1e-3, 1e3, points_per_sign));
  return out;
}

}  // namespace tusla::checks
