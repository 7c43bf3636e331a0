#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tusla/diagnostics.hpp"

// Randomised invariant suites shared by the `check` subcommand and the tests.
// Every suite draws random arguments, evaluates both sides of one inequality
// and reports the number of violations and the largest lhs/rhs ratio.
namespace tusla::checks {

struct SuiteResult {
  std::string suite;    // which inequality
  std::string problem;  // which oracle it was evaluated on
  std::size_t draws = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;

  [[nodiscard]] bool pass() const noexcept { return violations == 0 && draws > 0; }
};

inline constexpr std::size_t kDefaultDraws = 1000;

/// |G| <= K(x)(1 + |theta|^q)
[[nodiscard]] std::vector<SuiteResult> growth_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// sqrt(lambda) |H_lambda| <= K(x) + eta |theta|
[[nodiscard]] std::vector<SuiteResult> tamed_growth_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// lambda |H_lambda|^2 <= 4 K(x)^2 + 2 eta^2 |theta|^2
[[nodiscard]] std::vector<SuiteResult> tamed_square_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// |G(t) - G(t')| <= L1 (1+|x|)^rho (1+|t|+|t'|)^(q-1) |t - t'|, including the
/// network constants for G.
[[nodiscard]] std::vector<SuiteResult> lipschitz_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// |H(t) - H(t')| <= (L1 + 8 r eta)(1+|x|)^rho (1+|t|+|t'|)^(2r+1) |t - t'|
[[nodiscard]] std::vector<SuiteResult> regularized_lipschitz_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// Norm bounds on d_theta f and on each layer derivative of the network.
[[nodiscard]] std::vector<SuiteResult> derivative_bound_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);
/// |G| <= 4 D sqrt(n+1)(1+|x|)^2 (1+|sigma|)^(n+2)(1 + |theta|^(n+1)) for networks.
[[nodiscard]] std::vector<SuiteResult> network_gradient_suite(std::uint64_t seed, std::size_t draws = kDefaultDraws);

[[nodiscard]] std::vector<SuiteResult> all_bound_suites(std::uint64_t seed, std::size_t draws = kDefaultDraws);

struct FiniteDifferenceReport {
  std::size_t configurations = 0;
  double max_rel_error_g = 0.0;
  double max_rel_error_h = 0.0;
};

/// Analytic network gradients G and H against central differences of the
/// loss, over random architectures with 1 to 3 hidden layers and widths <= 8.
/// Relative error is |analytic - fd| / |fd| in the Euclidean norm.
[[nodiscard]] FiniteDifferenceReport network_finite_difference_check(std::uint64_t seed,
                                                                     std::size_t configurations = 50);

struct DissipativityOutcome {
  std::string problem;
  double A = 0.0;
  double B = 0.0;
  diagnostics::DissipativityReport report;
};

/// Theory (A, B) of u_s with eta = 0.01, r = s + 10, checked on the grid
/// +-[1e-3, 1e3] against Monte-Carlo means of H.
[[nodiscard]] DissipativityOutcome us_dissipativity(int s, std::uint64_t seed,
                                                    std::size_t draws = diagnostics::kDefaultMonteCarloDraws,
                                                    std::size_t points_per_sign = 13);

}  // namespace tusla::checks
