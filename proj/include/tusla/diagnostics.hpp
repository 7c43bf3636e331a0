#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tusla/gradient_oracle.hpp"
#include "tusla/optimizers.hpp"
#include "tusla/parameter_vector.hpp"

namespace tusla {
class Rng;
}

namespace tusla::diagnostics {

// ---------------------------------------------------------------------------
// Explicit constants of the moment and contraction estimates
// ---------------------------------------------------------------------------

struct TheoryConstants {
  /// eta == 0: the penalty is off, so A, B, R and a are undefined (NaN) and
  /// dissipativity has to hold for G by itself.
  bool native_dissipativity = false;
  double A = 0.0;
  double B = 0.0;
  double a = 0.0;
  double R = 0.0;
  double L2 = 0.0;
  double L = 0.0;
  double l = 0.0;
  double lambda_max = 0.0;
  double K_mean = 0.0;
};

/// A = K_mean, B = (3 K_mean)^(q+2) eta^-(q+1),
/// R = max{(2^(3(q-1)+1) L2/eta)^(1/(2r-q)), (2^q L2/eta)^(1/(2r))},
/// a = L2 (1+2R)^(q-1), L = L1 + 8 r eta, l = 2r + 1,
/// with L2 = L1 * growth_mean and growth_mean = E[(1+|X|)^rho].
[[nodiscard]] TheoryConstants theory_constants(const OracleMeta& meta,
                                               const RegularizationParams& reg, double k_mean,
                                               double growth_mean, int p);

struct ExpectationEstimate {
  double value = 0.0;        // closed form when available, else the Monte-Carlo mean
  double mc_mean = 0.0;
  double mc_std_error = 0.0;
  std::optional<double> closed_form;
};

struct DataExpectations {
  ExpectationEstimate k_mean;       // E[K(X)]
  ExpectationEstimate growth_mean;  // E[(1+|X|)^rho]
};

inline constexpr std::size_t kDefaultMonteCarloDraws = 100000;

/// Seeded Monte-Carlo estimates of E[K(X)] and E[(1+|X|)^rho]. Closed forms
/// are substituted when supplied (K) or when the data law provides one (growth).
[[nodiscard]] DataExpectations estimate_expectations(const GradientOracle& oracle,
                                                     const DataSource& data, std::uint64_t seed,
                                                     std::optional<double> k_mean_closed_form = {},
                                                     std::size_t draws = kDefaultMonteCarloDraws);

// ---------------------------------------------------------------------------
// Dissipativity <theta, h(theta)> >= A |theta|^2 - B
// ---------------------------------------------------------------------------

struct DriftEstimate {
  std::vector<double> mean;   // estimate of h(theta)
  double inner_std_error = 0.0;  // standard error of the <theta, h> estimate
};

using DriftFunction = std::function<DriftEstimate(std::span<const double>)>;

struct DissipativityReport {
  bool pass = true;
  double min_slack = 0.0;  // min over the grid of <theta,h> - (A|theta|^2 - B)
  std::vector<double> worst_point;
  std::vector<std::vector<double>> violations;  // slack below -se_multiplier * SE
};

[[nodiscard]] DissipativityReport dissipativity_check(const DriftFunction& h, double A, double B,
                                                      const std::vector<ParameterVector>& grid,
                                                      double se_multiplier = 3.0);

/// Monte-Carlo mean of H = G + eta theta |theta|^(2r) over `draws` data samples.
[[nodiscard]] DriftEstimate monte_carlo_drift(const GradientOracle& oracle, const DataSource& data,
                                              const RegularizationParams& reg,
                                              std::span<const double> theta, std::size_t draws,
                                              std::uint64_t seed);

/// +-10^k for points_per_sign log-spaced k in [log10 lo, log10 hi], 1-D.
[[nodiscard]] std::vector<ParameterVector> symmetric_log_grid(double lo, double hi,
                                                              std::size_t points_per_sign);

/// Exact drift of the one-neuron problem at a single data point (x, y) = (1, 0).
struct NonDissipativePoint {
  double w2 = 0.0;
  double inner = 0.0;         // <grad f, (w1*, w2)>
  double inner_bound = 0.0;   // -2 w2^2 + 2 eta w1*^2
  double critical_b = 0.0;    // smallest B for which the candidate inequality holds here
  bool violated = false;      // candidate inequality fails for the tested B
};

struct NonDissipativeReport {
  /// Inner bound respected everywhere, critical B strictly increasing, and
  /// the tested B violated at the last (largest) w2.
  bool certified = true;
  std::vector<NonDissipativePoint> points;
};

/// Evaluates the candidate <theta, grad f> >= A|theta|^2 - B along w1 = w1*, w2 -> inf.
[[nodiscard]] NonDissipativeReport one_neuron_violation(double eta, double A, double B,
                                                        const std::vector<double>& w2_values);

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct MomentTrace {
  std::vector<double> running_mean;  // mean of |theta_k|^(2p) over recorded k <= n
  double max = 0.0;
};

[[nodiscard]] MomentTrace empirical_moment(const RunRecord& record, double p);

// ---------------------------------------------------------------------------
// One-dimensional laws
// ---------------------------------------------------------------------------

/// Sorted sample of a real law.
class EmpiricalDistribution1D {
 public:
  /// Sorts the values. Throws UsageError when empty.
  explicit EmpiricalDistribution1D(std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;  // unbiased
  [[nodiscard]] double median() const;
  /// Linear interpolation of the sample quantile function at the mid-ranks.
  [[nodiscard]] double quantile(double prob) const;

 private:
  std::vector<double> samples_;
};

/// W_p between empirical laws, p in {1, 2}. Unequal sizes: the larger sample
/// is replaced by its quantiles at the mid-ranks of the smaller one.
[[nodiscard]] double wasserstein_p_1d(const EmpiricalDistribution1D& a,
                                      const EmpiricalDistribution1D& b, int p);

[[nodiscard]] double normal_cdf(double x, double mean = 0.0, double sd = 1.0);
[[nodiscard]] double normal_quantile(double prob, double mean = 0.0, double sd = 1.0);

/// sup |F_n - F| against a continuous reference CDF.
[[nodiscard]] double ks_statistic(const EmpiricalDistribution1D& sample,
                                  const std::function<double(double)>& cdf);

/// Quantiles at (i + 0.5)/n, which realise the reference law in W_p comparisons.
[[nodiscard]] EmpiricalDistribution1D normal_quantile_grid(std::size_t n, double mean, double sd);

using Potential = std::function<double(double)>;

/// Tabulated CDF of the density proportional to exp(-beta u) on [lo, hi].
struct GibbsTable {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> nodes;    // every second Simpson node
  std::vector<double> cdf;      // normalised, cdf.front() = 0, cdf.back() = 1
  std::vector<double> density;  // normalised density at the nodes
  double tail_mass = 0.0;       // extrapolated mass outside [lo, hi]

  [[nodiscard]] double quantile(double prob) const;
  /// Node with the largest tabulated density.
  [[nodiscard]] double mode() const;
};

inline constexpr std::size_t kGibbsMinIntervals = std::size_t{1} << 15;

/// Builds the table on a composite Simpson grid, doubling the half-width of
/// [lo, hi] about its centre until the boundary density is below 1e-12 of the
/// peak. Throws SetupError when the density is not integrable or all zero, or
/// the extrapolated tail mass exceeds 1e-8.
[[nodiscard]] GibbsTable build_gibbs_table(const Potential& u, double beta, double lo, double hi,
                                           std::size_t intervals = kGibbsMinIntervals);

/// N inverse-CDF draws from the tabulated Gibbs law, sorted.
[[nodiscard]] EmpiricalDistribution1D gibbs_sampler_1d(const Potential& u, double beta, double lo,
                                                       double hi, std::size_t n, Rng& rng);

/// Mode of a Gaussian-kernel density estimate, searched on `grid_points` points
/// spanning the sample's central 98%.
[[nodiscard]] double smoothed_mode(const EmpiricalDistribution1D& sample, double bandwidth,
                                   std::size_t grid_points = 401);

}  // namespace tusla::diagnostics
