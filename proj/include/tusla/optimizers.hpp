#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tusla/gradient_oracle.hpp"
#include "tusla/parameter_vector.hpp"

namespace tusla {

enum class Algorithm { kTusla, kSgld, kAdam };

[[nodiscard]] std::string_view algorithm_name(Algorithm a) noexcept;
/// "tusla", "sgld" or "adam"; throws UsageError otherwise.
[[nodiscard]] Algorithm parse_algorithm(std::string_view name);

/// theta' = theta - lambda H_lambda(theta, x) + sqrt(2 lambda / beta) xi
struct TuslaConfig {
  double lambda = 0.05;
  double beta = 0.05;
  RegularizationParams reg{0.01, 12.0};
  /// Moment order used for the step-size ceiling check.
  int p_check = 2;
  /// false replaces the taming denominator by 1 (plain regularised Langevin).
  bool taming = true;

  void validate() const;
  /// Message when lambda exceeds lambda_max(eta, p_check). Never an error.
  [[nodiscard]] std::optional<std::string> step_size_warning() const;
};

/// theta' = theta - lambda G(theta, x) + sqrt(2 lambda / beta) xi
struct SgldConfig {
  double lambda = 0.05;
  double beta = 0.05;

  void validate() const;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Moments are plain vectors: v may legitimately reach +inf when G^2 leaves
/// the double range, which freezes the corresponding coordinate.
struct AdamState {
  ParameterVector theta;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t n = 0;
  AdamConfig cfg;

  [[nodiscard]] static AdamState init(ParameterVector theta0, const AdamConfig& cfg);
};

// Single steps. Non-finite results throw OverflowError; run() turns the same
// condition into a recorded divergence instead.

[[nodiscard]] ParameterVector tusla_step(const ParameterVector& theta, const DataSample& x,
                                         const GradientOracle& oracle, const TuslaConfig& cfg,
                                         const ParameterVector& xi);

[[nodiscard]] ParameterVector sgld_step(const ParameterVector& theta, const DataSample& x,
                                        const GradientOracle& oracle, const SgldConfig& cfg,
                                        const ParameterVector& xi);

[[nodiscard]] AdamState adam_step(const AdamState& state, const DataSample& x,
                                  const GradientOracle& oracle);

using AlgorithmConfig = std::variant<TuslaConfig, SgldConfig, AdamConfig>;

[[nodiscard]] Algorithm algorithm_of(const AlgorithmConfig& cfg) noexcept;

struct StepRecord {
  std::int64_t n = 0;
  double theta_norm = 0.0;
  std::optional<std::vector<double>> theta;  // only when d <= kFullThetaMaxDim
  std::optional<double> objective;
  double grad_norm = 0.0;  // |G| consumed by the step that produced this state

  bool operator==(const StepRecord&) const = default;
};

inline constexpr std::size_t kFullThetaMaxDim = 8;

struct RunRecord {
  std::vector<StepRecord> steps;
  ParameterVector final_theta = ParameterVector(std::size_t{0});  // last finite iterate
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
  std::vector<std::string> warnings;

  bool operator==(const RunRecord&) const = default;
};

struct RunOptions {
  std::int64_t n_steps = 10000;
  std::uint64_t seed = 0;
  std::int64_t record_every = 1;
  double divergence_threshold = 1e10;
};

/// Iterates one scheme over a seeded data stream. Data draws come from the
/// substream derive_seed(seed, streams::kData) and are therefore shared by all
/// algorithms; Gaussian noise comes from derive_seed(seed, kNoiseBase + index).
/// Step 0, every record_every-th step, the last step and a diverging step are
/// recorded. Divergence (|theta| above the threshold or non-finite state)
/// stops the run and is not an error.
[[nodiscard]] RunRecord run(const AlgorithmConfig& cfg, const ParameterVector& theta0,
                            const GradientOracle& oracle, const DataSource& data,
                            const RunOptions& options);

}  // namespace tusla
