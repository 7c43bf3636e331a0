#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tusla/gradient_oracle.hpp"
#include "tusla/optimizers.hpp"

namespace tusla::harness {

enum class ProblemKind { kUs, kOneNeuron, kMlp, kQuadratic };

[[nodiscard]] std::string_view problem_name(ProblemKind p) noexcept;
[[nodiscard]] ProblemKind parse_problem(std::string_view name);

struct ExperimentConfig {
  std::string preset;  // empty for hand-written configurations
  ProblemKind problem = ProblemKind::kUs;
  std::vector<Algorithm> algorithms{Algorithm::kTusla, Algorithm::kSgld, Algorithm::kAdam};

  int s = 2;
  bool unbiased_gradient = false;  // u_s only
  std::size_t dimension = 1;       // quadratic only

  double lambda = 0.05;
  double beta = 0.05;
  double eta = 0.01;
  double r = 12.0;
  int p_check = 2;
  double alpha = 10.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// One value is broadcast to every coordinate. Empty for networks means a
  /// seeded random initialisation.
  std::vector<double> theta0{1000.0};
  std::int64_t n_steps = 10000;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 16;
  std::vector<std::uint64_t> seeds;  // explicit list; overrides seed/n_seeds
  std::int64_t record_every = 1;
  double divergence_threshold = 1e10;
  std::string out_path = "out";

  // Networks.
  std::vector<std::size_t> dims{2, 4, 4};
  std::string activation = "tanh";
  double noise_std = 0.1;
  std::size_t eval_samples = 256;

  // Replica experiments.
  std::size_t replicas = 512;

  /// Seeds actually run: the explicit list, or seed, seed+1, ..., seed+n_seeds-1.
  [[nodiscard]] std::vector<std::uint64_t> effective_seeds() const;
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

[[nodiscard]] const std::vector<std::string>& preset_names();
/// Throws UsageError for unknown names.
[[nodiscard]] ExperimentConfig preset_config(std::string_view name);

/// Sets one field from its textual form. Throws UsageError for unknown keys or bad values.
void set_field(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// Applies "key=value" items in order.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& items);
/// Parses a flat key=value document: one pair per line, '#' starts a comment.
/// A "preset" key, if present, is applied first.
[[nodiscard]] ExperimentConfig parse_config_text(std::string_view text);
[[nodiscard]] ExperimentConfig load_config_file(const std::filesystem::path& path);
/// Canonical key=value rendering; parse_config_text(to_config_text(c)) reproduces c.
[[nodiscard]] std::string to_config_text(const ExperimentConfig& cfg);

/// Concrete problem behind a configuration.
struct ProblemInstance {
  std::shared_ptr<const GradientOracle> oracle;
  std::shared_ptr<const DataSource> data;
  std::optional<std::vector<double>> minimizer;  // when known
  std::optional<double> k_mean_closed_form;
};

[[nodiscard]] ProblemInstance make_problem(const ExperimentConfig& cfg);
[[nodiscard]] AlgorithmConfig algorithm_config(const ExperimentConfig& cfg, Algorithm a);
[[nodiscard]] ParameterVector initial_theta(const ExperimentConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// One row per recorded step; theta column only when dimension <= 8, with
/// components joined by ';'. %.17g decimals, LF line ends.
[[nodiscard]] std::string format_csv(const RunRecord& record, std::size_t dimension);
/// Inverse of format_csv for the recorded step fields.
[[nodiscard]] std::vector<StepRecord> parse_csv(std::string_view text);
[[nodiscard]] nlohmann::ordered_json record_to_json(const RunRecord& record);

/// 17 significant digits, the form used throughout the outputs.
[[nodiscard]] std::string format_real(double v);

/// Writes text to path, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct SeedOutcome {
  Algorithm algorithm = Algorithm::kTusla;
  std::uint64_t seed = 0;
  std::optional<double> final_distance;  // |theta_N - theta*| when theta* is known
  std::optional<double> final_objective;
  double final_theta_norm = 0.0;
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
};

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::kTusla;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  std::size_t counted = 0;  // non-diverged runs entering the aggregates
  std::optional<double> median_distance;
  std::optional<double> mean_distance;
  std::optional<double> median_objective;
  std::optional<std::int64_t> max_divergence_step;
};

struct RunSummary {
  std::string preset;
  std::vector<SeedOutcome> outcomes;  // ordered by algorithm, then seed
  std::vector<AlgorithmSummary> algorithms;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;  // reported on stdout only, never written to files
};

[[nodiscard]] nlohmann::ordered_json summary_to_json(const RunSummary& summary,
                                                     const ExperimentConfig& cfg);

enum class OutputFormat { kCsv, kJson };

struct OutputOptions {
  bool write_files = true;
  OutputFormat format = OutputFormat::kCsv;
  std::size_t workers = 0;  // 0 chooses the hardware concurrency
};

/// Runs every selected algorithm for every seed. Worker threads own their
/// runs; files are written afterwards by the calling thread in a fixed order.
[[nodiscard]] RunSummary run_experiment(const ExperimentConfig& cfg,
                                        const OutputOptions& options = {});

/// preset_config(name) with overrides applied, then run_experiment.
[[nodiscard]] RunSummary run_preset(std::string_view name, const std::vector<std::string>& overrides,
                                    const OutputOptions& options = {});

/// Theory constants of the configured problem as JSON.
[[nodiscard]] nlohmann::ordered_json constants_report(const ExperimentConfig& cfg);

struct GibbsReport {
  double beta = 0.0;
  std::size_t replicas = 0;
  std::vector<double> lambdas;
  std::vector<double> w1;
  std::vector<double> w2;
  double target_mean = 0.0;
  double target_variance = 0.0;
};

/// Terminal states of independent TUSLA replicas (one per seed stream) against
/// the Gibbs law of the configured 1-D problem.
[[nodiscard]] GibbsReport gibbs_report(const ExperimentConfig& cfg, const std::vector<double>& lambdas,
                                       std::uint64_t repetition = 0, std::size_t workers = 0);

/// Terminal iterates of `replicas` independent TUSLA runs.
[[nodiscard]] std::vector<double> replica_terminal_states(const ExperimentConfig& cfg, double lambda,
                                                          std::uint64_t repetition,
                                                          std::size_t workers = 0);

[[nodiscard]] nlohmann::ordered_json gibbs_to_json(const GibbsReport& report);

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

[[nodiscard]] int run_cli(int argc, char** argv);

}  // namespace tusla::harness
