#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "tusla/checks.hpp"
#include "tusla/errors.hpp"
#include "tusla/harness.hpp"
#include "tusla/kernels.hpp"
#include "tusla/problems.hpp"

namespace tusla::harness {

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::string kernels;
  std::size_t workers = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory (run) or file (other commands)");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--kernels", f.kernels, "Arithmetic kernels")->check(CLI::IsMember({"scalar", "avx2"}));
  cmd->add_option("--workers", f.workers, "Worker threads (0 = hardware concurrency)");
  cmd->add_option("--set", f.overrides, "Configuration override key=value (repeatable)");
}

void emit_json(const nlohmann::ordered_json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

int cmd_run(const CommonFlags& f, const std::string& preset, const std::string& config_file) {
  ExperimentConfig cfg;
  if (!preset.empty() && !config_file.empty()) {
    throw UsageError("run: give either --preset or --config, not both");
  }
  if (!preset.empty()) cfg = preset_config(preset);
  if (!config_file.empty()) cfg = load_config_file(config_file);
  apply_overrides(cfg, f.overrides);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.seeds.clear();
  }
  if (!f.out.empty()) cfg.out_path = f.out;
  OutputOptions opts;
  opts.format = f.format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  opts.workers = f.workers;
  const RunSummary summary = run_experiment(cfg, opts);
  for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  for (const AlgorithmSummary& a : summary.algorithms) {
    std::printf("%-6s runs=%zu diverged=%zu", std::string(algorithm_name(a.algorithm)).c_str(),
                a.runs, a.diverged);
    if (a.median_distance) std::printf(" median_distance=%.6g", *a.median_distance);
    if (a.mean_distance) std::printf(" mean_distance=%.6g", *a.mean_distance);
    if (a.median_objective) std::printf(" median_objective=%.6g", *a.median_objective);
    if (a.max_divergence_step) std::printf(" max_divergence_step=%lld",
                                           static_cast<long long>(*a.max_divergence_step));
    std::printf("\n");
  }
  std::printf("wrote %s (%.2f s)\n", cfg.out_path.c_str(), summary.wall_seconds);
  return kExitOk;
}

ExperimentConfig problem_config(const std::string& problem, const std::optional<int>& s,
                                const CommonFlags& f) {
  ExperimentConfig cfg;
  cfg.problem = parse_problem(problem);
  if (s) {
    cfg.s = *s;
    cfg.r = *s + 10.0;
  } else if (cfg.problem == ProblemKind::kUs) {
    cfg.r = cfg.s + 10.0;
  }
  if (cfg.problem == ProblemKind::kQuadratic) {
    cfg.eta = 0.0;
    cfg.r = 1.5;
  }
  if (cfg.problem == ProblemKind::kMlp) cfg.r = static_cast<double>(cfg.dims.size() - 1) + 2.0;
  if (cfg.problem == ProblemKind::kOneNeuron) cfg.r = 2.5;
  apply_overrides(cfg, f.overrides);
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

int cmd_check(const CommonFlags& f, std::size_t draws) {
  const std::uint64_t seed = f.seed.value_or(2024);
  bool ok = true;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const checks::SuiteResult& r : checks::all_bound_suites(seed, draws)) {
    ok = ok && r.pass();
    std::printf("%-4s %-22s %-20s draws=%zu violations=%zu worst_ratio=%.6g\n",
                r.pass() ? "PASS" : "FAIL", r.suite.c_str(), r.problem.c_str(), r.draws,
                r.violations, r.worst_ratio);
    rows.push_back({{"suite", r.suite}, {"problem", r.problem}, {"draws", r.draws},
                    {"violations", r.violations}, {"worst_ratio", r.worst_ratio}});
  }
  const checks::FiniteDifferenceReport fd = checks::network_finite_difference_check(seed);
  const bool fd_ok = fd.max_rel_error_g < 1e-5 && fd.max_rel_error_h < 1e-5;
  ok = ok && fd_ok;
  std::printf("%-4s %-22s configurations=%zu max_rel_error_G=%.3g max_rel_error_H=%.3g\n",
              fd_ok ? "PASS" : "FAIL", "finite_differences", fd.configurations, fd.max_rel_error_g,
              fd.max_rel_error_h);
  for (int s : {2, 26}) {
    const checks::DissipativityOutcome d = checks::us_dissipativity(s, seed);
    ok = ok && d.report.pass;
    std::printf("%-4s %-22s %-20s A=%.6g B=%.6g min_slack=%.6g violations=%zu\n",
                d.report.pass ? "PASS" : "FAIL", "dissipativity", d.problem.c_str(), d.A, d.B,
                d.report.min_slack, d.report.violations.size());
  }
  if (!f.out.empty()) emit_json(rows, f.out);
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Tamed Langevin optimisation experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string preset;
  std::string config_file;
  auto* run_cmd = app.add_subcommand("run", "Run a preset or a configuration file");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--preset", preset, "Preset name")
      ->check(CLI::IsMember(preset_names()));
  run_cmd->add_option("--config", config_file, "Flat key=value configuration file");

  CommonFlags const_flags;
  std::string const_problem = "us";
  std::optional<int> const_s;
  auto* const_cmd = app.add_subcommand("constants", "Print the theory constants of a problem");
  add_common(const_cmd, const_flags);
  const_cmd->add_option("--problem", const_problem, "us, one_neuron, mlp or quadratic");
  const_cmd->add_option("--s", const_s, "Exponent of the u_s family");

  CommonFlags gibbs_flags;
  std::string gibbs_problem = "quadratic";
  std::optional<int> gibbs_s;
  std::optional<double> gibbs_beta;
  std::optional<std::size_t> gibbs_replicas;
  std::optional<std::int64_t> gibbs_steps;
  std::vector<double> gibbs_lambdas;
  auto* gibbs_cmd = app.add_subcommand("gibbs", "Compare replica terminal laws with the Gibbs law");
  add_common(gibbs_cmd, gibbs_flags);
  gibbs_cmd->add_option("--problem", gibbs_problem, "quadratic or us");
  gibbs_cmd->add_option("--s", gibbs_s, "Exponent of the u_s family");
  gibbs_cmd->add_option("--beta", gibbs_beta, "Inverse temperature");
  gibbs_cmd->add_option("--replicas", gibbs_replicas, "Independent replicas");
  gibbs_cmd->add_option("--steps", gibbs_steps, "Steps per replica");
  gibbs_cmd->add_option("--lambda", gibbs_lambdas, "Step sizes (repeatable)");

  CommonFlags check_flags;
  std::size_t check_draws = checks::kDefaultDraws;
  auto* check_cmd = app.add_subcommand("check", "Run the invariant suites");
  add_common(check_cmd, check_flags);
  check_cmd->add_option("--draws", check_draws, "Random draws per suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto select_kernels = [](const CommonFlags& f) {
      if (!f.kernels.empty()) kernels::select(f.kernels);
    };
    if (run_cmd->parsed()) {
      select_kernels(run_flags);
      return cmd_run(run_flags, preset, config_file);
    }
    if (const_cmd->parsed()) {
      select_kernels(const_flags);
      const ExperimentConfig cfg = problem_config(const_problem, const_s, const_flags);
      emit_json(constants_report(cfg), const_flags.out);
      return kExitOk;
    }
    if (gibbs_cmd->parsed()) {
      select_kernels(gibbs_flags);
      ExperimentConfig cfg = preset_config("gibbs-quadratic");
      cfg.problem = parse_problem(gibbs_problem);
      if (cfg.problem == ProblemKind::kUs) {
        // The unbiased gradient has u_s as its mean, so exp(-beta u_s) is the
        // target; u_s is dissipative by itself and the penalty stays off.
        cfg.s = gibbs_s.value_or(2);
        cfg.unbiased_gradient = true;
        cfg.eta = 0.0;
        cfg.r = cfg.s + 1.0;
        cfg.theta0 = {problems::kUsMinimizer};
      }
      if (gibbs_beta) cfg.beta = *gibbs_beta;
      if (gibbs_replicas) cfg.replicas = *gibbs_replicas;
      if (gibbs_steps) cfg.n_steps = *gibbs_steps;
      apply_overrides(cfg, gibbs_flags.overrides);
      if (gibbs_flags.seed) cfg.seed = *gibbs_flags.seed;
      if (gibbs_lambdas.empty()) gibbs_lambdas = {cfg.lambda};
      emit_json(gibbs_to_json(gibbs_report(cfg, gibbs_lambdas, 0, gibbs_flags.workers)),
                gibbs_flags.out);
      return kExitOk;
    }
    if (check_cmd->parsed()) {
      select_kernels(check_flags);
      return cmd_check(check_flags, check_draws);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace tusla::harness
