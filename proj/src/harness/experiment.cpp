#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "tusla/diagnostics.hpp"
#include "tusla/errors.hpp"
#include "tusla/harness.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace tusla::harness {

namespace {

std::size_t worker_count(std::size_t requested, std::size_t tasks) {
  std::size_t n = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs fn(i) for i in [0, n) on a bounded pool; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = worker_count(workers, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double distance(std::span<const double> a, const std::vector<double>& b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return euclidean_norm(diff);
}

struct Task {
  Algorithm algorithm;
  std::uint64_t seed;
};

struct TaskResult {
  SeedOutcome outcome;
  std::vector<std::string> warnings;
  std::string file_text;
};

std::string run_file_name(Algorithm a, std::uint64_t seed, OutputFormat format) {
  return std::string(algorithm_name(a)) + "_seed" + std::to_string(seed) +
         (format == OutputFormat::kCsv ? ".csv" : ".json");
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const OutputOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const ProblemInstance problem = make_problem(cfg);
  const std::size_t d = problem.oracle->dimension();
  if (cfg.eta > 0.0) RegularizationParams{cfg.eta, cfg.r}.validate_for(problem.oracle->meta());

  std::vector<Task> tasks;
  const std::vector<std::uint64_t> seeds = cfg.effective_seeds();
  for (Algorithm a : cfg.algorithms) {
    for (std::uint64_t s : seeds) tasks.push_back({a, s});
  }

  std::vector<TaskResult> results(tasks.size());
  parallel_for(tasks.size(), options.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    RunOptions ro;
    ro.n_steps = cfg.n_steps;
    ro.seed = t.seed;
    ro.record_every = cfg.record_every;
    ro.divergence_threshold = cfg.divergence_threshold;
    const RunRecord rec = run(algorithm_config(cfg, t.algorithm), initial_theta(cfg, t.seed),
                              *problem.oracle, *problem.data, ro);
    SeedOutcome o;
    o.algorithm = t.algorithm;
    o.seed = t.seed;
    o.diverged = rec.diverged;
    o.divergence_step = rec.divergence_step;
    o.final_theta_norm = rec.final_theta.norm();
    if (!rec.diverged) {
      if (problem.minimizer) o.final_distance = distance(rec.final_theta.values(), *problem.minimizer);
      o.final_objective = problem.oracle->objective(rec.final_theta.values());
    }
    TaskResult& res = results[i];
    res.outcome = o;
    res.warnings = rec.warnings;
    if (options.write_files) {
      res.file_text = options.format == OutputFormat::kCsv ? format_csv(rec, d)
                                                           : record_to_json(rec).dump(1) + "\n";
    }
  });

  RunSummary summary;
  summary.preset = cfg.preset;
  for (const TaskResult& r : results) {
    summary.outcomes.push_back(r.outcome);
    for (const std::string& w : r.warnings) {
      if (std::find(summary.warnings.begin(), summary.warnings.end(), w) == summary.warnings.end()) {
        summary.warnings.push_back(w);
      }
    }
  }
  for (Algorithm a : cfg.algorithms) {
    AlgorithmSummary s;
    s.algorithm = a;
    std::vector<double> dists;
    std::vector<double> objectives;
    for (const SeedOutcome& o : summary.outcomes) {
      if (o.algorithm != a) continue;
      ++s.runs;
      if (o.diverged) {
        ++s.diverged;
        s.max_divergence_step = std::max(s.max_divergence_step.value_or(0), *o.divergence_step);
        continue;
      }
      ++s.counted;
      if (o.final_distance) dists.push_back(*o.final_distance);
      if (o.final_objective) objectives.push_back(*o.final_objective);
    }
    s.median_distance = median_of(dists);
    if (!dists.empty()) {
      double total = 0.0;
      for (double v : dists) total += v;
      s.mean_distance = total / static_cast<double>(dists.size());
    }
    s.median_objective = median_of(objectives);
    summary.algorithms.push_back(s);
  }

  if (options.write_files) {
    const std::filesystem::path dir(cfg.out_path);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      write_text_file(dir / run_file_name(tasks[i].algorithm, tasks[i].seed, options.format),
                      results[i].file_text);
    }
    write_text_file(dir / "summary.json", summary_to_json(summary, cfg).dump(2) + "\n");
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

RunSummary run_preset(std::string_view name, const std::vector<std::string>& overrides,
                      const OutputOptions& options) {
  ExperimentConfig cfg = preset_config(name);
  apply_overrides(cfg, overrides);
  return run_experiment(cfg, options);
}

nlohmann::ordered_json constants_report(const ExperimentConfig& cfg) {
  const ProblemInstance problem = make_problem(cfg);
  const OracleMeta meta = problem.oracle->meta();
  const RegularizationParams reg{cfg.eta, cfg.r};
  const diagnostics::DataExpectations e = diagnostics::estimate_expectations(
      *problem.oracle, *problem.data, cfg.seed, problem.k_mean_closed_form);
  const diagnostics::TheoryConstants c =
      diagnostics::theory_constants(meta, reg, e.k_mean.value, e.growth_mean.value, cfg.p_check);

  auto defined = [&c](double v) -> nlohmann::ordered_json {
    if (c.native_dissipativity) return nullptr;
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_real(v));
  };
  auto expectation = [](const diagnostics::ExpectationEstimate& x) {
    nlohmann::ordered_json j;
    j["value"] = x.value;
    j["monte_carlo_mean"] = x.mc_mean;
    j["monte_carlo_std_error"] = x.mc_std_error;
    j["closed_form"] = x.closed_form ? nlohmann::ordered_json(*x.closed_form) : nlohmann::ordered_json(nullptr);
    return j;
  };

  nlohmann::ordered_json j;
  j["problem"] = problem.oracle->name();
  j["q"] = meta.q;
  j["rho"] = meta.rho;
  j["L1"] = meta.L1;
  j["eta"] = cfg.eta;
  j["r"] = cfg.r;
  j["p"] = cfg.p_check;
  j["native_dissipativity"] = c.native_dissipativity;
  j["A"] = defined(c.A);
  j["B"] = defined(c.B);
  j["a"] = defined(c.a);
  j["R"] = defined(c.R);
  j["L2"] = c.L2;
  j["L"] = c.L;
  j["l"] = c.l;
  j["lambda_max"] = c.lambda_max;
  j["K_mean"] = c.K_mean;
  j["expectations"] = {{"K", expectation(e.k_mean)}, {"growth", expectation(e.growth_mean)}};
  j["monte_carlo_draws"] = diagnostics::kDefaultMonteCarloDraws;
  return j;
}

std::vector<double> replica_terminal_states(const ExperimentConfig& cfg, double lambda,
                                            std::uint64_t repetition, std::size_t workers) {
  const ProblemInstance problem = make_problem(cfg);
  if (problem.oracle->dimension() != 1) {
    throw UsageError("replica experiments need a one-dimensional problem");
  }
  ExperimentConfig local = cfg;
  local.lambda = lambda;
  const AlgorithmConfig algo = algorithm_config(local, Algorithm::kTusla);
  const std::uint64_t base = derive_seed(cfg.seed, 0x5245504cULL + repetition);
  std::vector<double> terminal(cfg.replicas);
  parallel_for(cfg.replicas, workers, [&](std::size_t i) {
    RunOptions ro;
    ro.n_steps = cfg.n_steps;
    ro.seed = derive_seed(base, i);
    ro.record_every = cfg.n_steps;
    ro.divergence_threshold = cfg.divergence_threshold;
    const RunRecord rec = run(algo, initial_theta(cfg, ro.seed), *problem.oracle, *problem.data, ro);
    terminal[i] = rec.final_theta[0];
  });
  return terminal;
}

GibbsReport gibbs_report(const ExperimentConfig& cfg, const std::vector<double>& lambdas,
                         std::uint64_t repetition, std::size_t workers) {
  GibbsReport rep;
  rep.beta = cfg.beta;
  rep.replicas = cfg.replicas;
  rep.lambdas = lambdas;
  std::optional<diagnostics::EmpiricalDistribution1D> reference;
  if (cfg.problem == ProblemKind::kQuadratic) {
    const double sd = 1.0 / std::sqrt(cfg.beta);
    reference = diagnostics::normal_quantile_grid(cfg.replicas, 0.0, sd);
    rep.target_mean = 0.0;
    rep.target_variance = sd * sd;
  } else if (cfg.problem == ProblemKind::kUs) {
    const auto u = [s = cfg.s](double t) { return problems::u_s_value(t, s); };
    const diagnostics::GibbsTable table = diagnostics::build_gibbs_table(
        u, cfg.beta, problems::kUsMinimizer - 20.0, problems::kUsMinimizer + 20.0);
    std::vector<double> q(cfg.replicas);
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] = table.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(q.size()));
    }
    reference = diagnostics::EmpiricalDistribution1D(std::move(q));
    rep.target_mean = reference->mean();
    rep.target_variance = reference->variance();
  } else {
    throw UsageError("gibbs: only the quadratic and u_s problems have a tabulated target");
  }
  for (double lambda : lambdas) {
    const diagnostics::EmpiricalDistribution1D sample(
        replica_terminal_states(cfg, lambda, repetition, workers));
    rep.w1.push_back(diagnostics::wasserstein_p_1d(sample, *reference, 1));
    rep.w2.push_back(diagnostics::wasserstein_p_1d(sample, *reference, 2));
  }
  return rep;
}

nlohmann::ordered_json gibbs_to_json(const GibbsReport& report) {
  nlohmann::ordered_json j;
  j["beta"] = report.beta;
  j["replicas"] = report.replicas;
  j["target_mean"] = report.target_mean;
  j["target_variance"] = report.target_variance;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.lambdas.size(); ++i) {
    rows.push_back({{"lambda", report.lambdas[i]}, {"W1", report.w1[i]}, {"W2", report.w2[i]}});
  }
  j["results"] = rows;
  return j;
}

}  // namespace tusla::harness
