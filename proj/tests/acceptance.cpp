// Acceptance criteria. Usage: acceptance [AC1 ... AC9]; no argument runs all.
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tusla/checks.hpp"
#include "tusla/diagnostics.hpp"
#include "tusla/harness.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace fs = std::filesystem;
namespace hn = tusla::harness;
namespace dg = tusla::diagnostics;

namespace {

// Pinned tolerances.
constexpr double kNearMinimiser = 0.5;
constexpr double kAdamStuck = 1.0;
constexpr std::size_t kSgldDivergedSeeds = 15;
constexpr std::int64_t kSgldDivergenceStep = 5;
constexpr double kFamilySeconds = 10.0;
constexpr double kFdRelError = 1e-5;
constexpr double kFdSeconds = 5.0;
constexpr std::size_t kSuiteDraws = 1000;
constexpr double kOneNeuronEta = 0.01;
constexpr double kOneNeuronB = 1e3;
constexpr double kW2Target = 0.1;
constexpr double kGibbsSeconds = 60.0;
constexpr double kKs = 0.01;
constexpr std::size_t kKsSamples = 100000;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median_or_inf(const std::optional<double>& v) { return v.value_or(INFINITY); }

hn::RunSummary family(const std::string& preset, double& secs) {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = hn::run_experiment(hn::preset_config(preset), {false, hn::OutputFormat::kCsv, 0});
  secs = seconds_since(t0);
  return s;
}

const hn::AlgorithmSummary& of(const hn::RunSummary& s, tusla::Algorithm a) {
  for (const auto& x : s.algorithms)
    if (x.algorithm == a) return x;
  throw std::runtime_error("missing algorithm");
}

Outcome ac1() {
  double secs = 0;
  const auto s = family("paper-s2", secs);
  const double tusla = median_or_inf(of(s, tusla::Algorithm::kTusla).median_distance);
  const double adam = median_or_inf(of(s, tusla::Algorithm::kAdam).median_distance);
  const bool pass = tusla < kNearMinimiser && adam < kNearMinimiser && secs < kFamilySeconds;
  return {pass, fmt("s=2 median|theta-0.1| tusla=%.4g adam=%.4g (< %.2g), %.2f s (< %.0f)", tusla, adam,
                    kNearMinimiser, secs, kFamilySeconds)};
}

Outcome ac2() {
  double secs = 0;
  const auto s = family("paper-s26", secs);
  const double tusla = median_or_inf(of(s, tusla::Algorithm::kTusla).median_distance);
  const double adam = median_or_inf(of(s, tusla::Algorithm::kAdam).median_distance);
  std::size_t early = 0;
  for (const auto& o : s.outcomes) {
    if (o.algorithm == tusla::Algorithm::kSgld && o.diverged && *o.divergence_step <= kSgldDivergenceStep) ++early;
  }
  const bool pass = tusla < kNearMinimiser && adam > kAdamStuck && early >= kSgldDivergedSeeds &&
                    secs < kFamilySeconds;
  return {pass, fmt("s=26 median|theta-0.1| tusla=%.4g (< %.2g) adam=%.4g (> %.2g), sgld diverged by step %lld "
                    "in %zu/16 (>= %zu), %.2f s (< %.0f)",
                    tusla, kNearMinimiser, adam, kAdamStuck, static_cast<long long>(kSgldDivergenceStep), early,
                    kSgldDivergedSeeds, secs, kFamilySeconds)};
}

Outcome ac3() {
  const tusla::problems::UsProblem us(26);
  const tusla::problems::UniformDataSource data;
  tusla::TuslaConfig cfg;
  cfg.lambda = 0.05;
  cfg.beta = 0.05;
  cfg.reg = {0.01, 36.0};
  tusla::RunOptions o;
  o.n_steps = 10000;
  o.seed = 0;
  const auto rec = tusla::run(cfg, tusla::ParameterVector{1e3}, us, data, o);
  std::size_t non_finite = 0;
  for (const auto& s : rec.steps) {
    if (!std::isfinite(s.theta_norm) || !std::isfinite(s.grad_norm) || (s.theta && !std::isfinite(s.theta->at(0))))
      ++non_finite;
  }
  const bool completed = !rec.diverged && rec.steps.back().n == o.n_steps;

  // The same drift formed naively: |theta|^72 in float at 1e3, in double at 1e5.
  auto naive_bad = [](auto theta) {
    using T = decltype(theta);
    const T g[1] = {T(1)};
    const T t[1] = {theta};
    const auto h = tusla::naive_drift_values<T>(g, t, T(0.05), T(0.01), T(36));
    const auto safe = tusla::safe_drift_values<T>(g, t, T(0.05), T(0.01), T(36));
    return std::make_pair(!std::isfinite(h[0]), std::isfinite(safe[0]));
  };
  const auto [f_naive, f_safe] = naive_bad(1e3f);
  const auto [d_naive, d_safe] = naive_bad(1e5);
  const bool pass = completed && non_finite == 0 && f_naive && f_safe && d_naive && d_safe;
  return {pass, fmt("safe run %s %lld steps, non-finite=%zu; naive overflow float@1e3=%d double@1e5=%d, "
                    "safe finite=%d/%d",
                    completed ? "completed" : "stopped", static_cast<long long>(rec.steps.back().n), non_finite,
                    f_naive, d_naive, f_safe, d_safe)};
}

Outcome ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = tusla::checks::network_finite_difference_check(2024, 50);
  const double secs = seconds_since(t0);
  const bool pass = rep.configurations == 50 && rep.max_rel_error_g < kFdRelError &&
                    rep.max_rel_error_h < kFdRelError && secs < kFdSeconds;
  return {pass, fmt("%zu configurations, max rel error G=%.3g H=%.3g (< %.0e), %.2f s (< %.0f)", rep.configurations,
                    rep.max_rel_error_g, rep.max_rel_error_h, kFdRelError, secs, kFdSeconds)};
}

Outcome ac5() {
  std::size_t suites = 0, violations = 0, min_draws = SIZE_MAX;
  double worst = 0;
  for (const auto& r : tusla::checks::all_bound_suites(2024, kSuiteDraws)) {
    ++suites;
    violations += r.violations;
    min_draws = std::min(min_draws, r.draws);
    worst = std::max(worst, r.worst_ratio);
  }
  const bool pass = suites > 0 && violations == 0 && min_draws >= kSuiteDraws;
  return {pass, fmt("%zu suite/problem pairs, >= %zu draws each, violations=%zu, worst lhs/rhs=%.4g", suites,
                    min_draws, violations, worst)};
}

Outcome ac6() {
  bool pass = true;
  std::string detail;
  for (int s : {2, 26}) {
    const auto d = tusla::checks::us_dissipativity(s, 2024);
    pass = pass && d.report.pass;
    detail += fmt("s=%d min slack=%.4g violations=%zu; ", s, d.report.min_slack, d.report.violations.size());
  }
  // Quadratic-penalty candidate with A = 1 and a finite B along the ray w1 = w1*.
  const auto v = dg::one_neuron_violation(kOneNeuronEta, 1.0, kOneNeuronB, {10.0, 100.0, 1000.0});
  pass = pass && v.certified;
  detail += fmt("one-neuron A=1 B=%.0f critical B at w2=10,100,1000: %.4g %.4g %.4g certified=%d", kOneNeuronB,
                 v.points[0].critical_b, v.points[1].critical_b, v.points[2].critical_b, v.certified);
  return {pass, detail};
}

double gibbs_w2(const hn::ExperimentConfig& cfg, double lambda, std::uint64_t repetition) {
  return hn::gibbs_report(cfg, {lambda}, repetition, 0).w2.at(0);
}

Outcome ac7() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = hn::preset_config("gibbs-quadratic");
  cfg.replicas = 512;
  cfg.n_steps = 20000;
  const double w_mid = gibbs_w2(cfg, 0.01, 0);
  double big = 0, small = 0;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    big += gibbs_w2(cfg, 0.04, rep) / 3;
    small += gibbs_w2(cfg, 0.0025, rep) / 3;
  }
  const double secs = seconds_since(t0);
  const bool pass = w_mid < kW2Target && big > small && secs < kGibbsSeconds;
  return {pass, fmt("W2(0.01)=%.4g (< %.2g), mean W2(0.04)=%.4g > mean W2(0.0025)=%.4g, %.1f s (< %.0f)", w_mid,
                    kW2Target, big, small, secs, kGibbsSeconds)};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[e.path().filename().string()] = os.str();
  }
  return out;
}

Outcome ac8() {
  const fs::path base = fs::temp_directory_path() / "tusla_acceptance_ac8";
  fs::remove_all(base);
  auto cfg = hn::preset_config("paper-s26");
  cfg.out_path = (base / "a").string();
  (void)hn::run_experiment(cfg, {true, hn::OutputFormat::kCsv, 0});
  cfg.out_path = (base / "b").string();
  (void)hn::run_experiment(cfg, {true, hn::OutputFormat::kCsv, 1});
  const auto a = read_dir(base / "a");
  const auto b = read_dir(base / "b");
  fs::remove_all(base);
  const bool pass = !a.empty() && a == b;
  return {pass, fmt("%zu files compared across two runs (parallel vs serial), identical=%d", a.size(), a == b)};
}

Outcome ac9() {
  using D = dg::EmpiricalDistribution1D;
  struct Fixture {
    std::vector<double> a, b;
    int p;
    double expected;
  };
  const std::vector<Fixture> fixtures{
      {{0, 1}, {0, 3}, 1, 1.0},
      {{0, 1}, {0, 3}, 2, std::sqrt(2.0)},
      {{5}, {2}, 2, 3.0},
      {{3, 0, 1}, {2, 1, 0}, 1, 1.0 / 3.0},
      {{1, 2, 3, 4}, {2, 3, 4, 5}, 2, 1.0},
      {{-1, 1}, {-3, 3}, 2, 2.0},
  };
  std::size_t exact = 0;
  for (const auto& f : fixtures) {
    if (dg::wasserstein_p_1d(D(f.a), D(f.b), f.p) == f.expected) ++exact;
  }
  tusla::Rng rng(tusla::derive_seed(2024, tusla::streams::kMonteCarlo));
  const auto s = dg::gibbs_sampler_1d([](double t) { return 0.5 * t * t; }, 1.0, -1.0, 1.0, kKsSamples, rng);
  const double ks = dg::ks_statistic(s, [](double x) { return dg::normal_cdf(x); });
  const bool pass = exact == fixtures.size() && ks < kKs;
  return {pass, fmt("W_p fixtures exact %zu/%zu, Gibbs KS=%.4g at N=%zu (< %.2g)", exact, fixtures.size(), ks,
                    kKsSamples, kKs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool ok = true;
  for (const auto& [name, fn] : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    Outcome out{false, ""};
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str());
    std::fflush(stdout);
    ok = ok && out.pass;
  }
  return ok ? 0 : 1;
}
