#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tusla/errors.hpp"
#include "tusla/harness.hpp"
#include "tusla/problems.hpp"

namespace fs = std::filesystem;
namespace hn = tusla::harness;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tusla_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tusla");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return hn::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Presets, FamilyExperiments) {
  for (int s : {2, 26}) {
    const auto cfg = hn::preset_config("paper-s" + std::to_string(s));
    EXPECT_EQ(cfg.problem, hn::ProblemKind::kUs);
    EXPECT_EQ(cfg.s, s);
    EXPECT_DOUBLE_EQ(cfg.lambda, 0.05);
    EXPECT_DOUBLE_EQ(cfg.beta, 0.05);
    EXPECT_DOUBLE_EQ(cfg.eta, 0.01);
    EXPECT_DOUBLE_EQ(cfg.r, s + 10.0);
    EXPECT_EQ(cfg.theta0, std::vector<double>{1000.0});
    EXPECT_EQ(cfg.n_steps, 10000);
    EXPECT_DOUBLE_EQ(cfg.alpha, 10.0);
    EXPECT_EQ(cfg.effective_seeds().size(), 16u);
    EXPECT_EQ(cfg.algorithms.size(), 3u);
    EXPECT_FALSE(cfg.unbiased_gradient);
  }
  EXPECT_THROW((void)hn::preset_config("paper-s3"), tusla::UsageError);
  for (const auto& name : hn::preset_names()) EXPECT_NO_THROW(hn::preset_config(name).validate());
}

TEST(Config, TextRoundTrip) {
  for (const auto& name : hn::preset_names()) {
    const auto cfg = hn::preset_config(name);
    EXPECT_EQ(hn::parse_config_text(hn::to_config_text(cfg)), cfg) << name;
  }
  auto cfg = hn::preset_config("paper-s2");
  hn::apply_overrides(cfg, {"lambda=0.001", "seeds=3,5", "algorithms=tusla,adam", "theta0=-2.5"});
  EXPECT_DOUBLE_EQ(cfg.lambda, 0.001);
  EXPECT_EQ(cfg.effective_seeds(), (std::vector<std::uint64_t>{3, 5}));
  EXPECT_EQ(cfg.algorithms.size(), 2u);
  EXPECT_EQ(hn::parse_config_text(hn::to_config_text(cfg)), cfg);
}

TEST(Config, CommentsAndPresetFirst) {
  const auto cfg = hn::parse_config_text("# comment\nlambda = 0.02\npreset = paper-s26\n\n");
  EXPECT_EQ(cfg.s, 26);
  EXPECT_DOUBLE_EQ(cfg.lambda, 0.02);
}

TEST(Config, BadFields) {
  hn::ExperimentConfig cfg;
  EXPECT_THROW(hn::set_field(cfg, "lamda", "0.1"), tusla::UsageError);
  EXPECT_THROW(hn::set_field(cfg, "lambda", "abc"), tusla::UsageError);
  EXPECT_THROW(hn::set_field(cfg, "algorithm", "sgd"), tusla::UsageError);
  EXPECT_THROW(hn::apply_overrides(cfg, {"lambda"}), tusla::UsageError);
  EXPECT_THROW(hn::parse_config_text("n_steps=10\nfoo=1\n"), tusla::UsageError);
  cfg.eta = 1.5;
  EXPECT_THROW(cfg.validate(), tusla::UsageError);
}

TEST(Csv, RoundTrip) {
  auto cfg = hn::preset_config("paper-s2");
  const auto problem = hn::make_problem(cfg);
  tusla::RunOptions o;
  o.n_steps = 50;
  o.seed = 3;
  const auto rec = tusla::run(hn::algorithm_config(cfg, tusla::Algorithm::kTusla), hn::initial_theta(cfg, 3),
                              *problem.oracle, *problem.data, o);
  const std::string text = hn::format_csv(rec, 1);
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,theta_norm,theta,objective,grad_norm");
  EXPECT_EQ(hn::parse_csv(text), rec.steps);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_THROW((void)hn::parse_csv("step,theta_norm\n1,x\n"), tusla::UsageError);
}

TEST(Csv, RowCounts) {
  const tusla::problems::UsProblem us(2);
  const tusla::problems::UniformDataSource data;
  auto rows = [](const std::string& t) { return std::count(t.begin(), t.end(), '\n'); };
  EXPECT_EQ(rows(hn::format_csv(tusla::RunRecord{}, 1)), 1);
  for (std::int64_t n : {1, 10000}) {
    tusla::RunOptions o;
    o.n_steps = n;
    const auto rec = tusla::run(tusla::TuslaConfig{}, tusla::ParameterVector{1e3}, us, data, o);
    EXPECT_EQ(rows(hn::format_csv(rec, 1)), n + 2);
  }
}

TEST(Csv, WideParametersDropThetaColumn) {
  auto cfg = hn::preset_config("nn-demo");
  const auto problem = hn::make_problem(cfg);
  ASSERT_GT(problem.oracle->dimension(), 8u);
  tusla::RunOptions o;
  o.n_steps = 5;
  const auto rec = tusla::run(hn::algorithm_config(cfg, tusla::Algorithm::kTusla), hn::initial_theta(cfg, 0),
                              *problem.oracle, *problem.data, o);
  const std::string text = hn::format_csv(rec, problem.oracle->dimension());
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,theta_norm,objective,grad_norm");
  EXPECT_EQ(hn::parse_csv(text), rec.steps);
}

TEST(Output, WriteErrors) {
  EXPECT_THROW(hn::write_text_file("/proc/definitely/not/here.csv", "x"), tusla::IoError);
  EXPECT_EQ(hn::format_real(0.1), "0.10000000000000001");
}

TEST(Experiment, FilesAreByteIdentical) {
  auto cfg = hn::preset_config("paper-s2");
  hn::apply_overrides(cfg, {"n_steps=2000", "n_seeds=3"});
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  cfg.out_path = a.string();
  (void)hn::run_experiment(cfg, {true, hn::OutputFormat::kCsv, 3});
  cfg.out_path = b.string();
  (void)hn::run_experiment(cfg, {true, hn::OutputFormat::kCsv, 1});
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const std::string mine = slurp(e.path());
    EXPECT_FALSE(mine.empty());
    EXPECT_EQ(mine, slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_EQ(files, 3u * 3u + 1u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, SummaryCountsDivergence) {
  auto cfg = hn::preset_config("paper-s26");
  hn::apply_overrides(cfg, {"n_steps=200", "n_seeds=4"});
  const auto summary = hn::run_experiment(cfg, {false, hn::OutputFormat::kCsv, 0});
  ASSERT_EQ(summary.algorithms.size(), 3u);
  const auto& sgld = summary.algorithms[1];
  EXPECT_EQ(sgld.algorithm, tusla::Algorithm::kSgld);
  EXPECT_EQ(sgld.runs, 4u);
  EXPECT_EQ(sgld.diverged, 4u);
  EXPECT_FALSE(sgld.median_distance.has_value());
  EXPECT_EQ(summary.algorithms[0].diverged, 0u);
  const auto j = hn::summary_to_json(summary, cfg);
  EXPECT_TRUE(j.contains("algorithms"));
}

TEST(Constants, ReportFields) {
  auto cfg = hn::preset_config("paper-s2");
  const auto j = hn::constants_report(cfg);
  for (const char* key : {"q", "rho", "L1", "A", "B", "a", "R", "L", "l", "lambda_max", "K_mean"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ(j["q"].get<double>(), 4.0);
  EXPECT_DOUBLE_EQ(j["l"].get<double>(), 25.0);
  EXPECT_DOUBLE_EQ(j["A"].get<double>(), j["K_mean"].get<double>());
}

TEST(Gibbs, QuadraticReplicas) {
  auto cfg = hn::preset_config("gibbs-quadratic");
  cfg.replicas = 256;
  cfg.n_steps = 2000;
  const auto rep = hn::gibbs_report(cfg, {0.01}, 0, 0);
  ASSERT_EQ(rep.w2.size(), 1u);
  EXPECT_LT(rep.w2[0], 0.1);
  EXPECT_LE(rep.w1[0], rep.w2[0]);
  EXPECT_DOUBLE_EQ(rep.target_variance, 0.25);
  // Workers never change the result.
  EXPECT_EQ(hn::replica_terminal_states(cfg, 0.01, 0, 1), hn::replica_terminal_states(cfg, 0.01, 0, 4));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"run", "--bogus"}), hn::kExitUsage);
  EXPECT_EQ(cli({"run", "--preset", "nope"}), hn::kExitUsage);
  EXPECT_EQ(cli({}), hn::kExitUsage);
  EXPECT_EQ(cli({"run", "--preset", "paper-s2", "--set", "lambda=-1"}), hn::kExitUsage);
  EXPECT_EQ(cli({"run", "--preset", "paper-s2", "--set", "n_steps=5", "--out", "/proc/nope/out"}), hn::kExitIo);
  const fs::path out = scratch("cli_run");
  EXPECT_EQ(cli({"run", "--preset", "paper-s2", "--set", "n_steps=5", "--set", "n_seeds=1", "--out", out.string()}),
            hn::kExitOk);
  EXPECT_TRUE(fs::exists(out / "tusla_seed0.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  fs::remove_all(out);
}

TEST(Cli, ConstantsAndGibbsJson) {
  const fs::path dir = scratch("cli_json");
  fs::create_directories(dir);
  ASSERT_EQ(cli({"constants", "--problem", "us", "--s", "26", "--out", (dir / "c.json").string()}), hn::kExitOk);
  const auto c = nlohmann::json::parse(slurp(dir / "c.json"));
  EXPECT_DOUBLE_EQ(c["q"].get<double>(), 52.0);
  EXPECT_DOUBLE_EQ(c["r"].get<double>(), 36.0);
  ASSERT_EQ(cli({"gibbs", "--replicas", "128", "--steps", "1000", "--out", (dir / "g.json").string()}), hn::kExitOk);
  const auto g = nlohmann::json::parse(slurp(dir / "g.json"));
  EXPECT_TRUE(g.contains("beta"));
  fs::remove_all(dir);
}

TEST(Cli, Executable) {
  const std::string cmd = std::string(TUSLA_CLI_PATH) + " run --preset nope > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_NE(status, -1);
  EXPECT_EQ(WEXITSTATUS(status), hn::kExitUsage);
}
