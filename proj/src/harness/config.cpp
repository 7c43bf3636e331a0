#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tusla/errors.hpp"
#include "tusla/harness.hpp"
#include "tusla/neural_net.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace tusla::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw UsageError("invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) bad_value(key, value);
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int v{};
  // Accept integral values written in exponent form such as 1e4.
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec == std::errc() && ptr == value.data() + value.size()) return v;
  const double d = parse_real(key, value);
  if (d != std::floor(d) || d < static_cast<double>(std::numeric_limits<Int>::min()) ||
      d > static_cast<double>(std::numeric_limits<Int>::max())) {
    bad_value(key, value);
  }
  return static_cast<Int>(d);
}

std::vector<double> parse_reals(std::string_view key, std::string_view value) {
  std::vector<double> out;
  for (auto part : split(value, ',')) out.push_back(parse_real(key, part));
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_real(v[i]);
  }
  return out;
}

template <typename T>
std::string join_ints(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string_view problem_name(ProblemKind p) noexcept {
  switch (p) {
    case ProblemKind::kUs:
      return "us";
    case ProblemKind::kOneNeuron:
      return "one_neuron";
    case ProblemKind::kMlp:
      return "mlp";
    case ProblemKind::kQuadratic:
      return "quadratic";
  }
  return "unknown";
}

ProblemKind parse_problem(std::string_view name) {
  if (name == "us") return ProblemKind::kUs;
  if (name == "one_neuron") return ProblemKind::kOneNeuron;
  if (name == "mlp") return ProblemKind::kMlp;
  if (name == "quadratic") return ProblemKind::kQuadratic;
  throw UsageError("unknown problem '" + std::string(name) + "'");
}

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(n_seeds);
  for (std::size_t i = 0; i < n_seeds; ++i) out[i] = seed + i;
  return out;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw UsageError("config: no algorithm selected");
  if (n_steps < 1) throw UsageError("config: n_steps must be >= 1");
  if (record_every < 1) throw UsageError("config: record_every must be >= 1");
  if (effective_seeds().empty()) throw UsageError("config: no seeds");
  if (!(divergence_threshold > 0.0)) throw UsageError("config: divergence_threshold must be > 0");
  if (problem == ProblemKind::kUs && s < 0) throw UsageError("config: s must be >= 0");
  if (problem == ProblemKind::kQuadratic && dimension == 0) {
    throw UsageError("config: dimension must be >= 1");
  }
  if (problem == ProblemKind::kMlp) {
    nn::Architecture{dims, nn::Activation::by_name(activation)}.validate();
  }
  if (replicas == 0) throw UsageError("config: replicas must be >= 1");
  TuslaConfig{lambda, beta, {eta, r}, p_check, true}.validate();
  AdamConfig{alpha, beta1, beta2, eps}.validate();
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"paper-s2", "paper-s26", "nn-demo",
                                              "gibbs-quadratic"};
  return names;
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  c.preset = std::string(name);
  if (name == "paper-s2" || name == "paper-s26") {
    c.problem = ProblemKind::kUs;
    c.s = name == "paper-s2" ? 2 : 26;
    c.lambda = 0.05;
    c.beta = 0.05;
    c.eta = 0.01;
    c.r = c.s + 10.0;
    c.theta0 = {1000.0};
    c.n_steps = 10000;
    c.alpha = 10.0;
    c.beta1 = 0.9;
    c.beta2 = 0.999;
    c.eps = 1e-8;
    c.n_seeds = 16;
    return c;
  }
  if (name == "nn-demo") {
    c.problem = ProblemKind::kMlp;
    c.dims = {2, 4, 4};
    c.activation = "tanh";
    c.noise_std = 0.1;
    c.lambda = 0.01;
    c.beta = 1e8;
    c.eta = 1e-4;
    c.r = 4.0;  // q/2 + 1 for two hidden layers
    c.theta0.clear();
    c.n_steps = 5000;
    c.alpha = 0.01;
    c.n_seeds = 4;
    c.record_every = 10;
    return c;
  }
  if (name == "gibbs-quadratic") {
    c.problem = ProblemKind::kQuadratic;
    c.dimension = 1;
    c.algorithms = {Algorithm::kTusla};
    c.lambda = 0.01;
    c.beta = 4.0;
    c.eta = 0.0;
    c.r = 1.5;
    c.theta0 = {0.0};
    c.n_steps = 20000;
    c.n_seeds = 16;
    c.record_every = 100;
    c.replicas = 512;
    return c;
  }
  throw UsageError("unknown preset '" + std::string(name) + "'");
}

void set_field(ExperimentConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "preset") {
    const std::string out = c.out_path;
    c = preset_config(value);
    c.out_path = out;
  } else if (key == "problem") {
    c.problem = parse_problem(value);
  } else if (key == "algorithm" || key == "algorithms") {
    c.algorithms.clear();
    if (value == "all") {
      c.algorithms = {Algorithm::kTusla, Algorithm::kSgld, Algorithm::kAdam};
    } else {
      for (auto part : split(value, ',')) c.algorithms.push_back(parse_algorithm(part));
    }
  } else if (key == "s") {
    c.s = parse_int<int>(key, value);
  } else if (key == "gradient") {
    if (value == "printed") c.unbiased_gradient = false;
    else if (value == "unbiased") c.unbiased_gradient = true;
    else bad_value(key, value);
  } else if (key == "dimension") {
    c.dimension = parse_int<std::size_t>(key, value);
  } else if (key == "lambda") {
    c.lambda = parse_real(key, value);
  } else if (key == "beta") {
    c.beta = parse_real(key, value);
  } else if (key == "eta") {
    c.eta = parse_real(key, value);
  } else if (key == "r") {
    c.r = parse_real(key, value);
  } else if (key == "p_check") {
    c.p_check = parse_int<int>(key, value);
  } else if (key == "alpha") {
    c.alpha = parse_real(key, value);
  } else if (key == "beta1") {
    c.beta1 = parse_real(key, value);
  } else if (key == "beta2") {
    c.beta2 = parse_real(key, value);
  } else if (key == "eps") {
    c.eps = parse_real(key, value);
  } else if (key == "theta0") {
    if (value == "random") c.theta0.clear();
    else c.theta0 = parse_reals(key, value);
  } else if (key == "n_steps") {
    c.n_steps = parse_int<std::int64_t>(key, value);
  } else if (key == "seed") {
    c.seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "n_seeds") {
    c.n_seeds = parse_int<std::size_t>(key, value);
  } else if (key == "seeds") {
    c.seeds.clear();
    if (!value.empty()) {
      for (auto part : split(value, ',')) c.seeds.push_back(parse_int<std::uint64_t>(key, part));
    }
  } else if (key == "record_every") {
    c.record_every = parse_int<std::int64_t>(key, value);
  } else if (key == "divergence_threshold") {
    c.divergence_threshold = parse_real(key, value);
  } else if (key == "out_path" || key == "out") {
    c.out_path = std::string(value);
  } else if (key == "dims") {
    c.dims.clear();
    for (auto part : split(value, ',')) c.dims.push_back(parse_int<std::size_t>(key, part));
  } else if (key == "activation") {
    c.activation = std::string(nn::Activation::by_name(std::string(value)).name);
  } else if (key == "noise_std") {
    c.noise_std = parse_real(key, value);
  } else if (key == "eval_samples") {
    c.eval_samples = parse_int<std::size_t>(key, value);
  } else if (key == "replicas") {
    c.replicas = parse_int<std::size_t>(key, value);
  } else {
    throw UsageError("unknown configuration key '" + std::string(key) + "'");
  }
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& items) {
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + item + "' is not key=value");
    set_field(cfg, trim(std::string_view(item).substr(0, eq)),
              std::string_view(item).substr(eq + 1));
  }
}

ExperimentConfig parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    pairs.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  ExperimentConfig cfg;
  for (const auto& [k, v] : pairs) {
    if (k == "preset") set_field(cfg, k, v);
  }
  for (const auto& [k, v] : pairs) {
    if (k != "preset") set_field(cfg, k, v);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::vector<std::string> algos;
  for (Algorithm a : c.algorithms) algos.emplace_back(algorithm_name(a));
  std::string algo_list;
  for (std::size_t i = 0; i < algos.size(); ++i) algo_list += (i ? "," : "") + algos[i];

  std::ostringstream os;
  if (!c.preset.empty()) os << "preset = " << c.preset << "\n";
  os << "problem = " << problem_name(c.problem) << "\n"
     << "algorithm = " << algo_list << "\n"
     << "s = " << c.s << "\n"
     << "gradient = " << (c.unbiased_gradient ? "unbiased" : "printed") << "\n"
     << "dimension = " << c.dimension << "\n"
     << "lambda = " << format_real(c.lambda) << "\n"
     << "beta = " << format_real(c.beta) << "\n"
     << "eta = " << format_real(c.eta) << "\n"
     << "r = " << format_real(c.r) << "\n"
     << "p_check = " << c.p_check << "\n"
     << "alpha = " << format_real(c.alpha) << "\n"
     << "beta1 = " << format_real(c.beta1) << "\n"
     << "beta2 = " << format_real(c.beta2) << "\n"
     << "eps = " << format_real(c.eps) << "\n"
     << "theta0 = " << (c.theta0.empty() ? std::string("random") : join_reals(c.theta0)) << "\n"
     << "n_steps = " << c.n_steps << "\n"
     << "seed = " << c.seed << "\n"
     << "n_seeds = " << c.n_seeds << "\n"
     << "seeds = " << join_ints(c.seeds) << "\n"
     << "record_every = " << c.record_every << "\n"
     << "divergence_threshold = " << format_real(c.divergence_threshold) << "\n"
     << "out_path = " << c.out_path << "\n"
     << "dims = " << join_ints(c.dims) << "\n"
     << "activation = " << c.activation << "\n"
     << "noise_std = " << format_real(c.noise_std) << "\n"
     << "eval_samples = " << c.eval_samples << "\n"
     << "replicas = " << c.replicas << "\n";
  return os.str();
}

ProblemInstance make_problem(const ExperimentConfig& cfg) {
  ProblemInstance p;
  switch (cfg.problem) {
    case ProblemKind::kUs: {
      auto us = std::make_shared<problems::UsProblem>(
          cfg.s, cfg.unbiased_gradient ? problems::UsGradient::kUnbiased
                                       : problems::UsGradient::kPrinted);
      p.k_mean_closed_form = us->expected_k_uniform();
      p.oracle = us;
      p.data = std::make_shared<problems::UniformDataSource>(0.0, 11.0);
      p.minimizer = std::vector<double>{problems::kUsMinimizer};
      break;
    }
    case ProblemKind::kOneNeuron: {
      p.oracle = std::make_shared<problems::OneNeuronProblem>(cfg.eta > 0.0 ? cfg.eta : 0.01);
      // The single data point (x, y) = (1, 0) of the non-dissipative construction.
      p.data = std::make_shared<problems::FixedDataSource>(std::vector<double>{1.0, 0.0});
      break;
    }
    case ProblemKind::kMlp: {
      nn::Architecture arch{cfg.dims, nn::Activation::by_name(cfg.activation)};
      arch.validate();
      // Teacher and evaluation set are fixed across seeds.
      Rng teacher_rng(derive_seed(0x7465616368ULL, streams::kInit));
      const nn::MlpParams teacher = nn::random_params(arch, teacher_rng);
      auto data = std::make_shared<nn::TeacherDataSource>(arch, teacher, cfg.noise_std);
      Rng eval_rng(derive_seed(0x7465616368ULL, streams::kData));
      std::vector<DataSample> eval(cfg.eval_samples);
      for (DataSample& s : eval) data->sample(eval_rng, s);
      p.oracle = std::make_shared<nn::MlpOracle>(arch, std::move(eval));
      p.data = data;
      break;
    }
    case ProblemKind::kQuadratic: {
      p.oracle = std::make_shared<problems::QuadraticProblem>(cfg.dimension);
      p.data = std::make_shared<problems::FixedDataSource>(std::vector<double>{0.0});
      p.minimizer = std::vector<double>(cfg.dimension, 0.0);
      p.k_mean_closed_form = 2.0;  // K(0) = 2 (L1 + |G(0, 0)|) with L1 = 1
      break;
    }
  }
  return p;
}

AlgorithmConfig algorithm_config(const ExperimentConfig& cfg, Algorithm a) {
  switch (a) {
    case Algorithm::kTusla:
      return TuslaConfig{cfg.lambda, cfg.beta, {cfg.eta, cfg.r}, cfg.p_check, true};
    case Algorithm::kSgld:
      return SgldConfig{cfg.lambda, cfg.beta};
    case Algorithm::kAdam:
      return AdamConfig{cfg.alpha, cfg.beta1, cfg.beta2, cfg.eps};
  }
  throw UsageError("unknown algorithm");
}

ParameterVector initial_theta(const ExperimentConfig& cfg, std::uint64_t seed) {
  const ProblemInstance p = make_problem(cfg);
  const std::size_t d = p.oracle->dimension();
  if (cfg.theta0.empty()) {
    if (cfg.problem != ProblemKind::kMlp) {
      throw UsageError("config: theta0 = random is only available for networks");
    }
    nn::Architecture arch{cfg.dims, nn::Activation::by_name(cfg.activation)};
    Rng rng(derive_seed(seed, streams::kInit));
    return ParameterVector(nn::random_params(arch, rng).flatten());
  }
  if (cfg.theta0.size() == 1) return ParameterVector(std::vector<double>(d, cfg.theta0.front()));
  if (cfg.theta0.size() != d) {
    throw UsageError("config: theta0 has " + std::to_string(cfg.theta0.size()) +
                     " entries, the problem has dimension " + std::to_string(d));
  }
  return ParameterVector(cfg.theta0);
}

}  // namespace tusla::harness
