#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "tusla/errors.hpp"
#include "tusla/harness.hpp"

namespace tusla::harness {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_csv(const RunRecord& record, std::size_t dimension) {
  const bool with_theta = dimension <= kFullThetaMaxDim;
  std::string out = with_theta ? "step,theta_norm,theta,objective,grad_norm\n"
                               : "step,theta_norm,objective,grad_norm\n";
  for (const StepRecord& s : record.steps) {
    out += std::to_string(s.n);
    out += ',';
    out += format_real(s.theta_norm);
    out += ',';
    if (with_theta && s.theta) {
      for (std::size_t i = 0; i < s.theta->size(); ++i) {
        if (i) out += ';';
        out += format_real((*s.theta)[i]);
      }
    }
    if (with_theta) out += ',';
    if (s.objective) out += format_real(*s.objective);
    out += ',';
    out += format_real(s.grad_norm);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_real(std::string_view field) {
  const std::string text(field);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw UsageError("csv: malformed number '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<StepRecord> parse_csv(std::string_view text) {
  std::vector<StepRecord> steps;
  const auto lines = split_fields(text, '\n');
  if (lines.empty()) throw UsageError("csv: missing header");
  const bool with_theta = lines.front() == "step,theta_norm,theta,objective,grad_norm";
  if (!with_theta && lines.front() != "step,theta_norm,objective,grad_norm") {
    throw UsageError("csv: unexpected header");
  }
  const std::size_t columns = with_theta ? 5 : 4;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto f = split_fields(lines[li], ',');
    if (f.size() != columns) throw UsageError("csv: wrong number of fields");
    StepRecord s;
    s.n = static_cast<std::int64_t>(to_real(f[0]));
    s.theta_norm = to_real(f[1]);
    std::size_t k = 2;
    if (with_theta) {
      if (!f[k].empty()) {
        std::vector<double> theta;
        for (auto part : split_fields(f[k], ';')) theta.push_back(to_real(part));
        s.theta = std::move(theta);
      }
      ++k;
    }
    if (!f[k].empty()) s.objective = to_real(f[k]);
    s.grad_norm = to_real(f[k + 1]);
    steps.push_back(std::move(s));
  }
  return steps;
}

namespace {

// JSON has no Inf/NaN; those become their %.17g text.
nlohmann::ordered_json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return real_json(*v);
  } else {
    return *v;
  }
}

}  // namespace

nlohmann::ordered_json record_to_json(const RunRecord& record) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const StepRecord& s : record.steps) {
    nlohmann::ordered_json row;
    row["step"] = s.n;
    row["theta_norm"] = real_json(s.theta_norm);
    if (s.theta) {
      nlohmann::ordered_json theta = nlohmann::ordered_json::array();
      for (double v : *s.theta) theta.push_back(real_json(v));
      row["theta"] = theta;
    }
    row["objective"] = optional_json(s.objective);
    row["grad_norm"] = real_json(s.grad_norm);
    steps.push_back(row);
  }
  nlohmann::ordered_json out;
  out["diverged"] = record.diverged;
  out["divergence_step"] = optional_json(record.divergence_step);
  nlohmann::ordered_json final_theta = nlohmann::ordered_json::array();
  for (double v : record.final_theta.values()) final_theta.push_back(v);
  out["final_theta"] = final_theta;
  out["steps"] = steps;
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json summary_to_json(const RunSummary& summary, const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["preset"] = summary.preset;
  j["problem"] = std::string(problem_name(cfg.problem));
  nlohmann::ordered_json config;
  config["s"] = cfg.s;
  config["lambda"] = cfg.lambda;
  config["beta"] = cfg.beta;
  config["eta"] = cfg.eta;
  config["r"] = cfg.r;
  config["alpha"] = cfg.alpha;
  config["beta1"] = cfg.beta1;
  config["beta2"] = cfg.beta2;
  config["eps"] = cfg.eps;
  config["theta0"] = cfg.theta0;
  config["n_steps"] = cfg.n_steps;
  config["record_every"] = cfg.record_every;
  config["divergence_threshold"] = cfg.divergence_threshold;
  config["seeds"] = cfg.effective_seeds();
  j["config"] = config;

  nlohmann::ordered_json algos = nlohmann::ordered_json::array();
  for (const AlgorithmSummary& a : summary.algorithms) {
    nlohmann::ordered_json aj;
    aj["algorithm"] = std::string(algorithm_name(a.algorithm));
    aj["runs"] = a.runs;
    aj["diverged"] = a.diverged;
    aj["counted"] = a.counted;
    aj["median_distance"] = optional_json(a.median_distance);
    aj["mean_distance"] = optional_json(a.mean_distance);
    aj["median_objective"] = optional_json(a.median_objective);
    aj["max_divergence_step"] = optional_json(a.max_divergence_step);
    algos.push_back(aj);
  }
  j["algorithms"] = algos;

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const SeedOutcome& o : summary.outcomes) {
    nlohmann::ordered_json oj;
    oj["algorithm"] = std::string(algorithm_name(o.algorithm));
    oj["seed"] = o.seed;
    oj["final_distance"] = optional_json(o.final_distance);
    oj["final_objective"] = optional_json(o.final_objective);
    oj["final_theta_norm"] = real_json(o.final_theta_norm);
    oj["diverged"] = o.diverged;
    oj["divergence_step"] = optional_json(o.divergence_step);
    runs.push_back(oj);
  }
  j["runs"] = runs;
  j["warnings"] = summary.warnings;
  return j;
}

}  // namespace tusla::harness
