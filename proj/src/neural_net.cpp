#include "tusla/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"
#include "tusla/rng.hpp"

namespace tusla::nn {

namespace {

double tanh_apply(double x) { return std::tanh(x); }
double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double atan_apply(double x) { return std::atan(x); }
double atan_derivative(double x) { return 1.0 / (1.0 + x * x); }

double dot(std::span<const double> a, std::span<const double> b) {
  return kernels::active().dot(a.data(), b.data(), a.size());
}

std::span<const double> input_of(const Architecture& arch, const DataSample& x) {
  if (x.values.size() != arch.input_width() + 1) {
    throw UsageError("network sample must hold d0 inputs followed by the target");
  }
  return std::span<const double>(x.values).first(arch.input_width());
}

double target_of(const DataSample& x) { return x.values.back(); }

}  // namespace

Activation Activation::tanh() {
  // sup |tanh''| = 4/(3 sqrt 3), attained where tanh^2 = 1/3.
  return {"tanh", &tanh_apply, &tanh_derivative, 1.0, 1.0, 4.0 / (3.0 * std::sqrt(3.0))};
}

Activation Activation::arctan() {
  // sup |atan''| = 3 sqrt(3) / 8, attained at x = 1/sqrt(3).
  return {"arctan", &atan_apply, &atan_derivative, std::numbers::pi / 2.0, 1.0,
          3.0 * std::sqrt(3.0) / 8.0};
}

Activation Activation::by_name(const std::string& name) {
  if (name == "tanh") return tanh();
  if (name == "arctan") return arctan();
  throw UsageError("unknown activation '" + name + "'");
}

double Matrix::frobenius_norm() const { return euclidean_norm(data); }

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw UsageError("multiply: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

double operator_norm(const Matrix& a, int max_iterations, double tolerance) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  if (a.rows == 1 || a.cols == 1) return a.frobenius_norm();
  const auto& k = kernels::active();
  std::vector<double> v(a.cols);
  for (std::size_t j = 0; j < a.cols; ++j) v[j] = 1.0 + 0.37 * static_cast<double>(j + 1) / a.cols;
  std::vector<double> av(a.rows);
  std::vector<double> atav(a.cols);
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    const double vn = euclidean_norm(v);
    if (vn == 0.0) return 0.0;
    for (double& x : v) x /= vn;
    k.matvec(a.data.data(), a.rows, a.cols, v.data(), av.data());
    k.matvec_transposed(a.data.data(), a.rows, a.cols, av.data(), atav.data());
    const double next = std::sqrt(euclidean_norm(atav));
    const bool done = std::fabs(next - estimate) <= tolerance * next;
    estimate = next;
    v.swap(atav);
    if (done) break;
  }
  return estimate;
}

std::size_t Architecture::parameter_dimension() const {
  std::size_t d = dims.back();
  for (std::size_t i = 1; i < dims.size(); ++i) d += dims[i] * dims[i - 1];
  return d;
}

std::size_t Architecture::diameter() const { return *std::max_element(dims.begin(), dims.end()); }

void Architecture::validate() const {
  if (dims.size() < 2) throw UsageError("architecture needs at least one hidden layer");
  for (std::size_t d : dims) {
    if (d == 0) throw UsageError("architecture: all layer widths must be >= 1");
  }
}

MlpParams MlpParams::zeros(const Architecture& arch) {
  arch.validate();
  MlpParams p;
  p.phi.assign(arch.dims.back(), 0.0);
  for (std::size_t i = 1; i < arch.dims.size(); ++i) p.weights.emplace_back(arch.dims[i], arch.dims[i - 1]);
  return p;
}

MlpParams MlpParams::unflatten(const Architecture& arch, std::span<const double> flat) {
  if (flat.size() != arch.parameter_dimension()) {
    throw UsageError("unflatten: expected " + std::to_string(arch.parameter_dimension()) +
                     " parameters, got " + std::to_string(flat.size()));
  }
  MlpParams p = zeros(arch);
  std::size_t pos = 0;
  std::copy_n(flat.begin(), p.phi.size(), p.phi.begin());
  pos += p.phi.size();
  for (Matrix& w : p.weights) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), w.data.size(), w.data.begin());
    pos += w.data.size();
  }
  return p;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat(phi);
  for (const Matrix& w : weights) flat.insert(flat.end(), w.data.begin(), w.data.end());
  return flat;
}

double MlpParams::norm() const { return euclidean_norm(flatten()); }

MlpParams random_params(const Architecture& arch, Rng& rng) {
  MlpParams p = MlpParams::zeros(arch);
  for (double& x : p.phi) x = rng.uniform(-0.5, 0.5);
  for (Matrix& w : p.weights) {
    for (double& x : w.data) x = rng.uniform(-0.5, 0.5);
  }
  return p;
}

ForwardTrace trace_forward(const Architecture& arch, const MlpParams& theta,
                           std::span<const double> z) {
  if (z.size() != arch.input_width()) throw UsageError("forward: input width mismatch");
  if (theta.weights.size() != arch.hidden_layers() || theta.phi.size() != arch.dims.back()) {
    throw UsageError("forward: parameters do not match the architecture");
  }
  const auto& k = kernels::active();
  ForwardTrace t;
  t.act.emplace_back(z.begin(), z.end());
  for (std::size_t i = 0; i < theta.weights.size(); ++i) {
    const Matrix& w = theta.weights[i];
    std::vector<double> pre(w.rows);
    k.matvec(w.data.data(), w.rows, w.cols, t.act.back().data(), pre.data());
    std::vector<double> act(w.rows);
    std::transform(pre.begin(), pre.end(), act.begin(), arch.activation.apply);
    t.pre.push_back(std::move(pre));
    t.act.push_back(std::move(act));
  }
  t.output = dot(theta.phi, t.act.back());
  return t;
}

double forward(const Architecture& arch, const MlpParams& theta, std::span<const double> z) {
  return trace_forward(arch, theta, z).output;
}

double risk(const Architecture& arch, const MlpParams& theta, const DataSample& x, double eta,
            double r) {
  const double e = target_of(x) - forward(arch, theta, input_of(arch, x));
  const double penalty =
      eta == 0.0 ? 0.0 : eta / (2.0 * (r + 1.0)) * std::pow(theta.norm(), 2.0 * (r + 1.0));
  return e * e + penalty;
}

MlpParams output_gradient(const Architecture& arch, const MlpParams& theta,
                          std::span<const double> z) {
  const ForwardTrace t = trace_forward(arch, theta, z);
  const auto& k = kernels::active();
  MlpParams grad = MlpParams::zeros(arch);
  grad.phi = t.act.back();
  const std::size_t n = arch.hidden_layers();
  // delta_i = M_{sigma'(pre_i)} W_{i+1}^T delta_{i+1}, delta_n = M_{sigma'(pre_n)} phi
  std::vector<double> delta(theta.phi);
  for (std::size_t layer = n; layer-- > 0;) {
    const std::vector<double>& pre = t.pre[layer];
    for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= arch.activation.derivative(pre[j]);
    Matrix& g = grad.weights[layer];
    const std::vector<double>& below = t.act[layer];
    k.scaled_outer(1.0, delta.data(), g.rows, below.data(), g.cols, g.data.data());
    if (layer > 0) {
      const Matrix& w = theta.weights[layer];
      std::vector<double> next(w.cols);
      k.matvec_transposed(w.data.data(), w.rows, w.cols, delta.data(), next.data());
      delta.swap(next);
    }
  }
  return grad;
}

MlpParams gradient_g(const Architecture& arch, const MlpParams& theta, const DataSample& x) {
  const auto z = input_of(arch, x);
  const double residual = target_of(x) - forward(arch, theta, z);
  MlpParams grad = output_gradient(arch, theta, z);
  const double scale = -2.0 * residual;
  for (double& v : grad.phi) v *= scale;
  for (Matrix& w : grad.weights) {
    for (double& v : w.data) v *= scale;
  }
  return grad;
}

MlpParams gradient_h(const Architecture& arch, const MlpParams& theta, const DataSample& x,
                     double eta, double r) {
  MlpParams grad = gradient_g(arch, theta, x);
  if (eta == 0.0) return grad;
  const double c = eta * std::pow(theta.norm(), 2.0 * r);
  for (std::size_t j = 0; j < grad.phi.size(); ++j) grad.phi[j] += c * theta.phi[j];
  for (std::size_t i = 0; i < grad.weights.size(); ++i) {
    for (std::size_t j = 0; j < grad.weights[i].data.size(); ++j) {
      grad.weights[i].data[j] += c * theta.weights[i].data[j];
    }
  }
  return grad;
}

std::vector<Matrix> layer_jacobians(const Architecture& arch, const MlpParams& theta,
                                    const ForwardTrace& trace) {
  const std::size_t n = arch.hidden_layers();
  auto diag = [&](std::size_t layer) {
    const std::vector<double>& pre = trace.pre[layer];
    Matrix m(pre.size(), pre.size());
    for (std::size_t j = 0; j < pre.size(); ++j) m.at(j, j) = arch.activation.derivative(pre[j]);
    return m;
  };
  std::vector<Matrix> p(n);
  p[n - 1] = diag(n - 1);
  for (std::size_t layer = n - 1; layer-- > 0;) {
    p[layer] = multiply(multiply(p[layer + 1], theta.weights[layer + 1]), diag(layer));
  }
  return p;
}

OracleMeta lipschitz_constants(const Architecture& arch) {
  const double n = static_cast<double>(arch.hidden_layers());
  const double big_d = static_cast<double>(arch.diameter());
  const double l1 =
      16.0 * (n + 1.0) * std::pow(big_d, 1.5) * std::pow(1.0 + arch.activation.sobolev_norm(), 2.0 * n + 4.0);
  return {2.0 * n + 2.0, 3.0, l1};
}

OracleMeta regularized_lipschitz_constants(const Architecture& arch, double eta, double r) {
  const double n = static_cast<double>(arch.hidden_layers());
  const double big_d = static_cast<double>(arch.diameter());
  const double l1 = 16.0 * (1.0 + eta) * (2.0 * r + 1.0) * (n + 1.0) * std::pow(big_d, 1.5) *
                    std::pow(1.0 + arch.activation.sobolev_norm(), 2.0 * n + 4.0);
  return {std::max(2.0 * n + 1.0, 2.0 * r) + 1.0, 3.0, l1};
}

double gradient_norm_bound(const Architecture& arch, const MlpParams& theta, const DataSample& x) {
  const double n = static_cast<double>(arch.hidden_layers());
  const double big_d = static_cast<double>(arch.diameter());
  const double xn = x.norm();
  return 4.0 * big_d * std::sqrt(n + 1.0) * (1.0 + xn) * (1.0 + xn) *
         std::pow(1.0 + arch.activation.sobolev_norm(), n + 2.0) *
         (1.0 + std::pow(theta.norm(), n + 1.0));
}

PartialBoundReport partial_deriv_bound_check(const Architecture& arch, const MlpParams& theta,
                                             const DataSample& x) {
  const auto z = input_of(arch, x);
  const ForwardTrace t = trace_forward(arch, theta, z);
  const std::vector<Matrix> p = layer_jacobians(arch, theta, t);
  const std::size_t n = arch.hidden_layers();
  const double big_d = static_cast<double>(arch.diameter());
  const double sob1 = 1.0 + arch.activation.sobolev_norm();
  const double xn = x.norm();
  const double tn = theta.norm();

  PartialBoundReport rep;
  double df_sq = euclidean_norm(t.act.back());
  df_sq *= df_sq;
  for (std::size_t i = 1; i <= n; ++i) {
    const Matrix& pi = p[i - 1];
    const double a_norm = euclidean_norm(t.act[i - 1]);
    // The map V -> P_i V a_{i-1} has operator norm ||P_i|| |a_{i-1}| in the Frobenius metric.
    const double ds = operator_norm(pi) * a_norm;
    const double ds_bound = std::sqrt(big_d) * (1.0 + xn) *
                            std::pow(sob1, static_cast<double>(n - i + 2)) *
                            std::pow(tn, static_cast<double>(n - i));
    rep.ds_norms.push_back(ds);
    rep.ds_bounds.push_back(ds_bound);
    // d_{W_i} f = (P_i^T phi) a_{i-1}^T
    std::vector<double> ptphi(pi.cols);
    kernels::active().matvec_transposed(pi.data.data(), pi.rows, pi.cols, theta.phi.data(),
                                        ptphi.data());
    const double block = euclidean_norm(ptphi) * a_norm;
    df_sq += block * block;
  }
  rep.df_norm = std::sqrt(df_sq);
  rep.df_bound = std::sqrt(big_d) * std::sqrt(static_cast<double>(n) + 1.0) * (1.0 + xn) *
                 std::pow(sob1, static_cast<double>(n) + 1.0) *
                 (1.0 + std::pow(tn, static_cast<double>(n)));

  auto ratio = [](double v, double b) { return b > 0.0 ? v / b : (v > 0.0 ? INFINITY : 0.0); };
  rep.max_ratio = ratio(rep.df_norm, rep.df_bound);
  for (std::size_t i = 0; i < n; ++i) {
    rep.max_ratio = std::max(rep.max_ratio, ratio(rep.ds_norms[i], rep.ds_bounds[i]));
  }
  rep.pass = rep.max_ratio <= 1.0;
  return rep;
}

MlpOracle::MlpOracle(Architecture arch, std::vector<DataSample> eval_set)
    : arch_(std::move(arch)), eval_set_(std::move(eval_set)) {
  arch_.validate();
}

void MlpOracle::evaluate(std::span<const double> theta, const DataSample& x,
                         std::span<double> out) const {
  const MlpParams g = gradient_g(arch_, MlpParams::unflatten(arch_, theta), x);
  std::size_t pos = 0;
  for (double v : g.phi) out[pos++] = v;
  for (const Matrix& w : g.weights) {
    for (double v : w.data) out[pos++] = v;
  }
}

double MlpOracle::k_of(const DataSample& x) const {
  const MlpParams zero = MlpParams::zeros(arch_);
  const double g0 = gradient_g(arch_, zero, x).norm();
  return growth_constant(meta(), x.norm(), g0);
}

std::optional<double> MlpOracle::objective(std::span<const double> theta) const {
  if (eval_set_.empty()) return std::nullopt;
  const MlpParams p = MlpParams::unflatten(arch_, theta);
  double total = 0.0;
  for (const DataSample& s : eval_set_) total += risk(arch_, p, s, 0.0, 1.0);
  return total / static_cast<double>(eval_set_.size());
}

std::string MlpOracle::name() const {
  std::string s = "mlp(";
  for (std::size_t i = 0; i < arch_.dims.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(arch_.dims[i]);
  }
  return s + "," + arch_.activation.name + ")";
}

TeacherDataSource::TeacherDataSource(Architecture arch, MlpParams teacher, double noise_std)
    : arch_(std::move(arch)), teacher_(std::move(teacher)), noise_std_(noise_std) {}

void TeacherDataSource::sample(Rng& rng, DataSample& out) const {
  const std::size_t d0 = arch_.input_width();
  out.values.resize(d0 + 1);
  for (std::size_t j = 0; j < d0; ++j) out.values[j] = rng.uniform(-1.0, 1.0);
  const double f = forward(arch_, teacher_, std::span<const double>(out.values).first(d0));
  out.values[d0] = f + noise_std_ * rng.gaussian();
}

}  // namespace tusla::nn
