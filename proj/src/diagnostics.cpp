#include "tusla/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace tusla::diagnostics {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanSe {
  double mean;
  double se;
};

// Welford accumulation keeps the estimate stable for large magnitudes.
class Welford {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  [[nodiscard]] MeanSe result() const {
    if (n_ < 2) return {mean_, 0.0};
    const double var = m2_ / static_cast<double>(n_ - 1);
    return {mean_, std::sqrt(var / static_cast<double>(n_))};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

TheoryConstants theory_constants(const OracleMeta& meta, const RegularizationParams& reg,
                                 double k_mean, double growth_mean, int p) {
  meta.validate();
  reg.validate();
  if (!(k_mean > 0.0) || !(growth_mean > 0.0)) {
    throw UsageError("theory_constants: expectations must be positive");
  }
  TheoryConstants c;
  const double q = meta.q;
  const double r = reg.r;
  const double eta = reg.eta;
  c.K_mean = k_mean;
  c.L2 = meta.L1 * growth_mean;
  c.L = meta.L1 + 8.0 * r * eta;
  c.l = 2.0 * r + 1.0;
  c.lambda_max = lambda_max(eta, p);
  if (eta == 0.0) {
    c.native_dissipativity = true;
    c.A = kNaN;
    c.B = kNaN;
    c.R = kNaN;
    c.a = kNaN;
    return c;
  }
  reg.validate_for(meta);
  c.A = k_mean;
  c.B = std::pow(3.0 * k_mean, q + 2.0) * std::pow(eta, -(q + 1.0));
  const double r1 = std::pow(std::pow(2.0, 3.0 * (q - 1.0) + 1.0) * c.L2 / eta, 1.0 / (2.0 * r - q));
  const double r2 = std::pow(std::pow(2.0, q) * c.L2 / eta, 1.0 / (2.0 * r));
  c.R = std::max(r1, r2);
  c.a = c.L2 * std::pow(1.0 + 2.0 * c.R, q - 1.0);
  return c;
}

DataExpectations estimate_expectations(const GradientOracle& oracle, const DataSource& data,
                                       std::uint64_t seed, std::optional<double> k_mean_closed_form,
                                       std::size_t draws) {
  if (draws < 2) throw UsageError("estimate_expectations: need at least 2 draws");
  const OracleMeta meta = oracle.meta();
  Rng rng(derive_seed(seed, streams::kMonteCarlo));
  Welford k;
  Welford growth;
  DataSample x;
  for (std::size_t i = 0; i < draws; ++i) {
    data.sample(rng, x);
    k.add(oracle.k_of(x));
    growth.add(std::pow(1.0 + x.norm(), meta.rho));
  }
  DataExpectations out;
  const MeanSe km = k.result();
  const MeanSe gm = growth.result();
  out.k_mean = {km.mean, km.mean, km.se, k_mean_closed_form};
  out.growth_mean = {gm.mean, gm.mean, gm.se, data.expected_growth_factor(meta.rho)};
  if (out.k_mean.closed_form) out.k_mean.value = *out.k_mean.closed_form;
  if (out.growth_mean.closed_form) out.growth_mean.value = *out.growth_mean.closed_form;
  return out;
}

DissipativityReport dissipativity_check(const DriftFunction& h, double A, double B,
                                        const std::vector<ParameterVector>& grid,
                                        double se_multiplier) {
  const auto& k = kernels::active();
  DissipativityReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (const ParameterVector& theta : grid) {
    const DriftEstimate est = h(theta.values());
    if (est.mean.size() != theta.size()) {
      throw UsageError("dissipativity_check: drift dimension mismatch");
    }
    const double tt = k.dot(theta.data().data(), theta.data().data(), theta.size());
    const double inner = k.dot(theta.data().data(), est.mean.data(), theta.size());
    const double slack = inner - (A * tt - B);
    if (slack < rep.min_slack) {
      rep.min_slack = slack;
      rep.worst_point = theta.data();
    }
    if (!(slack >= -se_multiplier * est.inner_std_error)) {
      rep.violations.push_back(theta.data());
    }
  }
  rep.pass = rep.violations.empty();
  return rep;
}

DriftEstimate monte_carlo_drift(const GradientOracle& oracle, const DataSource& data,
                                const RegularizationParams& reg, std::span<const double> theta,
                                std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw UsageError("monte_carlo_drift: need at least 2 draws");
  const std::size_t d = oracle.dimension();
  Rng rng(derive_seed(seed, streams::kMonteCarlo));
  const double norm = euclidean_norm(theta);
  const double coeff = reg.eta == 0.0 ? 0.0 : reg.eta * std::pow(norm, 2.0 * reg.r);
  const auto& k = kernels::active();
  std::vector<double> g(d);
  std::vector<double> hsample(d);
  std::vector<Welford> comp(d);
  Welford inner;
  DataSample x;
  for (std::size_t i = 0; i < draws; ++i) {
    data.sample(rng, x);
    oracle.evaluate(theta, x, g);
    k.affine_combine(1.0, g.data(), coeff, theta.data(), 1.0, hsample.data(), d);
    for (std::size_t j = 0; j < d; ++j) comp[j].add(hsample[j]);
    inner.add(k.dot(theta.data(), hsample.data(), d));
  }
  DriftEstimate est;
  est.mean.resize(d);
  for (std::size_t j = 0; j < d; ++j) est.mean[j] = comp[j].result().mean;
  est.inner_std_error = inner.result().se;
  return est;
}

std::vector<ParameterVector> symmetric_log_grid(double lo, double hi, std::size_t points_per_sign) {
  if (!(lo > 0.0 && hi > lo) || points_per_sign < 2) {
    throw UsageError("symmetric_log_grid: need 0 < lo < hi and at least 2 points");
  }
  std::vector<ParameterVector> grid;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points_per_sign; ++i) {
    const double t = std::pow(10.0, a + (b - a) * static_cast<double>(i) /
                                            static_cast<double>(points_per_sign - 1));
    grid.push_back(ParameterVector{t});
    grid.push_back(ParameterVector{-t});
  }
  return grid;
}

NonDissipativeReport one_neuron_violation(double eta, double A, double B,
                                          const std::vector<double>& w2_values) {
  const problems::OneNeuronProblem problem(eta);
  const double w1 = problem.w1_star();
  NonDissipativeReport rep;
  double previous_b = -std::numeric_limits<double>::infinity();
  for (double w2 : w2_values) {
    const auto g = problems::one_neuron_gradient(w1, w2, 1.0, 0.0, eta, problem.shift());
    NonDissipativePoint pt;
    pt.w2 = w2;
    pt.inner = w1 * g.d_w1 + w2 * g.d_w2;
    pt.inner_bound = -2.0 * w2 * w2 + 2.0 * eta * w1 * w1;
    pt.critical_b = A * (w1 * w1 + w2 * w2) - pt.inner;
    pt.violated = pt.inner < A * (w1 * w1 + w2 * w2) - B;
    rep.certified = rep.certified && pt.inner <= pt.inner_bound && pt.critical_b > previous_b;
    previous_b = pt.critical_b;
    rep.points.push_back(pt);
  }
  // The inner bound makes critical_b grow like w2^2, so the farthest point
  // must already break the tested B.
  rep.certified = rep.certified && !rep.points.empty() && rep.points.back().violated;
  return rep;
}

MomentTrace empirical_moment(const RunRecord& record, double p) {
  MomentTrace out;
  double sum = 0.0;
  std::size_t count = 0;
  for (const StepRecord& s : record.steps) {
    const double term = p == 0.0 ? 1.0 : std::pow(s.theta_norm, 2.0 * p);
    sum += term;
    ++count;
    const double mean = sum / static_cast<double>(count);
    out.running_mean.push_back(mean);
    out.max = std::max(out.max, mean);
  }
  return out;
}

EmpiricalDistribution1D::EmpiricalDistribution1D(std::vector<double> values)
    : samples_(std::move(values)) {
  if (samples_.empty()) throw UsageError("empirical distribution needs at least one sample");
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalDistribution1D::mean() const {
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) /
         static_cast<double>(samples_.size());
}

double EmpiricalDistribution1D::variance() const {
  if (samples_.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double x : samples_) ss += (x - m) * (x - m);
  return ss / static_cast<double>(samples_.size() - 1);
}

double EmpiricalDistribution1D::median() const { return quantile(0.5); }

double EmpiricalDistribution1D::quantile(double prob) const {
  const std::size_t n = samples_.size();
  if (n == 1) return samples_.front();
  // Sample k sits at probability (k + 0.5)/n.
  const double pos = prob * static_cast<double>(n) - 0.5;
  if (pos <= 0.0) return samples_.front();
  if (pos >= static_cast<double>(n - 1)) return samples_.back();
  const auto k = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(k);
  return samples_[k] + w * (samples_[k + 1] - samples_[k]);
}

double wasserstein_p_1d(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b,
                        int p) {
  if (p != 1 && p != 2) throw UsageError("wasserstein_p_1d: p must be 1 or 2");
  const EmpiricalDistribution1D* small = &a;
  const EmpiricalDistribution1D* large = &b;
  if (small->size() > large->size()) std::swap(small, large);
  const std::size_t n = small->size();
  std::vector<double> matched;
  std::span<const double> other = large->samples();
  if (large->size() != n) {
    matched.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      matched[i] = large->quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    other = matched;
  }
  const double total = kernels::active().sum_abs_diff_pow(small->samples().data(), other.data(), n, p);
  const double mean = total / static_cast<double>(n);
  return p == 1 ? mean : std::sqrt(mean);
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

double normal_quantile(double prob, double mean, double sd) {
  if (!(prob > 0.0 && prob < 1.0)) throw UsageError("normal_quantile: prob must lie in (0, 1)");
  return mean + sd * std::sqrt(2.0) * boost::math::erf_inv(2.0 * prob - 1.0);
}

double ks_statistic(const EmpiricalDistribution1D& sample,
                    const std::function<double(double)>& cdf) {
  const auto xs = sample.samples();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

EmpiricalDistribution1D normal_quantile_grid(std::size_t n, double mean, double sd) {
  if (n == 0) throw UsageError("normal_quantile_grid: n must be >= 1");
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n), mean, sd);
  }
  return EmpiricalDistribution1D(std::move(q));
}

double GibbsTable::quantile(double prob) const {
  if (prob <= 0.0) return nodes.front();
  if (prob >= 1.0) return nodes.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), prob);
  const auto k = static_cast<std::size_t>(it - cdf.begin());
  if (k == 0) return nodes.front();
  if (k >= cdf.size()) return nodes.back();
  const double span = cdf[k] - cdf[k - 1];
  if (span <= 0.0) return nodes[k - 1];
  const double w = (prob - cdf[k - 1]) / span;
  return nodes[k - 1] + w * (nodes[k] - nodes[k - 1]);
}

double GibbsTable::mode() const {
  const auto it = std::max_element(density.begin(), density.end());
  return nodes[static_cast<std::size_t>(it - density.begin())];
}

namespace {

struct Tabulated {
  std::vector<double> x;
  std::vector<double> f;  // exp(-beta u - max), peak 1
};

Tabulated tabulate(const Potential& u, double beta, double lo, double hi, std::size_t intervals) {
  Tabulated t;
  t.x.resize(intervals + 1);
  std::vector<double> logw(intervals + 1);
  const double h = (hi - lo) / static_cast<double>(intervals);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= intervals; ++i) {
    t.x[i] = lo + h * static_cast<double>(i);
    const double uv = u(t.x[i]);
    logw[i] = std::isnan(uv) ? -std::numeric_limits<double>::infinity() : -beta * uv;
    peak = std::max(peak, logw[i]);
  }
  if (!std::isfinite(peak)) throw SetupError("gibbs: density is zero or infinite on the support");
  t.f.resize(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) t.f[i] = std::exp(logw[i] - peak);
  return t;
}

// Mass beyond one boundary under geometric decay of the last two nodes.
double tail_estimate(double f_edge, double f_inner, double h) {
  if (f_edge == 0.0) return 0.0;
  const double ratio = f_edge / f_inner;
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return h * f_edge / (1.0 - ratio);
}

}  // namespace

GibbsTable build_gibbs_table(const Potential& u, double beta, double lo, double hi,
                             std::size_t intervals) {
  if (!(beta > 0.0)) throw UsageError("gibbs: beta must be > 0");
  if (!(hi > lo)) throw UsageError("gibbs: need lo < hi");
  if (intervals < kGibbsMinIntervals) intervals = kGibbsMinIntervals;
  if (intervals % 2 != 0) ++intervals;

  constexpr int kMaxWidenings = 40;
  constexpr double kEdgeRatio = 1e-12;
  constexpr double kMaxTail = 1e-8;
  Tabulated t;
  for (int attempt = 0;; ++attempt) {
    t = tabulate(u, beta, lo, hi, intervals);
    if (t.f.front() < kEdgeRatio && t.f.back() < kEdgeRatio) break;
    if (attempt == kMaxWidenings) throw SetupError("gibbs: density is not integrable");
    const double centre = 0.5 * (lo + hi);
    const double half = hi - lo;
    lo = centre - half;
    hi = centre + half;
  }

  const double h = (hi - lo) / static_cast<double>(intervals);
  const std::size_t pairs = intervals / 2;
  GibbsTable table;
  table.lo = lo;
  table.hi = hi;
  table.nodes.resize(pairs + 1);
  table.cdf.resize(pairs + 1);
  table.density.resize(pairs + 1);
  table.cdf[0] = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t i = 2 * k;
    table.cdf[k + 1] = table.cdf[k] + h / 3.0 * (t.f[i] + 4.0 * t.f[i + 1] + t.f[i + 2]);
  }
  const double mass = table.cdf.back();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw SetupError("gibbs: density has no mass");
  for (std::size_t k = 0; k <= pairs; ++k) {
    table.nodes[k] = t.x[2 * k];
    table.cdf[k] /= mass;
    table.density[k] = t.f[2 * k] / mass;
  }
  table.cdf.back() = 1.0;
  table.tail_mass = (tail_estimate(t.f.front(), t.f[1], h) +
                     tail_estimate(t.f.back(), t.f[intervals - 1], h)) /
                    mass;
  if (!(table.tail_mass < kMaxTail)) {
    throw SetupError("gibbs: extrapolated tail mass outside the support exceeds 1e-8");
  }
  return table;
}

EmpiricalDistribution1D gibbs_sampler_1d(const Potential& u, double beta, double lo, double hi,
                                         std::size_t n, Rng& rng) {
  if (n == 0) throw UsageError("gibbs: need at least one sample");
  const GibbsTable table = build_gibbs_table(u, beta, lo, hi);
  std::vector<double> xs(n);
  for (double& x : xs) x = table.quantile(rng.uniform01());
  return EmpiricalDistribution1D(std::move(xs));
}

double smoothed_mode(const EmpiricalDistribution1D& sample, double bandwidth,
                     std::size_t grid_points) {
  if (!(bandwidth > 0.0) || grid_points < 2) throw UsageError("smoothed_mode: bad arguments");
  const double lo = sample.quantile(0.01);
  const double hi = sample.quantile(0.99);
  if (!(hi > lo)) return lo;
  // Bin first so the kernel sum costs O(bins * grid) instead of O(N * grid).
  constexpr std::size_t kBins = 4096;
  const double width = (hi - lo) / static_cast<double>(kBins);
  std::vector<double> counts(kBins, 0.0);
  for (double x : sample.samples()) {
    if (x < lo || x > hi) continue;
    auto b = static_cast<std::size_t>((x - lo) / width);
    counts[std::min(b, kBins - 1)] += 1.0;
  }
  double best = lo;
  double best_value = -1.0;
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double t = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    double value = 0.0;
    for (std::size_t b = 0; b < kBins; ++b) {
      if (counts[b] == 0.0) continue;
      const double z = (lo + (static_cast<double>(b) + 0.5) * width - t) / bandwidth;
      value += counts[b] * std::exp(-0.5 * z * z);
    }
    if (value > best_value) {
      best_value = value;
      best = t;
    }
  }
  return best;
}

}  // namespace tusla::diagnostics
