#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "tusla/diagnostics.hpp"
#include "tusla/errors.hpp"
#include "tusla/problems.hpp"
#include "tusla/rng.hpp"

namespace dg = tusla::diagnostics;
using tusla::ParameterVector;

TEST(TheoryConstants, HandEvaluated) {
  const tusla::OracleMeta meta{1.0, 1.0, 2.0};
  const tusla::RegularizationParams reg{0.5, 2.0};
  const auto c = dg::theory_constants(meta, reg, 1.0, 3.0, 2);
  EXPECT_FALSE(c.native_dissipativity);
  EXPECT_DOUBLE_EQ(c.A, 1.0);
  EXPECT_DOUBLE_EQ(c.B, 108.0);  // 3^3 / 0.5^2
  EXPECT_DOUBLE_EQ(c.L2, 6.0);
  EXPECT_DOUBLE_EQ(c.L, 10.0);
  EXPECT_DOUBLE_EQ(c.l, 5.0);
  EXPECT_NEAR(c.R, std::cbrt(24.0), 1e-14);  // max(24^(1/3), 24^(1/4))
  EXPECT_DOUBLE_EQ(c.a, 6.0);                // q = 1 removes the R dependence
  EXPECT_DOUBLE_EQ(c.lambda_max, tusla::lambda_max(0.5, 2));
  EXPECT_DOUBLE_EQ(c.K_mean, 1.0);
}

TEST(TheoryConstants, RecomputedFromDefinitionsForUs) {
  const tusla::problems::UsProblem us(2);
  const auto meta = us.meta();
  const tusla::RegularizationParams reg{0.01, 12.0};
  const double k = us.expected_k_uniform();
  const double growth = 6.5;  // E[1 + X], X ~ U[0, 11]
  const auto c = dg::theory_constants(meta, reg, k, growth, 2);
  const long double q = meta.q, L2 = meta.L1 * growth;
  const long double B = std::pow(3.0L * k, q + 2) * std::pow(0.01L, -(q + 1));
  const long double r1 = std::pow(std::pow(2.0L, 3 * (q - 1) + 1) * L2 / 0.01L, 1 / (24 - q));
  const long double r2 = std::pow(std::pow(2.0L, q) * L2 / 0.01L, 1.0L / 24);
  const long double R = std::max(r1, r2);
  EXPECT_NEAR(c.B / static_cast<double>(B), 1.0, 1e-13);
  EXPECT_NEAR(c.R / static_cast<double>(R), 1.0, 1e-13);
  EXPECT_NEAR(c.a / static_cast<double>(L2 * std::pow(1 + 2 * R, q - 1)), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.L, meta.L1 + 8 * 12 * 0.01);
  EXPECT_DOUBLE_EQ(c.l, 25.0);
}

TEST(TheoryConstants, NativeWithoutPenalty) {
  const auto c = dg::theory_constants({1.0, 1.0, 1.0}, {0.0, 1.0}, 2.0, 1.0, 2);
  EXPECT_TRUE(c.native_dissipativity);
  EXPECT_TRUE(std::isnan(c.A));
  EXPECT_TRUE(std::isnan(c.B));
  EXPECT_DOUBLE_EQ(c.lambda_max, 1.0);
}

TEST(TheoryConstants, Validation) {
  EXPECT_THROW((void)dg::theory_constants({1.0, 1.0, 1.0}, {0.5, 2.0}, 0.0, 1.0, 2), tusla::UsageError);
  // r must reach q/2 + 1 once the penalty is on.
  EXPECT_THROW((void)dg::theory_constants({4.0, 1.0, 1.0}, {0.5, 2.0}, 1.0, 1.0, 2), tusla::UsageError);
}

TEST(Expectations, ClosedFormsAgreeWithMonteCarlo) {
  const tusla::problems::UsProblem us(2);
  const tusla::problems::UniformDataSource data;
  const auto e = dg::estimate_expectations(us, data, 1, us.expected_k_uniform());
  ASSERT_TRUE(e.k_mean.closed_form && e.growth_mean.closed_form);
  EXPECT_DOUBLE_EQ(e.k_mean.value, us.expected_k_uniform());
  EXPECT_NEAR(e.k_mean.mc_mean, e.k_mean.value, 4 * e.k_mean.mc_std_error);
  EXPECT_NEAR(e.growth_mean.mc_mean, 6.5, 4 * e.growth_mean.mc_std_error);
  EXPECT_DOUBLE_EQ(e.growth_mean.value, 6.5);
}

TEST(Dissipativity, QuadraticIsTight) {
  const dg::DriftFunction h = [](std::span<const double> t) {
    return dg::DriftEstimate{{t.begin(), t.end()}, 0.0};
  };
  const auto rep = dg::dissipativity_check(h, 1.0, 0.0, dg::symmetric_log_grid(1e-3, 1e3, 7));
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.min_slack, 0.0);
  const auto fail = dg::dissipativity_check(h, 1.5, 0.0, dg::symmetric_log_grid(1e-3, 1e3, 7));
  EXPECT_FALSE(fail.pass);
  EXPECT_EQ(fail.violations.size(), 14u);
  ASSERT_EQ(fail.worst_point.size(), 1u);
  EXPECT_DOUBLE_EQ(std::fabs(fail.worst_point[0]), 1e3);
}

TEST(Dissipativity, GridShape) {
  const auto g = dg::symmetric_log_grid(1e-3, 1e3, 7);
  ASSERT_EQ(g.size(), 14u);
  std::vector<double> v;
  for (const auto& p : g) v.push_back(p[0]);
  std::sort(v.begin(), v.end());
  EXPECT_DOUBLE_EQ(v.front(), -1e3);
  EXPECT_DOUBLE_EQ(v.back(), 1e3);
  EXPECT_NEAR(v[7], 1e-3, 1e-18);
  EXPECT_NEAR(v[8], 1e-2, 1e-17);
}

TEST(Dissipativity, MonteCarloDriftMatchesExpectation) {
  // E[g_s] for the unbiased variant is u_s'; the penalty is added exactly.
  const tusla::problems::UsProblem us(2, tusla::problems::UsGradient::kUnbiased);
  const tusla::problems::UniformDataSource data;
  const tusla::RegularizationParams reg{0.01, 3.0};
  for (double t : {-3.0, 0.5, 2.0}) {
    const std::vector<double> theta{t};
    const auto est = dg::monte_carlo_drift(us, data, reg, theta, 200000, 4);
    const double exact = tusla::problems::u_s_derivative(t, 2) + 0.01 * t * std::pow(std::fabs(t), 6.0);
    EXPECT_NEAR(est.mean[0], exact, 4 * est.inner_std_error / std::fabs(t));
  }
}

TEST(OneNeuron, CertifiedViolation) {
  const double eta = 0.01;
  // Candidate A = 1 with a finite B: the critical B at w2 = 10 is about 700,
  // so the first point still satisfies the inequality and the others break it.
  const double A = 1.0, B = 1e3;
  const auto rep = dg::one_neuron_violation(eta, A, B, {10.0, 100.0, 1000.0});
  EXPECT_TRUE(rep.certified);
  ASSERT_EQ(rep.points.size(), 3u);
  const tusla::problems::OneNeuronProblem p(eta);
  const double w1 = p.w1_star();
  for (const auto& pt : rep.points) {
    // At a point where w1 x + S = -1: atan = -pi/4 and atan' = 1/2.
    const double t = pt.w2;
    const double hand = -(std::numbers::pi / 4) * w1 * t * t + (std::numbers::pi * std::numbers::pi / 8) * t * t +
                        2 * eta * (w1 * w1 + t * t);
    EXPECT_NEAR(pt.inner, hand, 1e-10 * std::fabs(hand));
    EXPECT_LE(pt.inner, pt.inner_bound);
    EXPECT_EQ(pt.violated, pt.critical_b > B);
  }
  EXPECT_FALSE(rep.points[0].violated);
  EXPECT_TRUE(rep.points[2].violated);
  EXPECT_FALSE(dg::one_neuron_violation(eta, A, 1e9, {10.0, 100.0, 1000.0}).certified);
  EXPECT_TRUE(dg::one_neuron_violation(eta, A, 1e9, {10.0, 1e3, 1e5}).certified);
  EXPECT_LT(rep.points[0].critical_b, rep.points[1].critical_b);
  EXPECT_LT(rep.points[1].critical_b, rep.points[2].critical_b);
}

TEST(Moments, ConstantTrajectory) {
  tusla::RunRecord rec;
  for (int n = 0; n < 5; ++n) {
    tusla::StepRecord s;
    s.n = n;
    s.theta_norm = 2.0;
    rec.steps.push_back(s);
  }
  const auto m = dg::empirical_moment(rec, 1.0);
  ASSERT_EQ(m.running_mean.size(), 5u);
  for (double v : m.running_mean) EXPECT_DOUBLE_EQ(v, 4.0);
  EXPECT_DOUBLE_EQ(m.max, 4.0);
  for (double v : dg::empirical_moment(rec, 0.0).running_mean) EXPECT_EQ(v, 1.0);
}

TEST(Distribution, SampleStatistics) {
  const dg::EmpiricalDistribution1D d({4.0, 1.0, 3.0, 2.0});
  EXPECT_EQ(d.samples()[0], 1.0);
  EXPECT_DOUBLE_EQ(d.mean(), 2.5);
  EXPECT_DOUBLE_EQ(d.variance(), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.median(), 2.5);
  EXPECT_THROW(dg::EmpiricalDistribution1D({}), tusla::UsageError);
}

TEST(Wasserstein, HandFixtures) {
  using D = dg::EmpiricalDistribution1D;
  // Sorted coupling: |0-0|, |1-3|.
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({0.0, 1.0}), D({0.0, 3.0}), 1), 1.0);
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({0.0, 1.0}), D({0.0, 3.0}), 2), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({5.0}), D({2.0}), 2), 3.0);
  // Order of the inputs does not matter.
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({3.0, 0.0, 1.0}), D({2.0, 1.0, 0.0}), 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({1.0, 2.0, 3.0, 4.0}), D({2.0, 3.0, 4.0, 5.0}), 2), 1.0);
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({-1.0, 1.0}), D({-3.0, 3.0}), 2), 2.0);
  EXPECT_THROW((void)dg::wasserstein_p_1d(D({0.0}), D({1.0}), 3), tusla::UsageError);
}

TEST(Wasserstein, UnequalSizesUseMidRankQuantiles) {
  using D = dg::EmpiricalDistribution1D;
  // Quantiles of {0,1,2,3} at 1/4 and 3/4 with mid-rank interpolation are 0.5 and 2.5.
  const D big({0.0, 1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(big.quantile(0.25), 0.5);
  EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(D({0.5, 2.5}), big, 1), 0.0);
}

TEST(Wasserstein, Axioms) {
  tusla::Rng rng(11);
  std::vector<double> a(300), b(300), c(300);
  for (auto* v : {&a, &b, &c})
    for (double& x : *v) x = rng.gaussian() * 2 + rng.uniform01();
  const dg::EmpiricalDistribution1D A(a), B(b), C(c);
  for (int p : {1, 2}) {
    EXPECT_EQ(dg::wasserstein_p_1d(A, A, p), 0.0);
    EXPECT_DOUBLE_EQ(dg::wasserstein_p_1d(A, B, p), dg::wasserstein_p_1d(B, A, p));
    EXPECT_LE(dg::wasserstein_p_1d(A, C, p), dg::wasserstein_p_1d(A, B, p) + dg::wasserstein_p_1d(B, C, p) + 1e-12);
    std::vector<double> shifted(a);
    for (double& x : shifted) x += 0.75;
    EXPECT_NEAR(dg::wasserstein_p_1d(A, dg::EmpiricalDistribution1D(shifted), p), 0.75, 1e-12);
  }
  EXPECT_LE(dg::wasserstein_p_1d(A, B, 1), dg::wasserstein_p_1d(A, B, 2));
}

TEST(Normal, QuantileInvertsCdf) {
  EXPECT_DOUBLE_EQ(dg::normal_cdf(0.0), 0.5);
  EXPECT_NEAR(dg::normal_cdf(1.959963984540054), 0.975, 1e-15);
  for (double p : {1e-10, 1e-4, 0.1, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9}) {
    EXPECT_NEAR(dg::normal_cdf(dg::normal_quantile(p)), p, 1e-13 * std::max(1.0, p / (1 - p)));
  }
  EXPECT_DOUBLE_EQ(dg::normal_quantile(0.5, 3.0, 2.0), 3.0);
  EXPECT_THROW((void)dg::normal_quantile(1.0), tusla::UsageError);
}

TEST(Normal, QuantileGridMoments) {
  // The mid-rank grid is symmetric with variance just under sd^2.
  const auto g = dg::normal_quantile_grid(10000, 1.0, 0.5);
  EXPECT_NEAR(g.mean(), 1.0, 1e-12);
  EXPECT_NEAR(g.variance(), 0.25, 2e-3);
  EXPECT_LT(dg::ks_statistic(g, [](double x) { return dg::normal_cdf(x, 1.0, 0.5); }), 0.5 / 10000 + 1e-12);
}

TEST(Gibbs, StandardNormalFromQuadraticPotential) {
  const auto u = [](double t) { return 0.5 * t * t; };
  const auto table = dg::build_gibbs_table(u, 1.0, -1.0, 1.0);
  EXPECT_LT(table.tail_mass, 1e-8);
  EXPECT_NEAR(table.mode(), 0.0, 1e-3);
  EXPECT_NEAR(table.quantile(0.975), 1.959963984540054, 1e-6);
  tusla::Rng rng(5);
  const auto s = dg::gibbs_sampler_1d(u, 1.0, -1.0, 1.0, 100000, rng);
  EXPECT_NEAR(s.mean(), 0.0, 0.015);
  EXPECT_NEAR(s.variance(), 1.0, 0.015);
  EXPECT_LT(dg::ks_statistic(s, [](double x) { return dg::normal_cdf(x); }), 0.01);
}

TEST(Gibbs, InverseTemperatureScalesVariance) {
  const auto u = [](double t) { return 0.5 * t * t; };
  tusla::Rng rng(6);
  const auto s = dg::gibbs_sampler_1d(u, 4.0, -5.0, 5.0, 100000, rng);
  EXPECT_NEAR(s.variance(), 0.25, 0.004);
  EXPECT_LT(dg::ks_statistic(s, [](double x) { return dg::normal_cdf(x, 0.0, 0.5); }), 0.01);
}

TEST(Gibbs, FamilyModeAtMinimiser) {
  const auto u = [](double t) { return tusla::problems::u_s_value(t, 2); };
  const auto table = dg::build_gibbs_table(u, 10.0, -3.0, 3.0);
  EXPECT_NEAR(table.mode(), tusla::problems::kUsMinimizer, 1e-3);
  tusla::Rng rng(7);
  const auto s = dg::gibbs_sampler_1d(u, 10.0, -3.0, 3.0, 100000, rng);
  // The density is symmetric about the minimiser, so a wide kernel adds no bias.
  EXPECT_NEAR(dg::smoothed_mode(s, 0.2), tusla::problems::kUsMinimizer, 0.05);
}

TEST(Gibbs, SetupErrors) {
  EXPECT_THROW((void)dg::build_gibbs_table([](double t) { return -t * t; }, 1.0, -1.0, 1.0), tusla::SetupError);
  EXPECT_THROW((void)dg::build_gibbs_table([](double) { return 1e6; }, 1.0, -1.0, 1.0), tusla::SetupError);
  EXPECT_THROW((void)dg::build_gibbs_table([](double t) { return t * t; }, 0.0, -1.0, 1.0), tusla::UsageError);
}
