#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "tusla/errors.hpp"
#include "tusla/gradient_oracle.hpp"
#include "tusla/rng.hpp"

using tusla::ParameterVector;
using tusla::RegularizationParams;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// (g + eta theta |theta|^(2r)) / (1 + sqrt(lambda) |theta|^(2r)) in long double.
std::vector<long double> drift_long_double(const std::vector<double>& g,
                                           const std::vector<double>& theta, long double lambda,
                                           long double eta, long double r) {
  long double ss = 0;
  for (double t : theta) ss += static_cast<long double>(t) * t;
  const long double power = std::pow(std::sqrt(ss), 2 * r);
  const long double denom = 1 + std::sqrt(lambda) * power;
  std::vector<long double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] + eta * power * theta[i]) / denom;
  return out;
}

}  // namespace

TEST(ParameterVector, RejectsNonFiniteAndComputesSafeNorm) {
  EXPECT_THROW(ParameterVector({1.0, std::numeric_limits<double>::infinity()}), tusla::OverflowError);
  EXPECT_THROW(ParameterVector({std::nan("")}), tusla::OverflowError);
  EXPECT_EQ(ParameterVector({3.0, 4.0}).norm(), 5.0);
  EXPECT_DOUBLE_EQ(ParameterVector({3e300, 4e300}).norm(), 5e300);
  EXPECT_DOUBLE_EQ(ParameterVector({3e-300, 4e-300}).norm(), 5e-300);
  EXPECT_EQ(ParameterVector(std::size_t{3}).size(), 3u);
}

TEST(RegularizedGradient, VanishesAtOrigin) {
  const ParameterVector g{1.5, -2.0};
  EXPECT_EQ(tusla::regularized_gradient(g, ParameterVector(std::size_t{2}), {0.3, 2.0}), g);
}

TEST(RegularizedGradient, UnitNorm) {
  const auto h = tusla::regularized_gradient(ParameterVector{6.0}, ParameterVector{1.0}, {0.01, 12.0});
  EXPECT_DOUBLE_EQ(h[0], 6.01);
}

TEST(RegularizedGradient, HandEvaluatedTwoDimensional) {
  const auto h = tusla::regularized_gradient(ParameterVector{0.0, 0.0}, ParameterVector{3.0, 4.0},
                                             {0.5, 1.0});
  EXPECT_DOUBLE_EQ(h[0], 37.5);
  EXPECT_DOUBLE_EQ(h[1], 50.0);
}

TEST(RegularizedGradient, Errors) {
  EXPECT_THROW((void)tusla::regularized_gradient(ParameterVector{1.0}, ParameterVector{1.0, 2.0}, {0.1, 1.0}),
               tusla::UsageError);
  EXPECT_THROW((void)tusla::regularized_gradient(ParameterVector{1.0}, ParameterVector{1e20}, {0.1, 12.0}),
               tusla::OverflowError);
}

TEST(TamedGradient, ZeroStepLeavesInputUnchanged) {
  const ParameterVector h{2.0, -7.0};
  EXPECT_EQ(tusla::tamed_gradient(h, ParameterVector{5.0, 5.0}, 0.0, 3.0), h);
}

TEST(TamedGradient, HandEvaluated) {
  const auto t = tusla::tamed_gradient(ParameterVector{6.0}, ParameterVector{2.0}, 0.25, 1.0);
  EXPECT_DOUBLE_EQ(t[0], 2.0);
}

TEST(TamedGradient, UnitNormHalves) {
  for (double r : {1.0, 2.5, 36.0}) {
    const auto t = tusla::tamed_gradient(ParameterVector{4.0, -1.0}, ParameterVector{0.6, 0.8}, 1.0, r);
    EXPECT_DOUBLE_EQ(t[0], 2.0);
    EXPECT_DOUBLE_EQ(t[1], -0.5);
  }
}

TEST(TamedGradient, OverflowIsReported) {
  EXPECT_THROW((void)tusla::tamed_gradient(ParameterVector{1.0}, ParameterVector{1e14}, 0.01, 12.0),
               tusla::OverflowError);
  EXPECT_THROW((void)tusla::tamed_gradient(ParameterVector{1.0}, ParameterVector{1.0}, -1.0, 1.0),
               tusla::UsageError);
}

TEST(TamedGradient, Dominance) {
  tusla::Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t d = 1 + i % 3;
    std::vector<double> h(d), th(d);
    for (std::size_t k = 0; k < d; ++k) {
      h[k] = rng.uniform(-1e3, 1e3);
      th[k] = std::pow(10.0, rng.uniform(-3, 1.5)) * (rng.uniform01() < 0.5 ? -1 : 1);
    }
    const double lambda = std::pow(10.0, rng.uniform(-4, 0));
    const double r = rng.uniform(0.5, 12);
    const ParameterVector hv(h), tv(th);
    const double out = tusla::tamed_gradient(hv, tv, lambda, r).norm();
    EXPECT_LE(out, hv.norm() * (1 + 4 * kEps));
    EXPECT_LE(out, hv.norm() / (std::sqrt(lambda) * std::pow(tv.norm(), 2 * r)) * (1 + 4 * kEps));
  }
}

TEST(OverflowSafeDrift, InnerBranchEqualsTwoStagePath) {
  const ParameterVector g{0.3, -1.2};
  const ParameterVector theta{0.4, 0.5};
  const RegularizationParams reg{0.2, 3.0};
  const auto naive = tusla::tamed_gradient(tusla::regularized_gradient(g, theta, reg), theta, 0.09, reg.r);
  const auto safe = tusla::overflow_safe_drift(g, theta, 0.09, reg);
  EXPECT_EQ(safe, naive);
}

TEST(OverflowSafeDrift, OuterBranchMatchesHandValue) {
  const auto safe = tusla::overflow_safe_drift(ParameterVector{6.0}, ParameterVector{2.0}, 0.25, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(safe[0], 2.0);
}

TEST(OverflowSafeDrift, UnitNormBothBranchesAgree) {
  // At |theta| = 1 the two forms coincide analytically.
  const std::vector<double> g{0.7};
  const std::vector<double> th{1.0};
  const auto inner = tusla::naive_drift_values<double>(g, th, 0.3, 0.05, 4.0);
  const auto outer = tusla::safe_drift_values<double>(g, th, 0.3, 0.05, 4.0);
  EXPECT_NEAR(inner[0], outer[0], 2 * kEps * std::fabs(inner[0]));
}

TEST(OverflowSafeDrift, HugeThetaAgainstExtendedPrecision) {
  const RegularizationParams reg{0.01, 12.0};
  const auto safe = tusla::overflow_safe_drift(ParameterVector{0.0}, ParameterVector{1e8}, 0.01, reg);
  const auto ref = drift_long_double({0.0}, {1e8}, 0.01L, 0.01L, 12.0L);
  EXPECT_NEAR(safe[0], static_cast<double>(ref[0]), 8 * kEps * static_cast<double>(ref[0]));
  EXPECT_NEAR(safe[0], 1e7, 1e7 * 1e-12);

  // The explicit power overflows in single precision here, and in double a
  // little further out, while the rearranged form stays finite.
  const std::vector<float> gf{0.0f}, tf{1e8f};
  EXPECT_FALSE(std::isfinite(tusla::naive_drift_values<float>(gf, tf, 0.01f, 0.01f, 12.0f)[0]));
  EXPECT_TRUE(std::isfinite(tusla::safe_drift_values<float>(gf, tf, 0.01f, 0.01f, 12.0f)[0]));
  const std::vector<double> g{0.0}, t{1e14};
  EXPECT_FALSE(std::isfinite(tusla::naive_drift_values<double>(g, t, 0.01, 0.01, 12.0)[0]));
  const auto far = tusla::overflow_safe_drift(ParameterVector{0.0}, ParameterVector{1e14}, 0.01, reg);
  EXPECT_DOUBLE_EQ(far[0], 1e13);
  const auto max = tusla::overflow_safe_drift(ParameterVector{1.0},
                                              ParameterVector{std::numeric_limits<double>::max() / 2},
                                              0.01, reg);
  EXPECT_TRUE(std::isfinite(max[0]));
}

TEST(OverflowSafeDrift, BranchConsistencyWithinEightUlps) {
  // Scale of the result: each summand divided by the common denominator,
  // which is what rounding errors are relative to when g and the penalty cancel.
  tusla::Rng rng(7);
  int compared = 0;
  for (int i = 0; i < 5000; ++i) {
    const std::size_t d = 1 + i % 3;
    std::vector<double> g(d), th(d);
    const double target = std::pow(10.0, rng.uniform(-6, 3));
    for (std::size_t k = 0; k < d; ++k) {
      g[k] = rng.uniform(-100, 100);
      th[k] = rng.uniform(-1, 1);
    }
    const double n0 = tusla::euclidean_norm(th);
    for (double& t : th) t *= target / n0;
    const double lambda = std::pow(10.0, rng.uniform(-4, 0));
    const RegularizationParams reg{rng.uniform(0, 0.5), rng.uniform(1, 12)};
    const ParameterVector gv(g), tv(th);
    ParameterVector naive(std::size_t{0});
    try {
      naive = tusla::tamed_gradient(tusla::regularized_gradient(gv, tv, reg), tv, lambda, reg.r);
    } catch (const tusla::OverflowError&) {
      continue;
    }
    const auto safe = tusla::overflow_safe_drift(gv, tv, lambda, reg);
    const double norm = tv.norm();
    const double power = std::pow(norm, 2 * reg.r);
    const double scale = (gv.norm() + reg.eta * power * norm) / (1 + std::sqrt(lambda) * power);
    for (std::size_t k = 0; k < d; ++k) EXPECT_LE(std::fabs(safe[k] - naive[k]), 8 * kEps * scale);
    ++compared;
  }
  EXPECT_GT(compared, 4000);
}

TEST(LambdaMax, HandEvaluated) {
  EXPECT_EQ(tusla::lambda_max(0.01, 1), 1.0);
  EXPECT_DOUBLE_EQ(tusla::lambda_max(0.01, 2), 1.0 / (4e-4 * 9216.0));
  EXPECT_NEAR(tusla::lambda_max(0.01, 2), 0.27126, 1e-5);
  EXPECT_DOUBLE_EQ(tusla::lambda_max(1.0, 1), 1.0 / 1024.0);
  EXPECT_EQ(tusla::lambda_max(0.0, 3), 1.0);
  EXPECT_THROW((void)tusla::lambda_max(0.1, 0), tusla::UsageError);
}

TEST(LambdaMax, BinomialOfHigherOrders) {
  // p = 4: C(4,2) = 6, 8 * 5 * 36 = 1440.
  EXPECT_DOUBLE_EQ(tusla::lambda_max(0.01, 4), 1.0 / (4e-4 * 1440.0 * 1440.0));
  // p = 5: C(5,3) = 10, 8 * 6 * 100 = 4800.
  EXPECT_DOUBLE_EQ(tusla::lambda_max(0.01, 5), 1.0 / (4e-4 * 4800.0 * 4800.0));
}

TEST(Regularization, Validation) {
  EXPECT_THROW(RegularizationParams({1.0, 2.0}).validate(), tusla::UsageError);
  EXPECT_THROW(RegularizationParams({-0.1, 2.0}).validate(), tusla::UsageError);
  EXPECT_THROW(RegularizationParams({0.1, 0.0}).validate(), tusla::UsageError);
  const tusla::OracleMeta meta{4.0, 1.0, 1.0};
  EXPECT_THROW(RegularizationParams({0.01, 2.5}).validate_for(meta), tusla::UsageError);
  EXPECT_NO_THROW(RegularizationParams({0.01, 3.0}).validate_for(meta));
  EXPECT_NO_THROW(RegularizationParams({0.0, 0.5}).validate_for(meta));
}

TEST(GrowthConstant, Formula) {
  EXPECT_DOUBLE_EQ(tusla::growth_constant({2.0, 1.0, 3.0}, 1.0, 0.5), 4.0 * (3.0 * 2.0 + 0.5));
}
