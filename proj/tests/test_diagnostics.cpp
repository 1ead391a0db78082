#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hihmc/diagnostics.hpp"
#include "hihmc/errors.hpp"
#include "hihmc/samplers.hpp"

namespace hihmc {
namespace {

Eigen::VectorXd iid_normal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = z(rng);
  return x;
}

Eigen::VectorXd ar1(int n, double phi, std::uint64_t seed) {
  const Eigen::VectorXd e = iid_normal(n, seed);
  Eigen::VectorXd x(n);
  x[0] = e[0] / std::sqrt(1 - phi * phi);
  for (int i = 1; i < n; ++i) x[i] = phi * x[i - 1] + e[i];
  return x;
}

Eigen::VectorXd alternating(int n) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = i % 2 == 0 ? 1.0 : -1.0;
  return x;
}

TEST(SpatialAverage, RowMeans) {
  Eigen::MatrixXd s(2, 3);
  s << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(spatial_average(s), Eigen::Vector2d(2, 5));
  EXPECT_EQ(spatial_average(Eigen::MatrixXd::Constant(4, 1, 7.0)), Eigen::VectorXd::Constant(4, 7.0));
}

TEST(Autocorrelation, Examples) {
  const Eigen::VectorXd x = iid_normal(1000, 1);
  EXPECT_DOUBLE_EQ(autocorrelation(x, 0), 1.0);
  EXPECT_NEAR(autocorrelation(alternating(1000), 1), -0.999, 1e-12);
  const Eigen::VectorXd big = iid_normal(100000, 2);
  for (int t = 1; t <= 5; ++t) EXPECT_LT(std::abs(autocorrelation(big, t)), 0.02);
  EXPECT_THROW(autocorrelation(Eigen::VectorXd::Constant(50, 3.0), 1), ZeroVariance);
}

TEST(Autocorrelation, SeriesMatchesSingleLag) {
  const Eigen::VectorXd x = ar1(500, 0.7, 3);
  const std::vector<double> rho = autocorrelation_series(x, 20);
  ASSERT_EQ(rho.size(), 20u);
  for (int t = 1; t <= 20; ++t) EXPECT_NEAR(rho[t - 1], autocorrelation(x, t), 1e-12);
}

TEST(CorrelationTime, IndependentDraws) {
  const double tau = correlation_time(iid_normal(100000, 4)).tau;
  EXPECT_GE(tau, 0.8);
  EXPECT_LE(tau, 1.3);
}

TEST(CorrelationTime, AutoregressiveProcess) {
  // Paired time of AR(1): (1 + phi) / (1 - phi) = 19 at phi = 0.9;
  // literal: 1 + phi / (1 - phi) = 10.
  const Eigen::VectorXd x = ar1(200000, 0.9, 5);
  EXPECT_NEAR(correlation_time(x).tau, 10.0, 1.5);
  EXPECT_NEAR(correlation_time(x, {TauConvention::kPaired}).tau, 19.0, 19.0 * 0.15);
}

TEST(CorrelationTime, AlternatingSeriesClampsToOne) {
  const CorrelationTime ct = correlation_time(alternating(1000));
  EXPECT_EQ(ct.tau, 1.0);
  EXPECT_EQ(ct.truncation_lag, 0);
}

TEST(CorrelationTime, CeilingLimitsTruncation) {
  Eigen::VectorXd trend(100);
  for (int i = 0; i < 100; ++i) trend[i] = i;
  const CorrelationTime ct = correlation_time(trend);
  EXPECT_LE(ct.truncation_lag, 25);
  EXPECT_GE(ct.tau, 1.0);
  EXPECT_THROW(correlation_time(Eigen::VectorXd::Zero(5)), std::exception);
}

TEST(CorrelationTime, InvariantUnderAffineMaps) {
  const Eigen::VectorXd x = ar1(5000, 0.5, 6);
  const Eigen::VectorXd y = (3.5 * x.array() - 11.0).matrix();
  EXPECT_NEAR(correlation_time(x).tau, correlation_time(y).tau, 1e-12);
}

TEST(CorrelationTime, ShuffledChainIsUncorrelated) {
  Eigen::VectorXd x = ar1(20000, 0.95, 7);
  std::mt19937_64 rng(8);
  std::shuffle(x.data(), x.data() + x.size(), rng);
  const double tau = correlation_time(x).tau;
  EXPECT_GE(tau, 0.8);
  EXPECT_LE(tau, 1.3);
}

TEST(EffectiveSamples, Examples) {
  EXPECT_NEAR(effective_samples(25000, 176.8), 141.4, 0.05);
  EXPECT_NEAR(effective_samples(25000, 123.4), 202.6, 0.05);
  EXPECT_EQ(effective_samples(1000, 1.0), 1000.0);
}

TEST(AcceptanceRate, Fraction) {
  EXPECT_EQ(acceptance_rate({1, 0, 1, 1}), 0.75);
  EXPECT_EQ(acceptance_rate({0, 0}), 0.0);
}

TEST(CredibleBand, Examples) {
  Eigen::MatrixXd s(5, 1);
  s << 1, 2, 3, 4, 5;
  CredibleBand b = credible_band(s, 0.5);
  EXPECT_DOUBLE_EQ(b.lower[0], 2.0);
  EXPECT_DOUBLE_EQ(b.upper[0], 4.0);

  Eigen::MatrixXd two(3, 2);
  two << 1, 0, 2, 5, 3, 10;
  b = credible_band(two, 0.5);
  EXPECT_DOUBLE_EQ(b.lower[0], 1.5);
  EXPECT_DOUBLE_EQ(b.upper[0], 2.5);
  EXPECT_DOUBLE_EQ(b.lower[1], 2.5);
  EXPECT_DOUBLE_EQ(b.upper[1], 7.5);

  b = credible_band(s, 1.0);
  EXPECT_EQ(b.lower[0], 1.0);
  EXPECT_EQ(b.upper[0], 5.0);
  EXPECT_THROW(credible_band(s, 0.0), std::exception);
}

TEST(CredibleBand, StandardNormal) {
  const Eigen::MatrixXd x = iid_normal(200000, 9);
  const CredibleBand b = credible_band(x, 0.95);
  EXPECT_NEAR(b.lower[0], -1.96, 0.05);
  EXPECT_NEAR(b.upper[0], 1.96, 0.05);
}

TEST(CredibleBand, NestedInMass) {
  const Eigen::MatrixXd x = iid_normal(1000, 10);
  double lo = 0.0, hi = 0.0;
  for (double mass : {0.1, 0.5, 0.8, 0.95, 0.99}) {
    const CredibleBand b = credible_band(x, mass);
    EXPECT_LE(b.lower[0], lo);
    EXPECT_GE(b.upper[0], hi);
    lo = b.lower[0];
    hi = b.upper[0];
  }
}

TEST(SortedQuantile, Interpolates) {
  EXPECT_DOUBLE_EQ(sorted_quantile({0.0, 10.0}, 0.25), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile({4.0}, 0.9), 4.0);
}

TEST(Diagnose, SpatialAverageOfRecord) {
  ChainRecord r;
  const Eigen::VectorXd a = ar1(4000, 0.8, 11);
  r.samples.resize(4000, 2);
  r.samples.col(0) = a;
  r.samples.col(1) = a;
  r.accept_flags.assign(4000, 1);
  r.accept_flags[0] = 0;
  const ChainDiagnostics d = diagnose(r);
  EXPECT_NEAR(d.tau, correlation_time(a).tau, 1e-12);
  EXPECT_NEAR(d.n_eff, 4000 / d.tau, 1e-9);
  EXPECT_NEAR(d.acceptance_rate, 3999.0 / 4000.0, 1e-15);
  EXPECT_EQ(d.summary_scalar, "spatial_average");
}

TEST(Diagnose, FrozenChainHasTauN) {
  const ChainDiagnostics d =
      diagnose(Eigen::MatrixXd::Constant(100, 3, 0.5), std::vector<std::uint8_t>(100, 0));
  EXPECT_EQ(d.tau, 100.0);
  EXPECT_EQ(d.n_eff, 1.0);
}

TEST(DecayLag, FirstSmallLag) {
  EXPECT_EQ(decay_lag({0.9, 0.5, 0.04, 0.2}, 0.05), 3);
  EXPECT_EQ(decay_lag({0.01}, 0.05), 1);
  EXPECT_EQ(decay_lag({0.9, 0.8}, 0.05), 0);
  EXPECT_EQ(decay_lag({}, 0.05), 0);
}

}  // namespace
}  // namespace hihmc
