#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hihmc {

struct ChainRecord;

/// Per-row mean over coordinates.
Eigen::VectorXd spatial_average(const Eigen::MatrixXd& samples);

/// Lag-t sample autocorrelation, normalized by the full lag-0 sum of squares
/// around the full-series mean. Throws ZeroVariance on a constant series.
double autocorrelation(const Eigen::VectorXd& series, int lag);

/// rho_1 .. rho_max_lag in one pass over a centred copy.
std::vector<double> autocorrelation_series(const Eigen::VectorXd& series, int max_lag);

enum class TauConvention {
  /// tau = 1 + sum rho_t
  kLiteral,
  /// tau = 1 + 2 sum rho_t, the integrated autocorrelation time
  kPaired,
};

struct TauOptions {
  TauConvention convention = TauConvention::kLiteral;
  /// Hard ceiling on the truncation lag, as a fraction of N.
  double max_lag_fraction = 0.25;
};

struct CorrelationTime {
  double tau = 1.0;
  /// rho_1 .. rho_{T*+1}: the positive prefix plus the first non-positive
  /// value (absent when the ceiling was hit first).
  std::vector<double> rho;
  /// Number of lags summed.
  int truncation_lag = 0;
};

/// Sums rho_t over the initial positive sequence (stops before the first
/// rho_t <= 0) and clamps tau to >= 1. Needs N >= 10.
CorrelationTime correlation_time(const Eigen::VectorXd& series, const TauOptions& options = {});

double effective_samples(long n, double tau);

double acceptance_rate(const std::vector<std::uint8_t>& flags);

/// Quantile at rank q (N - 1) with linear interpolation between order
/// statistics; values must be sorted ascending.
double sorted_quantile(const std::vector<double>& sorted, double q);

struct CredibleBand {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Per-coordinate ((1 - mass)/2, (1 + mass)/2) empirical quantiles.
CredibleBand credible_band(const Eigen::MatrixXd& samples, double mass);

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  std::vector<double> rho;
  double tau = 1.0;
  double n_eff = 0.0;
  std::string summary_scalar = "spatial_average";
};

/// Acceptance, tau and N_eff of the spatial average of a chain.
ChainDiagnostics diagnose(const ChainRecord& record, const TauOptions& options = {});

/// Same from raw samples and flags.
ChainDiagnostics diagnose(const Eigen::MatrixXd& samples, const std::vector<std::uint8_t>& flags,
                          const TauOptions& options = {});

/// First lag t >= 1 with |rho_t| < threshold, or 0 if none among the
/// supplied lags (rho[0] is lag 1).
int decay_lag(const std::vector<double>& rho, double threshold);

}  // namespace hihmc
