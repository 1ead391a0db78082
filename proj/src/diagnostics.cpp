#include "hihmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hihmc/errors.hpp"
#include "hihmc/samplers.hpp"

namespace hihmc {

namespace {

struct Centred {
  Eigen::VectorXd values;
  double sum_squares = 0.0;
};

Centred centre(const Eigen::VectorXd& series) {
  Centred c;
  c.values = series.array() - series.mean();
  c.sum_squares = c.values.squaredNorm();
  if (!(c.sum_squares > 0.0)) throw ZeroVariance("series has zero variance");
  return c;
}

double lagged(const Centred& c, Eigen::Index lag) {
  const Eigen::Index n = c.values.size();
  return c.values.head(n - lag).dot(c.values.tail(n - lag)) / c.sum_squares;
}

}  // namespace

Eigen::VectorXd spatial_average(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw std::invalid_argument("spatial_average needs at least one sample");
  }
  return samples.rowwise().mean();
}

double autocorrelation(const Eigen::VectorXd& series, int lag) {
  if (series.size() < 2) throw std::invalid_argument("autocorrelation needs N >= 2");
  if (lag < 0 || lag >= series.size()) throw std::invalid_argument("lag out of range");
  return lagged(centre(series), lag);
}

std::vector<double> autocorrelation_series(const Eigen::VectorXd& series, int max_lag) {
  if (series.size() < 2) throw std::invalid_argument("autocorrelation needs N >= 2");
  const Centred c = centre(series);
  const int top = std::min<int>(max_lag, static_cast<int>(series.size()) - 1);
  std::vector<double> rho;
  rho.reserve(std::max(top, 0));
  for (int t = 1; t <= top; ++t) rho.push_back(lagged(c, t));
  return rho;
}

CorrelationTime correlation_time(const Eigen::VectorXd& series, const TauOptions& options) {
  if (series.size() < 10) throw std::invalid_argument("correlation_time needs N >= 10");
  const Centred c = centre(series);
  const auto n = static_cast<int>(series.size());
  const int ceiling = std::max(1, std::min(n - 1, static_cast<int>(options.max_lag_fraction * n)));

  CorrelationTime out;
  double sum = 0.0;
  for (int t = 1; t <= ceiling; ++t) {
    const double r = lagged(c, t);
    out.rho.push_back(r);
    if (r <= 0.0) break;
    sum += r;
    out.truncation_lag = t;
  }
  const double factor = options.convention == TauConvention::kPaired ? 2.0 : 1.0;
  out.tau = std::max(1.0, 1.0 + factor * sum);
  return out;
}

double effective_samples(long n, double tau) { return static_cast<double>(n) / tau; }

double acceptance_rate(const std::vector<std::uint8_t>& flags) {
  if (flags.empty()) throw std::invalid_argument("acceptance_rate needs at least one flag");
  long accepted = 0;
  for (auto f : flags) accepted += f ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(flags.size());
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double rank = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

CredibleBand credible_band(const Eigen::MatrixXd& samples, double mass) {
  if (samples.rows() < 2) throw std::invalid_argument("credible_band needs N >= 2");
  if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("credible mass must be in (0, 1]");
  const double q_lo = 0.5 * (1.0 - mass);
  const double q_hi = 0.5 * (1.0 + mass);
  CredibleBand band{Eigen::VectorXd(samples.cols()), Eigen::VectorXd(samples.cols())};
  std::vector<double> column(samples.rows());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) column[i] = samples(i, j);
    std::sort(column.begin(), column.end());
    band.lower[j] = sorted_quantile(column, q_lo);
    band.upper[j] = sorted_quantile(column, q_hi);
  }
  return band;
}

ChainDiagnostics diagnose(const Eigen::MatrixXd& samples, const std::vector<std::uint8_t>& flags,
                          const TauOptions& options) {
  ChainDiagnostics d;
  d.acceptance_rate = acceptance_rate(flags);
  const Eigen::VectorXd series = spatial_average(samples);
  try {
    CorrelationTime ct = correlation_time(series, options);
    d.tau = ct.tau;
    d.rho = std::move(ct.rho);
  } catch (const ZeroVariance&) {
    // A chain that never moved carries one sample's worth of information.
    d.tau = static_cast<double>(samples.rows());
  }
  d.n_eff = effective_samples(samples.rows(), d.tau);
  return d;
}

ChainDiagnostics diagnose(const ChainRecord& record, const TauOptions& options) {
  return diagnose(record.samples, record.accept_flags, options);
}

int decay_lag(const std::vector<double>& rho, double threshold) {
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (std::abs(rho[i]) < threshold) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace hihmc
