#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hihmc/diagnostics.hpp"
#include "hihmc/errors.hpp"
#include "hihmc/samplers.hpp"
#include "hihmc/targets.hpp"

namespace hihmc {

/// Log-normal field settings. Either a synthetic squared-exponential field on
/// the grid, or Sigma and m read from dense CSV files.
struct TargetSettings {
  GridLayout grid{8, 8, 8000.0, 4000.0};
  double lengthscale_m = 500.0;
  double variance = 0.01;
  double nugget = 1e-6;
  /// Mean of log theta at the centre of the layer.
  double m_value = -1.0;
  /// Change of m from the left to the right edge of the layer (linear in x).
  double m_trend = 4.0;
  std::filesystem::path sigma_csv;
  std::filesystem::path m_csv;
};

struct SamplerSettings {
  std::map<Method, double> dt{{Method::kMH, 0.001},
                              {Method::kHMC, 0.0025},
                              {Method::kHMapHMC, 0.3},
                              {Method::kHLocalHMC, 0.3}};
  int leapfrog_steps = 10;
  int n_samples = 25000;
  int burn_in = 0;
  std::uint64_t seed = 42;
  bool store_samples = false;
  int thin = 10;
  bool jitter_steps = false;
  double pd_floor = 1e-6;
  LocalEndpoint local_endpoint = LocalEndpoint::kFrozen;
  bool local_logdet = true;
  TauConvention tau_convention = TauConvention::kLiteral;
  /// M = beta I for plain HMC.
  double beta = 1.0;
};

struct RunSettings {
  std::vector<Method> methods{Method::kMH, Method::kHMC, Method::kHMapHMC, Method::kHLocalHMC};
  std::filesystem::path output_dir = "bench_out";
  int chains = 1;
  /// 0 = HIHMC_THREADS, else hardware concurrency.
  int threads = 0;
  double band_mass = 0.95;
  /// Leading retained samples per chain used for the credible band.
  int band_samples = 10000;
  /// Lags written to rho_<method>.csv; 0 = N/4.
  int rho_max_lag = 0;
};

struct RunConfig {
  TargetSettings target;
  SamplerSettings sampler;
  RunSettings run;
};

/// Parses {target, sampler, run}. Missing fields keep their defaults;
/// unknown fields and ill-typed values raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON config. Relative CSV paths resolve against the file's
/// directory.
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError for values outside their valid ranges.
void validate(const RunConfig& config);

LogNormalField build_target(const TargetSettings& settings);

/// Per-coordinate exact marginal quantiles exp(m_i + z_q sqrt(Sigma_ii)),
/// q = (1 -/+ mass) / 2.
CredibleBand exact_band(const LogNormalField& target, double mass);

SamplerConfig sampler_config(const SamplerSettings& settings, Method method);

/// seed xor chain_index.
std::uint64_t chain_seed(std::uint64_t seed, int chain);

struct ChainSummary {
  int chain = 0;
  std::uint64_t seed = 0;
  ChainDiagnostics diagnostics;
  int decay_lag = 0;
  double max_repair_shift = 0.0;
};

struct MethodSummary {
  Method method = Method::kMH;
  double dt = 0.0;
  /// Diagonal shift used to make the H(MAP) mass positive definite.
  double mass_shift = 0.0;
  std::vector<ChainSummary> chains;
  double acceptance = 0.0;
  double tau = 1.0;
  double n_eff = 0.0;
  int decay_lag = 0;
  /// 90th percentile over coordinates of the larger relative endpoint error
  /// of the pooled band against exact_band.
  double band_rel_err_p90 = 0.0;
  CredibleBand band;
  /// lag -> rho per chain.
  std::vector<std::vector<double>> rho;
};

struct ExperimentResult {
  Eigen::VectorXd map_point;
  CredibleBand exact;
  std::vector<MethodSummary> methods;
};

/// Builds the target, runs every (method, chain) pair from the MAP point and
/// writes map.csv, diag/rho/band_<method>.csv, optional samples CSVs and
/// summary.csv into run.output_dir. Throws ExperimentError.
ExperimentResult run_experiment(const RunConfig& config);

/// Writes map.csv only; returns its path.
std::filesystem::path write_map(const RunConfig& config);

/// Failure of one experiment stage with the process exit code it maps to:
/// 2 config, 3 numerical, 4 I/O.
class ExperimentError : public Error {
 public:
  ExperimentError(std::string stage, int exit_code, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

/// Exit code for an exception escaping a stage.
int exit_code_for(const std::exception& e);

}  // namespace hihmc
