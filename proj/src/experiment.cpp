#include "hihmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "hihmc/csv.hpp"

namespace hihmc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBandTolerance = 0.15;
constexpr double kDecayThreshold = 0.1;

// --- config parsing ---------------------------------------------------------

void reject_unknown(const json& section, const std::string& name,
                    const std::set<std::string>& known) {
  if (!section.is_object()) throw ConfigError("section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    if (!known.count(key)) throw ConfigError("unknown field '" + name + "." + key + "'");
  }
}

template <class T>
void read(const json& section, const std::string& key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

Method method_or_throw(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw ConfigError("unknown method '" + name + "'");
  return *m;
}

TargetSettings parse_target(const json& t) {
  reject_unknown(t, "target",
                 {"rows", "cols", "extent_m", "lengthscale_m", "variance", "nugget", "m_value",
                  "m_trend", "sigma_csv", "m_csv"});
  TargetSettings s;
  read(t, "rows", s.grid.rows);
  read(t, "cols", s.grid.cols);
  if (t.contains("extent_m")) {
    std::vector<double> extent;
    read(t, "extent_m", extent);
    if (extent.size() != 2) throw ConfigError("target.extent_m must be [x_m, y_m]");
    s.grid.extent_x_m = extent[0];
    s.grid.extent_y_m = extent[1];
  }
  read(t, "lengthscale_m", s.lengthscale_m);
  read(t, "variance", s.variance);
  read(t, "nugget", s.nugget);
  read(t, "m_value", s.m_value);
  read(t, "m_trend", s.m_trend);
  std::string path;
  read(t, "sigma_csv", path);
  s.sigma_csv = path;
  path.clear();
  read(t, "m_csv", path);
  s.m_csv = path;
  return s;
}

SamplerSettings parse_sampler(const json& j) {
  reject_unknown(j, "sampler",
                 {"dt", "leapfrog_steps", "n_samples", "burn_in", "seed", "store_samples", "thin",
                  "jitter_steps", "pd_floor", "hlocal_endpoint", "hlocal_logdet",
                  "tau_convention", "beta"});
  SamplerSettings s;
  if (j.contains("dt")) {
    const json& dt = j.at("dt");
    if (dt.is_number()) {
      for (auto& [method, value] : s.dt) value = dt.get<double>();
    } else if (dt.is_object()) {
      for (const auto& [name, value] : dt.items()) {
        if (!value.is_number()) throw ConfigError("sampler.dt." + name + " must be a number");
        s.dt[method_or_throw(name)] = value.get<double>();
      }
    } else {
      throw ConfigError("sampler.dt must be a number or a {method: dt} object");
    }
  }
  read(j, "leapfrog_steps", s.leapfrog_steps);
  read(j, "n_samples", s.n_samples);
  read(j, "burn_in", s.burn_in);
  read(j, "seed", s.seed);
  read(j, "store_samples", s.store_samples);
  read(j, "thin", s.thin);
  read(j, "jitter_steps", s.jitter_steps);
  read(j, "pd_floor", s.pd_floor);
  read(j, "hlocal_logdet", s.local_logdet);
  read(j, "beta", s.beta);
  if (j.contains("hlocal_endpoint")) {
    std::string v;
    read(j, "hlocal_endpoint", v);
    if (v == "frozen") {
      s.local_endpoint = LocalEndpoint::kFrozen;
    } else if (v == "recompute") {
      s.local_endpoint = LocalEndpoint::kRecompute;
    } else {
      throw ConfigError("sampler.hlocal_endpoint must be \"frozen\" or \"recompute\"");
    }
  }
  if (j.contains("tau_convention")) {
    std::string v;
    read(j, "tau_convention", v);
    if (v == "literal") {
      s.tau_convention = TauConvention::kLiteral;
    } else if (v == "paired") {
      s.tau_convention = TauConvention::kPaired;
    } else {
      throw ConfigError("sampler.tau_convention must be \"literal\" or \"paired\"");
    }
  }
  return s;
}

RunSettings parse_run(const json& j) {
  reject_unknown(j, "run",
                 {"methods", "output_dir", "chains", "threads", "band_mass", "band_samples",
                  "rho_max_lag"});
  RunSettings s;
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read(j, "methods", names);
    s.methods.clear();
    for (const auto& n : names) s.methods.push_back(method_or_throw(n));
  }
  std::string dir;
  read(j, "output_dir", dir);
  if (!dir.empty()) s.output_dir = dir;
  read(j, "chains", s.chains);
  read(j, "threads", s.threads);
  read(j, "band_mass", s.band_mass);
  read(j, "band_samples", s.band_samples);
  read(j, "rho_max_lag", s.rho_max_lag);
  return s;
}

// --- execution --------------------------------------------------------------

struct ChainJob {
  std::size_t method_index = 0;
  int chain = 0;
};

struct ChainOutput {
  ChainSummary summary;
  std::vector<double> rho;
  Eigen::MatrixXd band_block;
  std::exception_ptr error;
};

int thread_count(const RunSettings& run, std::size_t jobs) {
  int n = run.threads;
  if (n <= 0) {
    if (const char* env = std::getenv("HIHMC_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), jobs));
}

std::string sample_file(Method m, int chain) {
  return "samples_" + std::string(method_name(m)) + "_" + std::to_string(chain) + ".csv";
}

void write_samples(const fs::path& path, const ChainRecord& record, int thin) {
  csv::Writer w(path.string());
  std::vector<std::string> cells{"iter"};
  for (Eigen::Index j = 0; j < record.samples.cols(); ++j) cells.push_back("theta_" + std::to_string(j));
  w.row(cells);
  for (Eigen::Index i = 0; i < record.samples.rows(); i += thin) {
    cells.assign(1, csv::format(static_cast<long>(i)));
    for (Eigen::Index j = 0; j < record.samples.cols(); ++j) {
      cells.push_back(csv::format(record.samples(i, j)));
    }
    w.row(cells);
  }
  w.close();
}

MassSpec mass_for(Method method, const LogNormalField& target, const SamplerSettings& s,
                  double& shift) {
  shift = 0.0;
  switch (method) {
    case Method::kMH:
    case Method::kHMC:
      return ScaledIdentity{s.beta};
    case Method::kHMapHMC: {
      RepairedFactor r = hmap_mass(target, s.pd_floor);
      shift = r.shift;
      return FixedSpd{std::move(r.factor)};
    }
    case Method::kHLocalHMC:
      return LocalHessian{s.pd_floor};
  }
  return ScaledIdentity{s.beta};
}

double band_rel_err_p90(const CredibleBand& band, const CredibleBand& exact) {
  std::vector<double> errs(static_cast<std::size_t>(band.lower.size()));
  for (Eigen::Index i = 0; i < band.lower.size(); ++i) {
    const double lo = std::abs(band.lower[i] - exact.lower[i]) / std::abs(exact.lower[i]);
    const double hi = std::abs(band.upper[i] - exact.upper[i]) / std::abs(exact.upper[i]);
    errs[static_cast<std::size_t>(i)] = std::max(lo, hi);
  }
  std::sort(errs.begin(), errs.end());
  return sorted_quantile(errs, 0.9);
}

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(stage, exit_code_for(e), e.what());
  }
}

void write_map_file(const fs::path& path, const LogNormalField& target, const Eigen::VectorXd& map) {
  csv::Writer w(path.string());
  w.row({"node", "row", "col", "x_m", "y_m", "theta_map"});
  const GridLayout& g = target.grid();
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    w.row({csv::format(static_cast<long>(i)), csv::format(static_cast<long>(i / g.cols)),
           csv::format(static_cast<long>(i % g.cols)), csv::format(g.x(i)), csv::format(g.y(i)),
           csv::format(map[i])});
  }
  w.close();
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* ee = dynamic_cast<const ExperimentError*>(&e)) return ee->exit_code();
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const NotPositiveDefinite*>(&e) || dynamic_cast<const RepairFailed*>(&e) ||
      dynamic_cast<const OutOfDomain*>(&e) || dynamic_cast<const ZeroVariance*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  return 2;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc, "<root>", {"target", "sampler", "run"});
  RunConfig c;
  if (doc.contains("target")) c.target = parse_target(doc.at("target"));
  if (doc.contains("sampler")) c.sampler = parse_sampler(doc.at("sampler"));
  if (doc.contains("run")) c.run = parse_run(doc.at("run"));
  validate(c);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  RunConfig c = parse_config(doc);
  const fs::path base = path.parent_path();
  if (!c.target.sigma_csv.empty() && c.target.sigma_csv.is_relative()) {
    c.target.sigma_csv = base / c.target.sigma_csv;
  }
  if (!c.target.m_csv.empty() && c.target.m_csv.is_relative()) {
    c.target.m_csv = base / c.target.m_csv;
  }
  return c;
}

void validate(const RunConfig& c) {
  const auto& t = c.target;
  if (t.grid.rows < 1 || t.grid.cols < 1) throw ConfigError("target.rows and target.cols must be >= 1");
  if (!(t.grid.extent_x_m > 0.0) || !(t.grid.extent_y_m > 0.0)) {
    throw ConfigError("target.extent_m entries must be positive");
  }
  if (t.sigma_csv.empty()) {
    if (!(t.lengthscale_m > 0.0)) throw ConfigError("target.lengthscale_m must be positive");
    if (!(t.variance > 0.0)) throw ConfigError("target.variance must be positive");
    if (!(t.nugget >= 0.0)) throw ConfigError("target.nugget must be non-negative");
  }
  if (!t.m_csv.empty() && t.sigma_csv.empty()) {
    throw ConfigError("target.m_csv needs target.sigma_csv");
  }
  const auto& s = c.sampler;
  for (const auto& [method, dt] : s.dt) {
    if (!(dt > 0.0)) throw ConfigError("sampler.dt for " + std::string(method_name(method)) + " must be positive");
  }
  if (s.leapfrog_steps < 1) throw ConfigError("sampler.leapfrog_steps must be >= 1");
  if (s.n_samples < 10) throw ConfigError("sampler.n_samples must be >= 10");
  if (s.burn_in < 0) throw ConfigError("sampler.burn_in must be >= 0");
  if (s.thin < 1) throw ConfigError("sampler.thin must be >= 1");
  if (!(s.pd_floor > 0.0)) throw ConfigError("sampler.pd_floor must be positive");
  if (!(s.beta > 0.0)) throw ConfigError("sampler.beta must be positive");
  const auto& r = c.run;
  if (r.methods.empty()) throw ConfigError("run.methods must not be empty");
  if (r.chains < 1) throw ConfigError("run.chains must be >= 1");
  if (!(r.band_mass > 0.0 && r.band_mass < 1.0)) throw ConfigError("run.band_mass must be in (0, 1)");
  if (r.band_samples < 2) throw ConfigError("run.band_samples must be >= 2");
  if (r.rho_max_lag < 0) throw ConfigError("run.rho_max_lag must be >= 0");
}

LogNormalField build_target(const TargetSettings& s) {
  if (!s.sigma_csv.empty()) {
    const Eigen::MatrixXd sigma = csv::read_matrix(s.sigma_csv.string());
    const Eigen::Index n = sigma.rows();
    Eigen::VectorXd m = Eigen::VectorXd::Constant(n, s.m_value);
    if (!s.m_csv.empty()) m = csv::read_vector(s.m_csv.string());
    GridLayout grid = s.grid;
    if (grid.size() != n) grid = GridLayout{static_cast<int>(n), 1, grid.extent_x_m, grid.extent_y_m};
    return LogNormalField(std::move(m), factorize(sigma), grid);
  }
  const GridLayout& g = s.grid;
  Eigen::VectorXd m(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    m[i] = s.m_value + s.m_trend * (g.x(i) / g.extent_x_m - 0.5);
  }
  return LogNormalField(std::move(m), build_grid_covariance(g, s.lengthscale_m, s.variance, s.nugget),
                        g);
}

CredibleBand exact_band(const LogNormalField& target, double mass) {
  const boost::math::normal standard;
  const double z_hi = boost::math::quantile(standard, 0.5 * (1.0 + mass));
  const Eigen::VectorXd sd = target.sigma().lower().rowwise().norm();
  CredibleBand band;
  band.lower = (target.mean_log().array() - z_hi * sd.array()).exp().matrix();
  band.upper = (target.mean_log().array() + z_hi * sd.array()).exp().matrix();
  return band;
}

SamplerConfig sampler_config(const SamplerSettings& s, Method method) {
  SamplerConfig cfg;
  cfg.method = method;
  const auto it = s.dt.find(method);
  cfg.dt = it != s.dt.end() ? it->second : reference_step_size(method);
  cfg.leapfrog_steps = s.leapfrog_steps;
  cfg.n_samples = s.n_samples;
  cfg.burn_in = s.burn_in;
  cfg.seed = s.seed;
  cfg.jitter_steps = s.jitter_steps;
  cfg.local_endpoint = s.local_endpoint;
  cfg.local_logdet = s.local_logdet;
  return cfg;
}

std::uint64_t chain_seed(std::uint64_t seed, int chain) {
  return seed ^ static_cast<std::uint64_t>(chain);
}

fs::path write_map(const RunConfig& config) {
  const LogNormalField target = in_stage("target build", [&] { return build_target(config.target); });
  return in_stage("write", [&] {
    fs::create_directories(config.run.output_dir);
    const fs::path path = config.run.output_dir / "map.csv";
    write_map_file(path, target, target.map_point());
    return path;
  });
}

ExperimentResult run_experiment(const RunConfig& config) {
  in_stage("config parse", [&] {
    validate(config);
    return 0;
  });
  const LogNormalField target = in_stage("target build", [&] { return build_target(config.target); });
  const fs::path out_dir = config.run.output_dir;
  const auto& s = config.sampler;
  const auto& run = config.run;

  ExperimentResult result;
  result.map_point = target.map_point();
  result.exact = exact_band(target, run.band_mass);

  in_stage("write", [&] {
    fs::create_directories(out_dir);
    write_map_file(out_dir / "map.csv", target, result.map_point);
    return 0;
  });

  std::vector<MassSpec> masses;
  result.methods.resize(run.methods.size());
  in_stage("target build", [&] {
    for (std::size_t k = 0; k < run.methods.size(); ++k) {
      MethodSummary& ms = result.methods[k];
      ms.method = run.methods[k];
      ms.dt = sampler_config(s, ms.method).dt;
      masses.push_back(mass_for(ms.method, target, s, ms.mass_shift));
    }
    return 0;
  });

  std::vector<ChainJob> jobs;
  for (std::size_t k = 0; k < run.methods.size(); ++k) {
    for (int c = 0; c < run.chains; ++c) jobs.push_back({k, c});
  }
  std::vector<ChainOutput> outputs(jobs.size());
  const TauOptions tau_options{s.tau_convention, 0.25};
  const int rho_lags = run.rho_max_lag > 0 ? run.rho_max_lag : s.n_samples / 4;
  const Eigen::Index band_rows = std::min(run.band_samples, s.n_samples);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      ChainOutput& out = outputs[i];
      try {
        const Method method = run.methods[jobs[i].method_index];
        SamplerConfig cfg = sampler_config(s, method);
        cfg.seed = chain_seed(s.seed, jobs[i].chain);
        const ChainRecord record = run_chain(target, masses[jobs[i].method_index], cfg, result.map_point);

        out.summary.chain = jobs[i].chain;
        out.summary.seed = cfg.seed;
        out.summary.diagnostics = diagnose(record, tau_options);
        try {
          out.rho = autocorrelation_series(spatial_average(record.samples), rho_lags);
        } catch (const ZeroVariance&) {
          out.rho.assign(static_cast<std::size_t>(std::min<long>(rho_lags, s.n_samples - 1)), 1.0);
        }
        out.summary.decay_lag = decay_lag(out.rho, kDecayThreshold);
        for (double shift : record.repair_shifts) {
          out.summary.max_repair_shift = std::max(out.summary.max_repair_shift, shift);
        }
        out.band_block = record.samples.topRows(band_rows);
        if (s.store_samples) {
          write_samples(out_dir / sample_file(method, jobs[i].chain), record, s.thin);
        }
      } catch (...) {
        out.error = std::current_exception();
      }
    }
  };
  const int n_threads = thread_count(run, jobs.size());
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (const auto& out : outputs) {
    if (!out.error) continue;
    try {
      std::rethrow_exception(out.error);
    } catch (const IoError& e) {
      throw ExperimentError("write", 4, e.what());
    } catch (const std::exception& e) {
      throw ExperimentError("chain run", exit_code_for(e), e.what());
    }
  }

  // Aggregate per method in job order.
  for (std::size_t k = 0; k < result.methods.size(); ++k) {
    MethodSummary& ms = result.methods[k];
    ms.tau = 0.0;
    Eigen::MatrixXd pooled(band_rows * run.chains, target.dim());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].method_index != k) continue;
      const ChainOutput& out = outputs[i];
      pooled.middleRows(band_rows * jobs[i].chain, band_rows) = out.band_block;
      ms.chains.push_back(out.summary);
      ms.rho.push_back(out.rho);
      ms.acceptance += out.summary.diagnostics.acceptance_rate / run.chains;
      ms.tau += out.summary.diagnostics.tau / run.chains;
      ms.n_eff += out.summary.diagnostics.n_eff;
      ms.decay_lag = std::max(ms.decay_lag, out.summary.decay_lag);
    }
    ms.band = credible_band(pooled, run.band_mass);
    ms.band_rel_err_p90 = band_rel_err_p90(ms.band, result.exact);
  }

  in_stage("write", [&] {
    for (const auto& ms : result.methods) {
      const std::string name(method_name(ms.method));
      {
        csv::Writer w((out_dir / ("diag_" + name + ".csv")).string());
        w.row({"chain", "seed", "n_samples", "acce", "tau", "n_eff", "decay_lag", "max_repair_shift",
               "mass_shift"});
        for (const auto& c : ms.chains) {
          w.row({csv::format(static_cast<long>(c.chain)), std::to_string(c.seed),
                 csv::format(static_cast<long>(s.n_samples)),
                 csv::format(c.diagnostics.acceptance_rate), csv::format(c.diagnostics.tau),
                 csv::format(c.diagnostics.n_eff), csv::format(static_cast<long>(c.decay_lag)),
                 csv::format(c.max_repair_shift), csv::format(ms.mass_shift)});
        }
        w.close();
      }
      {
        csv::Writer w((out_dir / ("rho_" + name + ".csv")).string());
        std::vector<std::string> cells{"lag"};
        for (const auto& c : ms.chains) cells.push_back("chain_" + std::to_string(c.chain));
        w.row(cells);
        const std::size_t lags = ms.rho.empty() ? 0 : ms.rho.front().size();
        for (std::size_t t = 0; t < lags; ++t) {
          cells.assign(1, csv::format(static_cast<long>(t + 1)));
          for (const auto& series : ms.rho) cells.push_back(csv::format(series[t]));
          w.row(cells);
        }
        w.close();
      }
      {
        csv::Writer w((out_dir / ("band_" + name + ".csv")).string());
        w.row({"coord", "lower", "upper", "exact_lower", "exact_upper"});
        for (Eigen::Index i = 0; i < ms.band.lower.size(); ++i) {
          w.row({csv::format(static_cast<long>(i)), csv::format(ms.band.lower[i]),
                 csv::format(ms.band.upper[i]), csv::format(result.exact.lower[i]),
                 csv::format(result.exact.upper[i])});
        }
        w.close();
      }
    }
    csv::Writer w((out_dir / "summary.csv").string());
    w.row({"method", "dt", "leapfrog_steps", "chains", "n_samples", "acce", "tau", "n_eff",
           "decay_lag", "band_rel_err_p90"});
    for (const auto& ms : result.methods) {
      w.row({std::string(method_name(ms.method)), csv::format(ms.dt),
             csv::format(static_cast<long>(s.leapfrog_steps)),
             csv::format(static_cast<long>(run.chains)), csv::format(static_cast<long>(s.n_samples)),
             csv::format(ms.acceptance), csv::format(ms.tau), csv::format(ms.n_eff),
             csv::format(static_cast<long>(ms.decay_lag)), csv::format(ms.band_rel_err_p90)});
    }
    w.close();
    return 0;
  });
  return result;
}

}  // namespace hihmc
