#include "hihmc/samplers.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "hihmc/errors.hpp"

namespace hihmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

int trajectory_length(const SamplerConfig& cfg, RandomStream& rng) {
  if (cfg.jitter_steps && cfg.leapfrog_steps > 1) return rng.uniform_int(1, cfg.leapfrog_steps);
  return cfg.leapfrog_steps;
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kMH:
      return "MH";
    case Method::kHMC:
      return "HMC";
    case Method::kHMapHMC:
      return "HMAP";
    case Method::kHLocalHMC:
      return "HLOCAL";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  const std::string s = upper(name);
  if (s == "MH" || s == "MH-MCMC" || s == "MH_MCMC") return Method::kMH;
  if (s == "HMC") return Method::kHMC;
  if (s == "HMAP" || s == "HMAP_HMC" || s == "H(MAP)-HMC") return Method::kHMapHMC;
  if (s == "HLOCAL" || s == "HLOCAL_HMC" || s == "H(LOCAL)-HMC") return Method::kHLocalHMC;
  return std::nullopt;
}

double reference_step_size(Method method) {
  switch (method) {
    case Method::kMH:
      return 0.01;
    case Method::kHMC:
      return 0.15;
    case Method::kHMapHMC:
    case Method::kHLocalHMC:
      return 0.3;
  }
  return 0.0;
}

void validate(const SamplerConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigMismatch("dt must be positive");
  if (cfg.leapfrog_steps < 1) throw ConfigMismatch("leapfrog_steps must be >= 1");
  if (cfg.n_samples < 1) throw ConfigMismatch("n_samples must be >= 1");
  if (cfg.burn_in < 0) throw ConfigMismatch("burn_in must be >= 0");
}

// --- MH ---------------------------------------------------------------------

Eigen::VectorXd mh_propose(const Eigen::VectorXd& theta, double dt, const Eigen::VectorXd& z) {
  if (z.size() != theta.size()) throw DimensionMismatch("proposal noise has the wrong length");
  return theta + dt * z;
}

Eigen::VectorXd mh_propose(const Eigen::VectorXd& theta, double dt, RandomStream& rng) {
  return mh_propose(theta, dt, rng.normal_vector(theta.size()));
}

double mh_accept_probability(double j_current, double j_proposed, double log_q_ratio) {
  if (j_proposed == kInf) return 0.0;
  return acceptance_probability(j_current - j_proposed + log_q_ratio);
}

bool mh_accept(double j_current, double j_proposed, double log_q_ratio, double u) {
  return u < mh_accept_probability(j_current, j_proposed, log_q_ratio);
}

double mh_log_q_ratio(const Eigen::VectorXd& theta, const Eigen::VectorXd& proposal, double dt) {
  const double forward = -0.5 * ((theta - proposal) / dt).squaredNorm();
  const double backward = -0.5 * ((proposal - theta) / dt).squaredNorm();
  return backward - forward;
}

StepResult mh_step(const Eigen::VectorXd& theta, const TargetModel& target,
                   const SamplerConfig& cfg, RandomStream& rng) {
  const Eigen::VectorXd proposal = mh_propose(theta, cfg.dt, rng);
  const double log_q = mh_log_q_ratio(theta, proposal, cfg.dt);
  assert(log_q == 0.0);
  const double u = rng.uniform();
  StepResult out;
  out.accept_probability =
      mh_accept_probability(target.potential(theta), target.potential(proposal), log_q);
  out.accepted = u < out.accept_probability;
  out.position = out.accepted ? proposal : theta;
  return out;
}

// --- Hamiltonian dynamics ---------------------------------------------------

PhaseState leapfrog(PhaseState state, const TargetModel& target, const SpdFactor& mass,
                    double dt, int steps) {
  if (state.diverged) return state;
  if (!target.in_domain(state.position)) {
    state.diverged = true;
    return state;
  }
  const double half = 0.5 * dt;
  Eigen::VectorXd grad = target.gradient(state.position);
  for (int s = 0; s < steps; ++s) {
    state.momentum -= half * grad;
    state.position += dt * mass.solve(state.momentum);
    if (!target.in_domain(state.position)) {
      state.diverged = true;
      return state;
    }
    grad = target.gradient(state.position);
    if (!grad.allFinite()) {
      state.diverged = true;
      return state;
    }
    state.momentum -= half * grad;
  }
  return state;
}

double hamiltonian(const PhaseState& state, const TargetModel& target, const SpdFactor& mass,
                   bool include_logdet) {
  if (state.diverged || !target.in_domain(state.position)) return kInf;
  double h = target.potential(state.position) + 0.5 * mass.inverse_quadratic(state.momentum);
  if (include_logdet) h += 0.5 * mass.log_det();
  return h;
}

double acceptance_probability(double energy_drop) {
  if (std::isnan(energy_drop)) return 0.0;
  return energy_drop >= 0.0 ? 1.0 : std::exp(energy_drop);
}

StepResult hmc_step(const Eigen::VectorXd& theta, const TargetModel& target, const SpdFactor& mass,
                    const SamplerConfig& cfg, RandomStream& rng) {
  const int steps = trajectory_length(cfg, rng);
  PhaseState start{theta, sample_gaussian(mass, rng), false};
  const PhaseState end = leapfrog(start, target, mass, cfg.dt, steps);
  const double u = rng.uniform();

  double drop = -kInf;
  if (!end.diverged) {
    const double j_drop = target.potential(theta) - target.potential(end.position);
    const double k_drop =
        0.5 * mass.inverse_quadratic(start.momentum) - 0.5 * mass.inverse_quadratic(end.momentum);
    drop = j_drop + k_drop;
  }
  StepResult out;
  out.accept_probability = acceptance_probability(drop);
  out.accepted = u < out.accept_probability;
  out.position = out.accepted ? end.position : theta;
  return out;
}

StepResult hlocal_step(const Eigen::VectorXd& theta, const TargetModel& target, double pd_floor,
                       const SamplerConfig& cfg, RandomStream& rng) {
  const int steps = trajectory_length(cfg, rng);
  const RepairedFactor start_metric = repair_to_pd(target.hessian(theta), pd_floor);
  const SpdFactor& g0 = start_metric.factor;
  PhaseState start{theta, sample_gaussian(g0, rng), false};
  const PhaseState end = leapfrog(start, target, g0, cfg.dt, steps);
  const double u = rng.uniform();

  double drop = -kInf;
  if (!end.diverged) {
    const double j_drop = target.potential(theta) - target.potential(end.position);
    const double k0 = 0.5 * g0.inverse_quadratic(start.momentum);
    double k1 = 0.0;
    double logdet_drop = 0.0;
    if (cfg.local_endpoint == LocalEndpoint::kFrozen) {
      k1 = 0.5 * g0.inverse_quadratic(end.momentum);
    } else {
      const RepairedFactor end_metric = repair_to_pd(target.hessian(end.position), pd_floor);
      k1 = 0.5 * end_metric.factor.inverse_quadratic(end.momentum);
      if (cfg.local_logdet) logdet_drop = 0.5 * (g0.log_det() - end_metric.factor.log_det());
    }
    drop = j_drop + (k0 - k1) + logdet_drop;
  }
  StepResult out;
  out.accept_probability = acceptance_probability(drop);
  out.accepted = u < out.accept_probability;
  out.position = out.accepted ? end.position : theta;
  out.repair_shift = start_metric.shift;
  return out;
}

RepairedFactor hmap_mass(const LogNormalField& target, double pd_floor) {
  return repair_to_pd(target.hessian(target.map_point()), pd_floor);
}

// --- Chains -----------------------------------------------------------------

ChainRecord run_chain(const TargetModel& target, const MassSpec& mass_spec,
                      const SamplerConfig& cfg, const Eigen::VectorXd& init, RandomStream& rng) {
  validate(cfg);
  if (init.size() != target.dim() || !target.in_domain(init)) {
    throw ConfigMismatch("initial point is outside the target domain");
  }

  std::optional<SpdFactor> fixed_mass;
  double pd_floor = 0.0;
  switch (cfg.method) {
    case Method::kMH:
      break;
    case Method::kHMC:
      if (const auto* id = std::get_if<ScaledIdentity>(&mass_spec)) {
        if (!(id->beta > 0.0)) throw ConfigMismatch("ScaledIdentity needs beta > 0");
        fixed_mass = identity_factor(target.dim(), id->beta);
      } else if (const auto* fixed = std::get_if<FixedSpd>(&mass_spec)) {
        fixed_mass = fixed->factor;
      } else {
        throw ConfigMismatch("HMC needs a ScaledIdentity or FixedSpd mass");
      }
      break;
    case Method::kHMapHMC:
      if (const auto* fixed = std::get_if<FixedSpd>(&mass_spec)) {
        fixed_mass = fixed->factor;
      } else {
        throw ConfigMismatch("HMAP needs a FixedSpd mass");
      }
      break;
    case Method::kHLocalHMC:
      if (const auto* local = std::get_if<LocalHessian>(&mass_spec)) {
        if (!(local->floor > 0.0)) throw ConfigMismatch("LocalHessian needs floor > 0");
        pd_floor = local->floor;
      } else {
        throw ConfigMismatch("HLOCAL needs a LocalHessian mass");
      }
      break;
  }
  if (fixed_mass && fixed_mass->dim() != target.dim()) {
    throw ConfigMismatch("mass matrix dimension does not match the target");
  }

  ChainRecord record;
  record.samples.resize(cfg.n_samples, target.dim());
  record.accept_flags.reserve(cfg.n_samples);
  record.potentials.reserve(cfg.n_samples);
  if (cfg.method == Method::kHLocalHMC) record.repair_shifts.reserve(cfg.n_samples);

  Eigen::VectorXd theta = init;
  const long total = static_cast<long>(cfg.burn_in) + cfg.n_samples;
  for (long it = 0; it < total; ++it) {
    StepResult step;
    switch (cfg.method) {
      case Method::kMH:
        step = mh_step(theta, target, cfg, rng);
        break;
      case Method::kHMC:
      case Method::kHMapHMC:
        step = hmc_step(theta, target, *fixed_mass, cfg, rng);
        break;
      case Method::kHLocalHMC:
        step = hlocal_step(theta, target, pd_floor, cfg, rng);
        break;
    }
    theta = std::move(step.position);
    if (it < cfg.burn_in) continue;
    const auto row = static_cast<Eigen::Index>(it - cfg.burn_in);
    record.samples.row(row) = theta.transpose();
    record.accept_flags.push_back(step.accepted ? 1 : 0);
    record.potentials.push_back(target.potential(theta));
    if (cfg.method == Method::kHLocalHMC) record.repair_shifts.push_back(step.repair_shift);
  }
  return record;
}

ChainRecord run_chain(const TargetModel& target, const MassSpec& mass_spec,
                      const SamplerConfig& cfg, const Eigen::VectorXd& init) {
  RandomStream rng(cfg.seed);
  return run_chain(target, mass_spec, cfg, init, rng);
}

}  // namespace hihmc
