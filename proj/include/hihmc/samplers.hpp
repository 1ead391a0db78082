#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hihmc/random.hpp"
#include "hihmc/spd.hpp"
#include "hihmc/targets.hpp"

namespace hihmc {

enum class Method { kMH, kHMC, kHMapHMC, kHLocalHMC };

/// "MH", "HMC", "HMAP", "HLOCAL".
std::string_view method_name(Method method);
/// Accepts the names above case-insensitively, plus "HMAP_HMC"/"HLOCAL_HMC".
std::optional<Method> parse_method(std::string_view name);

/// Step sizes used in the four-method comparison: 0.01, 0.15, 0.3, 0.3.
double reference_step_size(Method method);

/// Mass matrix used by H(local)-HMC at the trajectory end point.
enum class LocalEndpoint {
  /// Keep the start-of-step Hessian G(theta_k) for both ends; the log-det
  /// terms cancel.
  kFrozen,
  /// Re-evaluate G(theta_{k+1}) at the end point and keep the
  /// 1/2 log|G| terms.
  kRecompute,
};

struct SamplerConfig {
  Method method = Method::kHMC;
  double dt = 0.15;
  int leapfrog_steps = 10;
  int n_samples = 1000;
  int burn_in = 0;
  std::uint64_t seed = 0;
  /// Draw L uniformly from {1..leapfrog_steps} every iteration.
  bool jitter_steps = false;
  LocalEndpoint local_endpoint = LocalEndpoint::kFrozen;
  /// Include 1/2 log|G| in the H(local) energies.
  bool local_logdet = true;
};

/// Throws ConfigMismatch on dt <= 0, L < 1, N < 1 or burn_in < 0.
void validate(const SamplerConfig& cfg);

struct ScaledIdentity {
  double beta = 1.0;
};
struct FixedSpd {
  SpdFactor factor;
};
struct LocalHessian {
  double floor = 1e-6;
};
using MassSpec = std::variant<ScaledIdentity, FixedSpd, LocalHessian>;

struct PhaseState {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  /// Set when the trajectory left the target domain; such a state has
  /// infinite energy and is always rejected.
  bool diverged = false;
};

// --- Random-walk Metropolis-Hastings ----------------------------------------

/// theta + dt * z.
Eigen::VectorXd mh_propose(const Eigen::VectorXd& theta, double dt, const Eigen::VectorXd& z);
Eigen::VectorXd mh_propose(const Eigen::VectorXd& theta, double dt, RandomStream& rng);

/// min{1, exp(j_current - j_proposed + log_q_ratio)}; 0 when j_proposed is +inf.
double mh_accept_probability(double j_current, double j_proposed, double log_q_ratio);

/// u < min{1, exp(j_current - j_proposed + log_q_ratio)}.
bool mh_accept(double j_current, double j_proposed, double log_q_ratio, double u);

/// log q(y, theta) - log q(theta, y) for the isotropic Gaussian proposal;
/// identically zero since the proposal is symmetric.
double mh_log_q_ratio(const Eigen::VectorXd& theta, const Eigen::VectorXd& proposal, double dt);

// --- Hamiltonian dynamics ---------------------------------------------------

/// L leapfrog iterations of half kick, drift with M^{-1} p, half kick.
PhaseState leapfrog(PhaseState state, const TargetModel& target, const SpdFactor& mass,
                    double dt, int steps);

/// J(theta) + 1/2 p^T M^{-1} p [+ 1/2 log|M|]; +inf for a diverged or
/// out-of-domain state.
double hamiltonian(const PhaseState& state, const TargetModel& target, const SpdFactor& mass,
                   bool include_logdet);

/// min{1, exp(energy_drop)}, 0 for NaN.
double acceptance_probability(double energy_drop);

struct StepResult {
  Eigen::VectorXd position;
  bool accepted = false;
  double accept_probability = 0.0;
  /// Diagonal shift applied to the local Hessian (H(local) only).
  double repair_shift = 0.0;
};

/// One HMC transition with a constant mass matrix (plain HMC and H(MAP)-HMC).
StepResult hmc_step(const Eigen::VectorXd& theta, const TargetModel& target, const SpdFactor& mass,
                    const SamplerConfig& cfg, RandomStream& rng);

/// One H(local)-HMC transition: the mass is the local Hessian at theta,
/// repaired to positive definite, and held fixed along the trajectory.
StepResult hlocal_step(const Eigen::VectorXd& theta, const TargetModel& target, double pd_floor,
                       const SamplerConfig& cfg, RandomStream& rng);

/// One random-walk MH transition.
StepResult mh_step(const Eigen::VectorXd& theta, const TargetModel& target,
                   const SamplerConfig& cfg, RandomStream& rng);

/// Hessian of the log-normal potential at its mode, repaired if needed
/// (it never is for a valid field).
RepairedFactor hmap_mass(const LogNormalField& target, double pd_floor);

// --- Chains -----------------------------------------------------------------

struct ChainRecord {
  /// n_samples x dim, one retained position per row.
  Eigen::MatrixXd samples;
  std::vector<std::uint8_t> accept_flags;
  std::vector<double> potentials;
  /// Per retained iteration, H(local) only.
  std::vector<double> repair_shifts;
};

/// burn_in + n_samples iterations from init; burn-in is discarded. The result
/// depends only on (target, mass_spec, cfg, init) and the stream state.
/// Throws ConfigMismatch when mass_spec does not fit cfg.method or init is
/// outside the domain, and RepairFailed from H(local).
ChainRecord run_chain(const TargetModel& target, const MassSpec& mass_spec,
                      const SamplerConfig& cfg, const Eigen::VectorXd& init, RandomStream& rng);

/// Same, with a stream seeded from cfg.seed.
ChainRecord run_chain(const TargetModel& target, const MassSpec& mass_spec,
                      const SamplerConfig& cfg, const Eigen::VectorXd& init);

}  // namespace hihmc
