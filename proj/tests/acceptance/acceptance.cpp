// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here, not read from a config.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hihmc/diagnostics.hpp"
#include "hihmc/experiment.hpp"
#include "hihmc/samplers.hpp"
#include "../test_util.hpp"

namespace fs = std::filesystem;
using namespace hihmc;

namespace {

constexpr double kGradientTol = 1e-5;
constexpr double kHessianTol = 1e-4;
constexpr double kDerivativeSeconds = 30.0;
constexpr double kMapGradientTol = 1e-8;
constexpr double kMapHessianTol = 1e-10;
constexpr double kReversibilityTol = 1e-9;
constexpr double kEnergyRatioLo = 3.5, kEnergyRatioHi = 4.5;
constexpr double kMeanSe = 3.0;
constexpr double kCovRelTol = 0.05;
constexpr double kExactnessSeconds = 120.0;
constexpr double kTauIidLo = 0.8, kTauIidHi = 1.3;
constexpr double kTauAr1RelTol = 0.15;
constexpr double kBandAbsTol = 0.05;
constexpr double kTauFactor = 5.0;
constexpr double kNeffTie = 0.2;
constexpr double kMinAcceptance = 0.5;
constexpr double kDecayFactor = 5.0;
constexpr double kDeskSeconds = 600.0;
constexpr double kBandRelTol = 0.15;
constexpr double kBandCoverage = 0.9;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1
Verdict derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst_g = 0.0, worst_h = 0.0;
  for (Eigen::Index n : {1, 2, 8, 64}) {
    const LogNormalField f = testing::random_field(n, rng);
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd theta = testing::field_point(f, rng);
      worst_g = std::max(worst_g, testing::rel_inf(testing::fd_gradient(f, theta), f.gradient(theta)));
      worst_h = std::max(worst_h, testing::rel_inf(testing::fd_hessian(f, theta), f.hessian(theta)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_g <= kGradientTol && worst_h <= kHessianTol && secs < kDerivativeSeconds,
          "grad rel " + fmt("%.2e", worst_g) + ", hess rel " + fmt("%.2e", worst_h) + ", " +
              fmt("%.1f", secs) + " s"};
}

// 2
Verdict map_point() {
  std::mt19937_64 rng(202);
  double worst_g = 0.0, worst_h = 0.0;
  const Eigen::Index dims[] = {1, 2, 3, 5, 8, 13, 16, 21, 32, 40, 48, 64};
  for (int k = 0; k < 20; ++k) {
    const LogNormalField f = testing::random_field(dims[k % 12], rng);
    const Eigen::VectorXd map = f.map_point();
    worst_g = std::max(worst_g, f.gradient(map).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd d_inv = map.cwiseInverse().asDiagonal();
    worst_h = std::max(worst_h, testing::rel_inf(f.hessian(map), d_inv * f.precision() * d_inv));
  }
  return {worst_g < kMapGradientTol && worst_h < kMapHessianTol,
          "max |grad J| " + fmt("%.2e", worst_g) + ", hess rel " + fmt("%.2e", worst_h)};
}

// 3
Verdict integrator() {
  std::mt19937_64 rng(303);
  RandomStream rs(303);
  Eigen::MatrixXd cov(2, 2);
  cov << 2, 1, 1, 2;
  const GaussianTarget g(Eigen::VectorXd::Zero(2), factorize(cov));
  const LogNormalField f = testing::random_field(8, rng);
  const SpdFactor f_mass = hmap_mass(f, 1e-6).factor;
  const SpdFactor unit = identity_factor(2);

  double worst_rev = 0.0;
  auto reverse = [&](const TargetModel& t, const SpdFactor& mass, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& p, double dt) {
    PhaseState s = leapfrog({theta, p}, t, mass, dt, 25);
    if (s.diverged) return 1.0;
    s.momentum = -s.momentum;
    s = leapfrog(s, t, mass, dt, 25);
    return std::max((s.position - theta).norm() / theta.norm(), (s.momentum + p).norm() / p.norm());
  };
  for (int k = 0; k < 16; ++k) {
    worst_rev = std::max(worst_rev, reverse(g, unit, testing::random_vector(2, rng), sample_gaussian(unit, rs), 0.2));
    worst_rev = std::max(worst_rev, reverse(f, f_mass, testing::field_point(f, rng), sample_gaussian(f_mass, rs), 0.05));
  }

  auto energy_error = [&](PhaseState s, double dt, int steps) {
    const double h0 = hamiltonian(s, g, unit, false);
    double worst = 0.0;
    for (int i = 0; i < steps; ++i) {
      s = leapfrog(s, g, unit, dt, 1);
      worst = std::max(worst, std::abs(hamiltonian(s, g, unit, false) - h0));
    }
    return worst;
  };
  double coarse = 0.0, fine = 0.0;
  for (int k = 0; k < 32; ++k) {
    const PhaseState s{testing::random_vector(2, rng), sample_gaussian(unit, rs)};
    coarse += energy_error(s, 0.1, 20);
    fine += energy_error(s, 0.05, 40);
  }
  const double ratio = coarse / fine;
  return {worst_rev <= kReversibilityTol && ratio >= kEnergyRatioLo && ratio <= kEnergyRatioHi,
          "reversal err " + fmt("%.2e", worst_rev) + ", energy ratio " + fmt("%.3f", ratio)};
}

struct MomentCheck {
  double worst_mean_se = 0.0;
  double worst_cov_rel = 0.0;
};

// Mean in units of the tau-corrected standard error (paired convention) and
// relative covariance error of a sample matrix.
MomentCheck moments(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd* cov) {
  MomentCheck out;
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - xbar;
  const Eigen::MatrixXd s = centred.transpose() * centred / (x.rows() - 1.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double tau = correlation_time(x.col(j), {TauConvention::kPaired}).tau;
    const double se = std::sqrt(s(j, j) * tau / x.rows());
    out.worst_mean_se = std::max(out.worst_mean_se, std::abs(xbar[j] - mean[j]) / se);
  }
  if (cov) {
    out.worst_cov_rel = ((s - *cov).array() / cov->array().abs()).abs().maxCoeff();
  }
  return out;
}

// 4
Verdict exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd cov(2, 2);
  cov << 2, 1, 1, 2;
  const GaussianTarget g(Eigen::VectorXd::Zero(2), factorize(cov));
  const SpdFactor precision = factorize(g.hessian(g.mean()));
  Verdict v;
  for (Method m : {Method::kMH, Method::kHMC, Method::kHMapHMC, Method::kHLocalHMC}) {
    SamplerConfig cfg;
    cfg.method = m;
    cfg.n_samples = 50000;
    cfg.burn_in = 500;
    cfg.seed = 404;
    cfg.leapfrog_steps = 10;
    // Random path lengths avoid periodic orbits on a quadratic potential.
    cfg.jitter_steps = true;
    cfg.dt = m == Method::kMH ? 1.5 : 0.25;
    MassSpec mass = ScaledIdentity{};
    if (m == Method::kHMapHMC) mass = FixedSpd{precision};
    if (m == Method::kHLocalHMC) mass = LocalHessian{1e-6};
    const ChainRecord r = run_chain(g, mass, cfg, g.mean());
    const MomentCheck mc = moments(r.samples, g.mean(), &cov);
    const bool ok = mc.worst_mean_se <= kMeanSe && mc.worst_cov_rel <= kCovRelTol;
    v.pass = v.pass && ok;
    v.detail += std::string(method_name(m)) + " mean " + fmt("%.2f", mc.worst_mean_se) + " SE cov " +
                fmt("%.3f", mc.worst_cov_rel) + "; ";
  }
  const double secs = seconds_since(t0);
  v.pass = v.pass && secs < kExactnessSeconds;
  v.detail += fmt("%.1f s", secs);
  return v;
}

// 5
Verdict lognormal_marginals() {
  TargetSettings t;
  t.grid = GridLayout{2, 4, 8000.0, 4000.0};
  t.variance = 0.25;
  t.lengthscale_m = 2000.0;
  t.nugget = 1e-4;
  const LogNormalField f = build_target(t);
  SamplerConfig cfg;
  cfg.method = Method::kHMapHMC;
  cfg.dt = 0.3;
  cfg.n_samples = 50000;
  cfg.burn_in = 500;
  cfg.seed = 505;
  cfg.jitter_steps = true;
  const ChainRecord r = run_chain(f, FixedSpd{hmap_mass(f, 1e-6).factor}, cfg, f.map_point());
  const Eigen::MatrixXd log_theta = r.samples.array().log().matrix();
  const MomentCheck mc = moments(log_theta, f.mean_log(), nullptr);
  return {mc.worst_mean_se <= kMeanSe,
          "max |mean log theta - m| " + fmt("%.2f", mc.worst_mean_se) + " SE, acceptance " +
              fmt("%.3f", acceptance_rate(r.accept_flags))};
}

// 6
Verdict constant_hessian() {
  std::mt19937_64 rng(606);
  const GaussianTarget g(testing::random_vector(4, rng), factorize(testing::random_spd(4, rng)));
  const SpdFactor precision = factorize(g.hessian(g.mean()));
  SamplerConfig cfg;
  cfg.dt = 0.4;
  cfg.n_samples = 5000;
  cfg.seed = 606;
  cfg.method = Method::kHLocalHMC;
  const ChainRecord local = run_chain(g, LocalHessian{1e-6}, cfg, g.mean());
  cfg.method = Method::kHMC;
  const ChainRecord fixed = run_chain(g, FixedSpd{precision}, cfg, g.mean());
  const bool same = local.accept_flags == fixed.accept_flags;
  long rejected = std::count(fixed.accept_flags.begin(), fixed.accept_flags.end(), 0);
  return {same, std::string(same ? "identical" : "different") + " accept sequences over 5000 steps (" +
                    std::to_string(rejected) + " rejections)"};
}

// 7
Verdict diagnostics_oracles() {
  std::mt19937_64 rng(707);
  std::normal_distribution<double> z;
  const int n = 100000;
  Eigen::VectorXd iid(n), ar(n);
  for (int i = 0; i < n; ++i) iid[i] = z(rng);
  const double phi = 0.9;
  ar[0] = z(rng) / std::sqrt(1 - phi * phi);
  for (int i = 1; i < n; ++i) ar[i] = phi * ar[i - 1] + z(rng);

  const double tau_iid = correlation_time(iid).tau;
  const double tau_ar = correlation_time(ar).tau;
  const double tau_ar_exact = 1.0 + phi / (1.0 - phi);
  const CredibleBand band = credible_band(iid, 0.95);
  const bool ok = tau_iid >= kTauIidLo && tau_iid <= kTauIidHi &&
                  std::abs(tau_ar - tau_ar_exact) <= kTauAr1RelTol * tau_ar_exact &&
                  std::abs(band.lower[0] + 1.96) <= kBandAbsTol &&
                  std::abs(band.upper[0] - 1.96) <= kBandAbsTol;
  return {ok, "tau iid " + fmt("%.3f", tau_iid) + ", tau AR(1) " + fmt("%.2f", tau_ar) + " vs 10, band [" +
                  fmt("%.3f", band.lower[0]) + ", " + fmt("%.3f", band.upper[0]) + "]"};
}

const MethodSummary& find(const ExperimentResult& r, Method m) {
  for (const auto& ms : r.methods) {
    if (ms.method == m) return ms;
  }
  throw std::runtime_error("method missing from result");
}

// 8
Verdict desk_table(const ExperimentResult& r, double secs) {
  const MethodSummary& mh = find(r, Method::kMH);
  const MethodSummary& hmc = find(r, Method::kHMC);
  const MethodSummary& hmap = find(r, Method::kHMapHMC);
  const MethodSummary& hloc = find(r, Method::kHLocalHMC);

  const double slow_tau = std::min(mh.tau, hmc.tau);
  const bool tau_ok = kTauFactor * std::max(hmap.tau, hloc.tau) <= slow_tau;
  const bool neff_ok = hloc.n_eff >= (1.0 - kNeffTie) * hmap.n_eff && hmap.n_eff > hmc.n_eff &&
                       hmc.n_eff > mh.n_eff;
  bool acc_ok = true;
  for (const auto* ms : {&mh, &hmc, &hmap, &hloc}) acc_ok = acc_ok && ms->acceptance >= kMinAcceptance;
  // A decay lag of 0 means |rho| never fell below the threshold within the
  // emitted lags; count it as one past the last lag.
  auto lag = [](const MethodSummary& ms) {
    return ms.decay_lag > 0 ? ms.decay_lag : static_cast<int>(ms.rho.at(0).size()) + 1;
  };
  const bool decay_ok = hmap.decay_lag > 0 && hloc.decay_lag > 0 &&
                        kDecayFactor * std::max(lag(hmap), lag(hloc)) <= std::min(lag(mh), lag(hmc));
  std::string d;
  for (const auto* ms : {&mh, &hmc, &hmap, &hloc}) {
    d += std::string(method_name(ms->method)) + " tau " + fmt("%.1f", ms->tau) + " neff " +
         fmt("%.0f", ms->n_eff) + " acc " + fmt("%.2f", ms->acceptance) + " lag " +
         std::to_string(lag(*ms)) + "; ";
  }
  d += fmt("%.1f s", secs);
  return {tau_ok && neff_ok && acc_ok && decay_ok && secs < kDeskSeconds, d};
}

// 9
Verdict desk_band(const ExperimentResult& r) {
  const MethodSummary& hmap = find(r, Method::kHMapHMC);
  const Eigen::Index n = r.exact.lower.size();
  int within = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = std::abs(hmap.band.lower[i] - r.exact.lower[i]) / r.exact.lower[i];
    const double hi = std::abs(hmap.band.upper[i] - r.exact.upper[i]) / r.exact.upper[i];
    if (std::max(lo, hi) <= kBandRelTol) ++within;
  }
  const double frac = static_cast<double>(within) / static_cast<double>(n);
  return {frac >= kBandCoverage, std::to_string(within) + "/" + std::to_string(n) +
                                     " coordinates within 15%, p90 rel err " +
                                     fmt("%.4f", hmap.band_rel_err_p90)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10
Verdict determinism(const fs::path& a, const fs::path& b) {
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      return {false, entry.path().filename().string() + " differs"};
    }
    ++files;
  }
  int count_b = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(b)) ++count_b;
  return {files > 0 && files == count_b, std::to_string(files) + " CSV files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string out = "acceptance_out";
  app.add_option("--out", out, "Scratch directory for the desk-scale runs");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "derivatives vs finite differences", derivatives);
  report(2, "MAP point and Hessian", map_point);
  report(3, "leapfrog reversibility and order", integrator);
  report(4, "sampler exactness on 2D Gaussian", exactness);
  report(5, "log-normal marginals", lognormal_marginals);
  report(6, "constant-Hessian reduction", constant_hessian);
  report(7, "diagnostics oracles", diagnostics_oracles);

  RunConfig desk;  // defaults are the desk-scale experiment
  desk.run.output_dir = fs::path(out) / "desk_a";
  ExperimentResult result;
  double desk_secs = 0.0;
  std::string desk_error;
  try {
    fs::remove_all(desk.run.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    result = run_experiment(desk);
    desk_secs = seconds_since(t0);
  } catch (const std::exception& e) {
    desk_error = e.what();
  }
  auto need_desk = [&](const std::function<Verdict()>& check) {
    return [&, check]() -> Verdict {
      if (!desk_error.empty()) return {false, "desk run failed: " + desk_error};
      return check();
    };
  };
  report(8, "desk-scale method comparison", need_desk([&] { return desk_table(result, desk_secs); }));
  report(9, "desk-scale credible band", need_desk([&] { return desk_band(result); }));
  report(10, "rerun determinism", need_desk([&] {
           RunConfig again = desk;
           again.run.output_dir = fs::path(out) / "desk_b";
           again.run.threads = 1;
           fs::remove_all(again.run.output_dir);
           run_experiment(again);
           return determinism(desk.run.output_dir, again.run.output_dir);
         }));

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
