#pragma once

#include <Eigen/Dense>

#include "hihmc/spd.hpp"

namespace hihmc {

/// A target density pi(theta) seen through its potential J = -log pi.
/// Implementations are immutable and evaluations are pure, so one instance
/// can serve several chains at once.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual bool in_domain(const Eigen::VectorXd& theta) const = 0;

  /// J(theta); +infinity outside the domain.
  virtual double potential(const Eigen::VectorXd& theta) const = 0;

  /// dJ/dtheta. Throws OutOfDomain outside the domain.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;

  /// d^2 J/dtheta^2, exactly symmetric. Throws OutOfDomain outside the domain.
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const = 0;
};

/// rows x cols nodes placed at cell centres of an extent_x_m x extent_y_m
/// rectangle, numbered row-major.
struct GridLayout {
  int rows = 1;
  int cols = 1;
  double extent_x_m = 8000.0;
  double extent_y_m = 4000.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(rows) * cols; }
  double x(Eigen::Index node) const;
  double y(Eigen::Index node) const;
};

/// Squared-exponential covariance on a grid:
/// K_ij = variance * exp(-|x_i - x_j|^2 / (2 lengthscale^2)) + nugget * delta_ij.
Eigen::MatrixXd grid_covariance_matrix(const GridLayout& grid, double lengthscale_m,
                                       double variance, double nugget);

/// Factor of grid_covariance_matrix. Throws NotPositiveDefinite when the
/// nugget is too small to keep K numerically positive definite.
SpdFactor build_grid_covariance(const GridLayout& grid, double lengthscale_m, double variance,
                                double nugget);

/// Whether J carries the constant -1/2 log|Sigma^{-1}|. Samplers only consume
/// differences of J, so the choice never changes an acceptance decision.
enum class NormalizingConstant { kDropped, kIncluded };

/// log(theta) ~ N(m, Sigma) on the positive orthant:
///
///   J(theta) = 1/2 |Sigma^{-1/2}(log theta - m)|^2 + sum_i log theta_i [- 1/2 log|Sigma^{-1}|]
///
/// The constant is dropped by default.
class LogNormalField final : public TargetModel {
 public:
  LogNormalField(Eigen::VectorXd mean_log, SpdFactor sigma, GridLayout grid,
                 NormalizingConstant constant = NormalizingConstant::kDropped);

  Eigen::Index dim() const override { return mean_log_.size(); }
  bool in_domain(const Eigen::VectorXd& theta) const override;
  double potential(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override;

  /// exp(m - Sigma 1), the mode of the density.
  Eigen::VectorXd map_point() const;

  const Eigen::VectorXd& mean_log() const { return mean_log_; }
  const SpdFactor& sigma() const { return sigma_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  const GridLayout& grid() const { return grid_; }
  NormalizingConstant constant() const { return constant_; }

 private:
  void require_domain(const Eigen::VectorXd& theta) const;
  // Sigma^{-1}(log theta - m)
  Eigen::VectorXd whitened(const Eigen::VectorXd& theta) const;

  Eigen::VectorXd mean_log_;
  SpdFactor sigma_;
  Eigen::MatrixXd precision_;
  GridLayout grid_;
  NormalizingConstant constant_;
  double offset_ = 0.0;
};

/// N(mean, cov) on the whole space; J = 1/2 (theta-mean)^T cov^{-1} (theta-mean).
class GaussianTarget final : public TargetModel {
 public:
  GaussianTarget(Eigen::VectorXd mean, SpdFactor cov);

  Eigen::Index dim() const override { return mean_.size(); }
  bool in_domain(const Eigen::VectorXd& theta) const override;
  double potential(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override;

  const Eigen::VectorXd& mean() const { return mean_; }
  const SpdFactor& cov() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  SpdFactor cov_;
  Eigen::MatrixXd precision_;
};

inline GaussianTarget gaussian_target(Eigen::VectorXd mean, SpdFactor cov) {
  return GaussianTarget(std::move(mean), std::move(cov));
}

}  // namespace hihmc
