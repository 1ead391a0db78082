#include "hihmc/targets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hihmc/errors.hpp"

namespace hihmc {

double GridLayout::x(Eigen::Index node) const {
  const auto col = node % cols;
  return (static_cast<double>(col) + 0.5) * extent_x_m / cols;
}

double GridLayout::y(Eigen::Index node) const {
  const auto row = node / cols;
  return (static_cast<double>(row) + 0.5) * extent_y_m / rows;
}

Eigen::MatrixXd grid_covariance_matrix(const GridLayout& grid, double lengthscale_m,
                                       double variance, double nugget) {
  if (grid.rows < 1 || grid.cols < 1) throw std::invalid_argument("grid needs rows, cols >= 1");
  if (!(lengthscale_m > 0.0) || !(variance > 0.0) || !(nugget >= 0.0)) {
    throw std::invalid_argument("need lengthscale > 0, variance > 0, nugget >= 0");
  }
  const Eigen::Index n = grid.size();
  const double inv_two_l2 = 1.0 / (2.0 * lengthscale_m * lengthscale_m);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double dx = grid.x(i) - grid.x(j);
      const double dy = grid.y(i) - grid.y(j);
      const double v = variance * std::exp(-(dx * dx + dy * dy) * inv_two_l2);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += nugget;
  }
  return k;
}

SpdFactor build_grid_covariance(const GridLayout& grid, double lengthscale_m, double variance,
                                double nugget) {
  return factorize(grid_covariance_matrix(grid, lengthscale_m, variance, nugget));
}

// --- LogNormalField ---------------------------------------------------------

LogNormalField::LogNormalField(Eigen::VectorXd mean_log, SpdFactor sigma, GridLayout grid,
                               NormalizingConstant constant)
    : mean_log_(std::move(mean_log)),
      sigma_(std::move(sigma)),
      precision_(sigma_.inverse()),
      grid_(grid),
      constant_(constant) {
  if (mean_log_.size() != sigma_.dim()) {
    throw DimensionMismatch("mean of length " + std::to_string(mean_log_.size()) +
                            " against covariance of dimension " + std::to_string(sigma_.dim()));
  }
  if (grid_.size() != mean_log_.size()) {
    throw DimensionMismatch("grid " + std::to_string(grid_.rows) + "x" +
                            std::to_string(grid_.cols) + " does not match dimension " +
                            std::to_string(mean_log_.size()));
  }
  // -1/2 log|Sigma^{-1}| = 1/2 log|Sigma|
  if (constant_ == NormalizingConstant::kIncluded) offset_ = 0.5 * sigma_.log_det();
}

bool LogNormalField::in_domain(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0) || !std::isfinite(theta[i])) return false;
  }
  return true;
}

void LogNormalField::require_domain(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) {
    throw DimensionMismatch("theta of length " + std::to_string(theta.size()) +
                            ", target dimension " + std::to_string(dim()));
  }
  if (!in_domain(theta)) throw OutOfDomain("log-normal target needs every theta_i > 0");
}

Eigen::VectorXd LogNormalField::whitened(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd centred = theta.array().log().matrix() - mean_log_;
  return sigma_.solve(centred);
}

double LogNormalField::potential(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) {
    throw DimensionMismatch("theta of length " + std::to_string(theta.size()) +
                            ", target dimension " + std::to_string(dim()));
  }
  if (!in_domain(theta)) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd log_theta = theta.array().log().matrix();
  const double quad = sigma_.inverse_quadratic(log_theta - mean_log_);
  return 0.5 * quad + log_theta.sum() + offset_;
}

Eigen::VectorXd LogNormalField::gradient(const Eigen::VectorXd& theta) const {
  require_domain(theta);
  const Eigen::VectorXd v = whitened(theta);
  return ((v.array() + 1.0) / theta.array()).matrix();
}

Eigen::MatrixXd LogNormalField::hessian(const Eigen::VectorXd& theta) const {
  require_domain(theta);
  const Eigen::VectorXd v = whitened(theta);
  const Eigen::Index n = dim();
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double value = precision_(i, j) / (theta[i] * theta[j]);
      h(i, j) = value;
      h(j, i) = value;
    }
    h(j, j) = (precision_(j, j) - v[j] - 1.0) / (theta[j] * theta[j]);
  }
  return h;
}

Eigen::VectorXd LogNormalField::map_point() const {
  const Eigen::MatrixXd& l = sigma_.lower();
  const Eigen::VectorXd row_sums =
      l.triangularView<Eigen::Lower>() * (l.transpose() * Eigen::VectorXd::Ones(dim()));
  return (mean_log_ - row_sums).array().exp().matrix();
}

// --- GaussianTarget ---------------------------------------------------------

GaussianTarget::GaussianTarget(Eigen::VectorXd mean, SpdFactor cov)
    : mean_(std::move(mean)), cov_(std::move(cov)), precision_(cov_.inverse()) {
  if (mean_.size() != cov_.dim()) {
    throw DimensionMismatch("mean of length " + std::to_string(mean_.size()) +
                            " against covariance of dimension " + std::to_string(cov_.dim()));
  }
}

bool GaussianTarget::in_domain(const Eigen::VectorXd& theta) const {
  return theta.size() == dim() && theta.allFinite();
}

double GaussianTarget::potential(const Eigen::VectorXd& theta) const {
  if (!in_domain(theta)) return std::numeric_limits<double>::infinity();
  return 0.5 * cov_.inverse_quadratic(theta - mean_);
}

Eigen::VectorXd GaussianTarget::gradient(const Eigen::VectorXd& theta) const {
  if (!in_domain(theta)) throw OutOfDomain("non-finite or mis-sized theta");
  return cov_.solve(theta - mean_);
}

Eigen::MatrixXd GaussianTarget::hessian(const Eigen::VectorXd& theta) const {
  if (!in_domain(theta)) throw OutOfDomain("non-finite or mis-sized theta");
  return precision_;
}

}  // namespace hihmc
