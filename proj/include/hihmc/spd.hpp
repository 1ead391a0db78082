#pragma once

#include <Eigen/Dense>

#include "hihmc/random.hpp"

namespace hihmc {

/// Symmetric positive-definite matrix M held as its Cholesky factor
/// M = L * L^T together with log|M|. Immutable once built; safe to share
/// read-only between chains.
class SpdFactor {
 public:
  Eigen::Index dim() const { return lower_.rows(); }
  const Eigen::MatrixXd& lower() const { return lower_; }
  double log_det() const { return log_det_; }

  /// x with M x = v.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

  /// v^T M^{-1} v, computed as |L^{-1} v|^2.
  double inverse_quadratic(const Eigen::VectorXd& v) const;

  /// L z. With z standard normal this is a draw from N(0, M).
  Eigen::VectorXd apply_lower(const Eigen::VectorXd& z) const;

  /// L L^T.
  Eigen::MatrixXd reconstruct() const;

  /// M^{-1} as a dense matrix.
  Eigen::MatrixXd inverse() const;

 private:
  friend SpdFactor factorize(const Eigen::MatrixXd& matrix);
  SpdFactor(Eigen::MatrixXd lower, double log_det)
      : lower_(std::move(lower)), log_det_(log_det) {}

  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
};

/// Cholesky factorization of a symmetric matrix. The input is symmetrized as
/// (A + A^T) / 2 after checking symmetry to 1e-8 relative.
/// Throws DimensionMismatch for non-square or asymmetric input and
/// NotPositiveDefinite when a pivot is non-positive.
SpdFactor factorize(const Eigen::MatrixXd& matrix);

/// Same as SpdFactor::solve, with the dimension check.
Eigen::VectorXd solve(const SpdFactor& factor, const Eigen::VectorXd& v);

/// Draw from N(0, M).
Eigen::VectorXd sample_gaussian(const SpdFactor& factor, RandomStream& rng);

struct RepairedFactor {
  SpdFactor factor;
  /// Diagonal shift lambda that made the factorization succeed.
  double shift = 0.0;
};

/// Factorizes matrix + lambda I for the first lambda in
/// {0, floor, 2 floor, 4 floor, ...} that is positive definite.
/// Throws RepairFailed once lambda would exceed 1e12 * floor.
RepairedFactor repair_to_pd(const Eigen::MatrixXd& matrix, double floor);

SpdFactor identity_factor(Eigen::Index dim, double scale = 1.0);

}  // namespace hihmc
