#include "hihmc/spd.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hihmc/errors.hpp"

namespace hihmc {

namespace {

constexpr double kSymmetryTolerance = 1e-8;
constexpr double kRepairCeiling = 1e12;

void check_length(const SpdFactor& f, const Eigen::VectorXd& v) {
  if (v.size() != f.dim()) {
    throw DimensionMismatch("vector of length " + std::to_string(v.size()) +
                            " against factor of dimension " + std::to_string(f.dim()));
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", expected square");
  }
  if (a.size() == 0) throw DimensionMismatch("empty matrix");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTolerance * scale)) {
    if (!std::isfinite(scale)) throw NotPositiveDefinite("matrix has non-finite entries");
    throw DimensionMismatch("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  return 0.5 * (a + a.transpose());
}

}  // namespace

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& v) const {
  Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>().solve(v);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

double SpdFactor::inverse_quadratic(const Eigen::VectorXd& v) const {
  return lower_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
}

Eigen::VectorXd SpdFactor::apply_lower(const Eigen::VectorXd& z) const {
  check_length(*this, z);
  return lower_.triangularView<Eigen::Lower>() * z;
}

Eigen::MatrixXd SpdFactor::reconstruct() const {
  return lower_ * lower_.transpose();
}

Eigen::MatrixXd SpdFactor::inverse() const {
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(dim(), dim());
  lower_.triangularView<Eigen::Lower>().solveInPlace(inv);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  return 0.5 * (inv + inv.transpose());
}

SpdFactor factorize(const Eigen::MatrixXd& matrix) {
  const Eigen::MatrixXd a = symmetrized(matrix);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("non-positive pivot in Cholesky factorization");
  }
  Eigen::MatrixXd lower = llt.matrixL();
  // A pivot lost in rounding means the matrix is singular to working precision.
  const double pivot_floor = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() *
                             a.diagonal().cwiseAbs().maxCoeff();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i);
    if (!(d * d > pivot_floor) || !std::isfinite(d)) {
      throw NotPositiveDefinite("degenerate Cholesky pivot at index " + std::to_string(i));
    }
    log_det += std::log(d);
  }
  return SpdFactor(std::move(lower), 2.0 * log_det);
}

Eigen::VectorXd solve(const SpdFactor& factor, const Eigen::VectorXd& v) {
  check_length(factor, v);
  return factor.solve(v);
}

Eigen::VectorXd sample_gaussian(const SpdFactor& factor, RandomStream& rng) {
  return factor.apply_lower(rng.normal_vector(factor.dim()));
}

RepairedFactor repair_to_pd(const Eigen::MatrixXd& matrix, double floor) {
  if (!(floor > 0.0)) throw RepairFailed("repair floor must be positive");
  const Eigen::MatrixXd a = symmetrized(matrix);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  double shift = 0.0;
  while (shift <= kRepairCeiling * floor) {
    try {
      return {factorize(shift == 0.0 ? a : Eigen::MatrixXd(a + shift * eye)), shift};
    } catch (const NotPositiveDefinite&) {
      shift = shift == 0.0 ? floor : 2.0 * shift;
    }
  }
  throw RepairFailed("diagonal shift exceeded " + std::to_string(kRepairCeiling) +
                     " * floor without reaching positive definiteness");
}

SpdFactor identity_factor(Eigen::Index dim, double scale) {
  return factorize(scale * Eigen::MatrixXd::Identity(dim, dim));
}

}  // namespace hihmc
