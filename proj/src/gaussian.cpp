#include "empnoise/gaussian.hpp"

#include <cmath>
#include <string>

#include "empnoise/error.hpp"

namespace empnoise {

GaussianDensity::GaussianDensity(Vector mean_in, Matrix cov_in) : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "GaussianDensity: covariance is " + std::to_string(cov.rows()) + "x" +
                                                  std::to_string(cov.cols()) + " for a mean of dimension " +
                                                  std::to_string(mean.size()));
  }
  if (!mean.allFinite() || !cov.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "GaussianDensity: non-finite entries");
  }
  const double scale = cov.cwiseAbs().maxCoeff();
  if (cov.size() > 0 && (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::InvalidInput, "GaussianDensity: covariance is not symmetric");
  }
}

bool is_psd(const Matrix& m, double tol_rel) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  const double trace = std::abs(m.trace());
  return eig.eigenvalues().minCoeff() >= -tol_rel * std::max(trace, 1e-300);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix clamp_psd(const Matrix& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose());
}

GaussianDensity regularize(const GaussianDensity& density, double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorKind::InvalidInput, "regularize: kappa must be a finite non-negative number");
  }
  GaussianDensity out = density;
  out.cov.diagonal() += kappa * density.cov.diagonal();
  return out;
}

SigmaPointSet sigma_points(const GaussianDensity& density, double spread) {
  if (!(spread > 0.0) || !std::isfinite(spread)) {
    throw Error(ErrorKind::InvalidInput, "sigma_points: spread must be positive");
  }
  const Eigen::Index n = density.dim();
  const double dim = static_cast<double>(n);
  SigmaPointSet set;
  set.points.resize(n, 2 * n + 1);
  set.mean_weights.resize(2 * n + 1);
  set.cov_weights.resize(2 * n + 1);
  set.points.col(0) = density.mean;
  if (n == 0) {
    set.mean_weights(0) = 1.0;
    set.cov_weights(0) = 1.0;
    return set;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(density.cov));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "sigma_points: eigendecomposition failed");
  }
  // Columns along eigenvectors: each +/- pair probes one principal axis.
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  if (!root.allFinite()) {
    throw Error(ErrorKind::NumericalFailure, "sigma_points: non-finite covariance square root");
  }

  const double scaled = spread * spread * dim;  // L + lambda
  const double lambda = scaled - dim;
  const double radius = std::sqrt(scaled);
  for (Eigen::Index k = 0; k < n; ++k) {
    set.points.col(1 + k) = density.mean + radius * root.col(k);
    set.points.col(1 + n + k) = density.mean - radius * root.col(k);
  }
  set.mean_weights.setConstant(1.0 / (2.0 * scaled));
  set.cov_weights.setConstant(1.0 / (2.0 * scaled));
  set.mean_weights(0) = lambda / scaled;
  set.cov_weights(0) = lambda / scaled + (1.0 - spread * spread + kCentralCovCorrection);
  return set;
}

MomentTriple propagate_moments(const SigmaPointSet& points, const VectorFunction& g, const GaussianDensity& center) {
  const Eigen::Index count = points.size();
  Vector first = g(points.points.col(0));
  Matrix values(first.size(), count);
  values.col(0) = first;
  for (Eigen::Index i = 1; i < count; ++i) {
    Vector v = g(points.points.col(i));
    if (v.size() != first.size()) {
      throw Error(ErrorKind::DimensionMismatch, "propagate_moments: function output size changed between points");
    }
    values.col(i) = std::move(v);
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!values.col(i).allFinite()) {
      throw Error(ErrorKind::NumericalFailure,
                  "propagate_moments: non-finite function value at sigma point " + std::to_string(i));
    }
  }

  MomentTriple out;
  out.y_hat = values * points.mean_weights;
  const Matrix dy = values.colwise() - out.y_hat;
  const Matrix dx = points.points.colwise() - center.mean;
  out.cross = dx * points.cov_weights.asDiagonal() * dy.transpose();
  out.output = symmetrize(dy * points.cov_weights.asDiagonal() * dy.transpose());
  return out;
}

}  // namespace empnoise
