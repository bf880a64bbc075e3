#pragma once

#include <functional>

#include <Eigen/Dense>

namespace empnoise {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Vector-valued function evaluated at sigma points.
using VectorFunction = std::function<Vector(const Vector&)>;

/// Mean and covariance of a multivariate normal.
///
/// The constructor checks dimensions, finiteness and symmetry (1e-12
/// relative). Positive semi-definiteness is checked on demand with
/// `is_psd`, since it costs an eigendecomposition.
struct GaussianDensity {
  Vector mean;
  Matrix cov;

  GaussianDensity() = default;
  GaussianDensity(Vector mean, Matrix cov);

  Eigen::Index dim() const { return mean.size(); }
};

/// Eigenvalues >= -tol_rel * trace.
bool is_psd(const Matrix& m, double tol_rel = 1e-10);

Matrix symmetrize(const Matrix& m);

/// Symmetric part with negative eigenvalues replaced by zero.
Matrix clamp_psd(const Matrix& m);

/// Scaled unscented sigma points: 2L+1 columns, centre first, then the
/// +/- pairs in column order of the square root.
struct SigmaPointSet {
  Matrix points;
  Vector mean_weights;
  Vector cov_weights;

  Eigen::Index size() const { return points.cols(); }
};

/// Weights of the centre covariance term: 1 - spread^2 + kCentralCovCorrection.
inline constexpr double kCentralCovCorrection = 2.0;
inline constexpr double kDefaultSpread = 0.5;

/// cov + kappa * diag(cov). Throws InvalidInput for negative kappa.
GaussianDensity regularize(const GaussianDensity& density, double kappa);

/// Non-central points lie at Mahalanobis radius spread * sqrt(L). The square
/// root comes from a symmetric eigendecomposition with negative eigenvalues
/// clamped, so singular covariances are accepted.
SigmaPointSet sigma_points(const GaussianDensity& density, double spread = kDefaultSpread);

/// Weighted moments of g over the sigma points, centred at `center.mean`.
struct MomentTriple {
  Vector y_hat;
  /// Cross-covariance E[(x - mean)(g - y_hat)^T], L x m.
  Matrix cross;
  /// E[(g - y_hat)(g - y_hat)^T], m x m.
  Matrix output;
};

MomentTriple propagate_moments(const SigmaPointSet& points, const VectorFunction& g,
                               const GaussianDensity& center);

}  // namespace empnoise
