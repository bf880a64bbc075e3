#include "empnoise/iplf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "empnoise/error.hpp"

namespace empnoise {

namespace {

// Eigenvalues at or below this fraction of the largest are treated as zero
// when inverting the linearization covariance.
constexpr double kSingularRatio = 1e-13;

void require_finite(const Matrix& m, const char* what, int iteration) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::NumericalFailure,
                std::string("iterated_update: non-finite ") + what + " at iteration " + std::to_string(iteration));
  }
}

}  // namespace

AugmentedDensity build_augmented(const GaussianDensity& prior, Eigen::Index noise_dim) {
  const Eigen::Index d = prior.dim();
  Vector mean = Vector::Zero(d + noise_dim);
  Matrix cov = Matrix::Zero(d + noise_dim, d + noise_dim);
  mean.head(d) = prior.mean;
  cov.topLeftCorner(d, d) = prior.cov;
  cov.bottomRightCorner(noise_dim, noise_dim).setIdentity();
  return {GaussianDensity(std::move(mean), std::move(cov)), d, noise_dim};
}

GaussianDensity extract_state(const AugmentedDensity& aug) {
  const Eigen::Index d = aug.state_dim;
  return GaussianDensity(aug.density.mean.head(d), aug.density.cov.topLeftCorner(d, d));
}

Linearization slr(const MomentTriple& moments, const GaussianDensity& lin_density) {
  const Eigen::Index n = lin_density.dim();
  if (moments.cross.rows() != n || moments.cross.cols() != moments.y_hat.size()) {
    throw Error(ErrorKind::DimensionMismatch, "slr: cross-covariance shape does not match the densities");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(lin_density.cov));
  const Vector& lambda = eig.eigenvalues();
  const double largest = n > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0;
  if (n > 0 && !(lambda.minCoeff() > kSingularRatio * largest)) {
    throw Error(ErrorKind::NumericalFailure,
                "slr: linearization covariance is singular (eigenvalue ratio " +
                    std::to_string(lambda.minCoeff() / largest) + "); increase kappa");
  }
  const Matrix& V = eig.eigenvectors();
  // J = cross^T V diag(1/lambda) V^T, computed in the eigenbasis.
  const Matrix J = (moments.cross.transpose() * V) * lambda.cwiseInverse().asDiagonal() * V.transpose();
  Linearization lin;
  lin.J = J;
  lin.b = moments.y_hat - J * lin_density.mean;
  lin.Omega = clamp_psd(moments.output - J * lin_density.cov * J.transpose());
  return lin;
}

GaussianDensity floor_eigenvalues(const GaussianDensity& density, double floor_ratio) {
  if (density.dim() == 0 || !(floor_ratio > 0.0)) return density;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(density.cov));
  const Vector& lambda = eig.eigenvalues();
  const double floor = floor_ratio * lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() >= floor) return density;
  const Vector raised = lambda.cwiseMax(floor);
  return GaussianDensity(density.mean,
                         symmetrize(eig.eigenvectors() * raised.asDiagonal() * eig.eigenvectors().transpose()));
}

double damping_alpha(const Vector& delta_noise_mean, bool signed_max) {
  if (delta_noise_mean.size() == 0) return 1.0;
  const double largest = signed_max ? delta_noise_mean.maxCoeff() : delta_noise_mean.cwiseAbs().maxCoeff();
  if (!(largest > 1.0)) return 1.0;
  return 1.0 / largest;
}

UpdateReport iterated_update(const GaussianDensity& prior, const MeasurementModel& model, const Vector& y,
                             const IplfConfig& config) {
  const Eigen::Index d = prior.dim();
  const Eigen::Index m = model.meas_dim();
  if (model.state_dim() != d) {
    throw Error(ErrorKind::DimensionMismatch, "iterated_update: prior has dimension " + std::to_string(d) +
                                                  ", measurement model expects " + std::to_string(model.state_dim()));
  }
  if (y.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "iterated_update: measurement has " + std::to_string(y.size()) +
                                                  " components, expected " + std::to_string(m));
  }
  if (!y.allFinite()) throw Error(ErrorKind::InvalidInput, "iterated_update: non-finite measurement");
  if (config.max_iterations < 1) throw Error(ErrorKind::InvalidInput, "iterated_update: max_iterations must be >= 1");

  const AugmentedDensity aug0 = build_augmented(prior, m);
  const Vector& mu0 = aug0.density.mean;
  const Matrix& P0 = aug0.density.cov;
  const VectorFunction h_aug = [&model](const Vector& z) { return model.augmented(z); };

  Vector mu = mu0;
  Matrix P = P0;
  UpdateReport report;

  for (int it = 1; it <= config.max_iterations; ++it) {
    const GaussianDensity lin_density =
        floor_eigenvalues(regularize(GaussianDensity(mu, P), config.kappa), config.eigen_floor);
    const SigmaPointSet points = sigma_points(lin_density, config.spread);
    const MomentTriple moments = propagate_moments(points, h_aug, lin_density);
    Linearization lin;
    try {
      lin = slr(moments, lin_density);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (iteration " + std::to_string(it) + ")");
    }

    Matrix S = symmetrize(lin.J * P0 * lin.J.transpose() + lin.Omega);
    require_finite(S, "innovation covariance", it);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
      S.diagonal().array() += 1e-12 * S.trace();
      llt.compute(S);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure,
                    "iterated_update: innovation covariance not invertible at iteration " + std::to_string(it));
      }
    }
    const Matrix K = llt.solve(lin.J * P0).transpose();
    const Vector delta = K * (y - lin.J * mu0 - lin.b);
    const Vector target = mu0 + delta;

    double alpha = 1.0;
    if (config.damping_enabled && m > 0) {
      if (config.damping_reference != DampingReference::CurrentIterate) {
        alpha = damping_alpha(delta.tail(m), config.damping_signed);
      }
      if (config.damping_reference != DampingReference::PriorOffset) {
        alpha = std::min(alpha, damping_alpha((target - mu).tail(m), config.damping_signed));
      }
    }
    Vector next_mu = (1.0 - alpha) * mu + alpha * target;
    Matrix next_P = symmetrize(P0 - K * S * K.transpose());
    require_finite(next_mu, "mean", it);
    require_finite(next_P, "covariance", it);

    report.alphas.push_back(alpha);
    report.noise_steps.push_back(m > 0 ? (next_mu - mu).tail(m).cwiseAbs().maxCoeff() : 0.0);
    report.S = S;
    report.K = K;
    report.iterations_used = it;

    const double change = (next_mu - mu).norm() / (1.0 + mu.norm());
    mu = std::move(next_mu);
    P = std::move(next_P);
    if (change < config.convergence_tol) {
      report.converged = true;
      break;
    }
  }

  report.augmented_posterior = {GaussianDensity(mu, P), d, m};
  report.posterior = extract_state(report.augmented_posterior);
  return report;
}

}  // namespace empnoise
