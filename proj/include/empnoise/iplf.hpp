#pragma once

#include <vector>

#include "empnoise/gaussian.hpp"
#include "empnoise/measurement_model.hpp"

namespace empnoise {

/// Joint density of z = (x, eps_N): state first, then one standard-normal
/// noise coordinate per measurement component.
struct AugmentedDensity {
  GaussianDensity density;
  Eigen::Index state_dim = 0;
  Eigen::Index noise_dim = 0;
};

/// Affine surrogate g(z) ~ J z + b + e_Omega, e_Omega ~ N(0, Omega).
struct Linearization {
  Matrix J;
  Vector b;
  Matrix Omega;
};

/// What the damping factor limits.
enum class DampingReference {
  /// Step of the noise coordinates relative to the prior mean (zero): the
  /// textbook form of the damped iteration.
  PriorOffset,
  /// Actual displacement of the noise coordinates from the current iterate.
  CurrentIterate,
  /// Smaller alpha of the two; never moves a noise coordinate by more than 1.
  Both,
};

struct IplfConfig {
  int max_iterations = 5;
  double kappa = 0.01;
  double spread = kDefaultSpread;
  bool damping_enabled = true;
  /// Use max(delta) instead of max|delta| when computing alpha.
  bool damping_signed = false;
  DampingReference damping_reference = DampingReference::Both;
  /// Stop when |mu_{i+1} - mu_i| / (1 + |mu_i|) falls below this.
  double convergence_tol = 1e-6;
  /// When the regularized covariance has eigenvalues below this fraction of
  /// the largest (e.g. kappa = 0 after a linear update), they are raised to
  /// it before linearizing, so SLR along collapsed directions tends to the
  /// local derivative instead of failing.
  double eigen_floor = 1e-10;
};

struct UpdateReport {
  GaussianDensity posterior;
  AugmentedDensity augmented_posterior;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> alphas;
  /// Largest |change| of any noise coordinate of the accepted mean, per iteration.
  std::vector<double> noise_steps;
  Matrix S;
  Matrix K;
};

/// Mean (mu_x, 0), covariance blockdiag(P_xx, I_m).
AugmentedDensity build_augmented(const GaussianDensity& prior, Eigen::Index noise_dim);

/// Leading state block of mean and covariance.
GaussianDensity extract_state(const AugmentedDensity& aug);

/// Statistical linear regression of the moments w.r.t. `lin_density`:
/// J = cross^T cov^-1, b = y_hat - J mean, Omega = output - J cov J^T clamped
/// to PSD. Throws NumericalFailure when cov is numerically singular.
Linearization slr(const MomentTriple& moments, const GaussianDensity& lin_density);

/// min(1 / max_j |delta_j|, 1); returns 1 for an all-zero delta. With
/// `signed_max` the literal max_j delta_j is used instead of absolute values.
double damping_alpha(const Vector& delta_noise_mean, bool signed_max = false);

/// Raises eigenvalues below floor_ratio * max eigenvalue to that level;
/// returns the input unchanged when none are below.
GaussianDensity floor_eigenvalues(const GaussianDensity& density, double floor_ratio);

/// Iterated posterior-linearization update on the augmented state.
UpdateReport iterated_update(const GaussianDensity& prior, const MeasurementModel& model, const Vector& y,
                             const IplfConfig& config = {});

}  // namespace empnoise
