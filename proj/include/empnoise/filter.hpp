#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "empnoise/gaussian.hpp"
#include "empnoise/iplf.hpp"
#include "empnoise/measurement_model.hpp"

namespace empnoise {

/// x_{t+1} = F x_t + e_Q, e_Q ~ N(0, Q); `prior` describes x before the first measurement.
struct StateSpaceModel {
  Matrix F;
  Matrix Q;
  GaussianDensity prior;

  /// Throws DimensionMismatch / InvalidInput on inconsistent or non-PSD parts.
  void validate() const;
};

/// Measurements (one row per step) with optional ground truth.
struct Track {
  std::vector<double> t;
  std::vector<Vector> y;
  std::vector<Vector> truth;  // empty, or one per step

  std::size_t size() const { return y.size(); }
  bool has_truth() const { return !truth.empty(); }
  void validate() const;
};

GaussianDensity predict(const GaussianDensity& state, const StateSpaceModel& ssm);

struct StepResult {
  GaussianDensity posterior;
  UpdateReport report;
};

/// Predict, then one joint iterated update over all measurement components.
StepResult step(const GaussianDensity& state, const StateSpaceModel& ssm, const MeasurementModel& mm, const Vector& y,
                const IplfConfig& config);

struct RunResult {
  std::vector<GaussianDensity> posteriors;
  std::vector<UpdateReport> reports;
  /// Per state variable, mean over steps of |mean - truth|; empty without truth.
  std::vector<double> mean_abs_error;
  /// Largest noise-coordinate move over all accepted iterations.
  double max_noise_step = 0.0;
};

/// Applies `step` to every row, starting from `ssm.prior`. Numerical
/// failures are rethrown with the step index.
RunResult run(const Track& track, const StateSpaceModel& ssm, const MeasurementModel& mm, const IplfConfig& config);

/// Closed-form Kalman update for y = H x + v, v ~ N(0, R).
GaussianDensity kalman_update(const GaussianDensity& prior, const Matrix& H, const Matrix& R, const Vector& y);

/// Unscented update for y = h(x) + v, v ~ N(0, R), non-iterated.
GaussianDensity ukf_update(const GaussianDensity& prior, const VectorFunction& h, const Matrix& R, const Vector& y,
                           double spread = 1.0);

/// Reference-to-body rotation for pitch theta, yaw psi, roll phi.
Matrix attitude_matrix(double theta, double psi, double phi);

/// Header `t,y1..ym[,x1..xd]`.
Track read_track_csv(std::istream& in);
Track read_track_csv(const std::string& path);

/// Header `t,mean_1..mean_d,var_1..var_d[,abs_err_1..abs_err_d]`.
void write_run_csv(std::ostream& out, const Track& track, const std::vector<GaussianDensity>& posteriors,
                   Eigen::Index state_dim);

struct RunCsv {
  std::vector<double> t;
  std::vector<Vector> mean;
  std::vector<Vector> var;
  std::vector<Vector> abs_err;
};
RunCsv read_run_csv(std::istream& in);

}  // namespace empnoise
