#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "empnoise/filter.hpp"
#include "empnoise/iplf.hpp"
#include "empnoise/noise_model.hpp"
#include "empnoise/random.hpp"

namespace empnoise::bench {

/// Purpose tags for random streams.
enum StreamPurpose : std::uint32_t {
  kTrackStream = 1,
  kTrainingStream = 2,
  kAttitudeTrackStream = 3,
  kAttitudeTrainingStream = 4,
};

// Student-t scenario: constant-velocity state, first component observed.
inline constexpr int kStudentDof = 3;
inline constexpr double kStudentVariance = 100.0;

/// sqrt(100/3) * t_3, variance 100.
double draw_scaled_student_t(RandomStream& rng);

StateSpaceModel student_t_state_model();

struct ExperimentConfig {
  int n_sequences = 100;
  int n_steps = 50;
  std::vector<std::size_t> noise_sample_counts{1000, 100000};
  IplfConfig iplf{};
  std::uint64_t seed = 0;

  // Sweep grids: iterations at a fixed sample count, sample counts at a
  // fixed iteration count, each over independent training sets.
  std::vector<int> iterations_grid{1, 2, 3, 4, 5, 10};
  std::vector<std::size_t> sweep_sample_counts{30, 100, 300, 1000, 10000, 100000};
  int sweep_replicates = 10;
  std::size_t sweep_iterations_sample_count = 1000;
  int sweep_count_iterations = 5;

  void validate() const;
  std::string to_json() const;
};

/// Simulated sequences; ground truth included. Stream (kTrackStream, sequence).
std::vector<Track> simulate_student_t_tracks(std::uint64_t seed, int n_sequences, int n_steps);

/// Fresh training samples of the scaled Student-t noise.
SampleSet draw_student_t_training(std::uint64_t seed, std::size_t count, std::uint32_t replicate = 0);

struct MetricsRow {
  std::string algorithm;
  std::size_t n_samples = 0;  // 0 for the Gaussian baseline
  int iterations = 0;
  std::vector<double> err;
  double max_noise_step = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::uint64_t seed = 0;
  std::string config_json;
  std::uint64_t config_hash = 0;
  /// Not written to the metrics files so that they stay byte-reproducible.
  double wall_time_s = 0.0;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Rows, seed and config hash of a `MetricsReport::to_csv` document.
MetricsReport metrics_from_csv(const std::string& text);

/// Pooled mean absolute error over all (sequence, step) pairs.
std::vector<double> pooled_error(const std::vector<RunResult>& runs);

/// Linear Kalman filter with R = 100 on each track.
std::vector<double> kalman_baseline_error(const std::vector<Track>& tracks, const StateSpaceModel& ssm);

struct ProposedResult {
  std::vector<double> err;
  double max_noise_step = 0.0;
};

ProposedResult proposed_error(const std::vector<Track>& tracks, const StateSpaceModel& ssm, const NoiseModel& model,
                              const IplfConfig& config);

/// KF baseline plus the proposed filter for every configured sample count.
MetricsReport simulate_student_t(const ExperimentConfig& config);

struct SweepRow {
  int iterations = 0;
  std::size_t sample_count = 0;
  int replicate = 0;
  double err_x1 = 0.0;
  double err_x2 = 0.0;
  double max_noise_step = 0.0;
};

std::vector<SweepRow> sweep(const ExperimentConfig& config);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

/// Average over replicates of the rows matching (iterations, sample_count).
std::vector<double> sweep_mean(const std::vector<SweepRow>& rows, int iterations, std::size_t sample_count);

struct AttitudeConfig {
  int n_steps = 100;
  std::uint64_t seed = 0;
  /// Random-walk standard deviation of each angle per step [rad].
  double angle_step_sigma = 0.02;
  /// Initial state spread around the (zero) prior mean [rad].
  double prior_sigma = 0.3;
  /// Start the filter at the true initial state with this prior sigma instead.
  bool exact_initial_state = false;
  double exact_prior_sigma = 1e-3;
  /// Magnetometer noise: scale * t_dof, replaced by an outlier of
  /// outlier_scale * N(0,1) with probability outlier_rate.
  double mag_scale = 0.05;
  int mag_dof = 3;
  double outlier_rate = 0.02;
  double outlier_scale = 0.5;
  double sun_sigma = 0.05;
  std::size_t training_samples = 2000;
  IplfConfig iplf{};
  /// Sigma-point spread of the Gaussian-assumption unscented baseline.
  double ukf_spread = 1.0;

  std::string to_json() const;
};

struct AttitudeResult {
  std::vector<double> t;
  std::vector<Vector> truth;
  std::vector<Vector> residual_proposed;  // estimate - truth, wrapped to (-pi, pi]
  std::vector<Vector> residual_baseline;
  double mean_abs_proposed = 0.0;
  double mean_abs_baseline = 0.0;
  double max_noise_step = 0.0;

  std::string residuals_csv() const;
};

/// Time series of an `AttitudeResult::residuals_csv` document.
AttitudeResult attitude_residuals_from_csv(const std::string& text);

/// Reference vectors (magnetic model, sun) in the reference frame at step t.
Vector magnetic_reference(double t);
Vector sun_reference();

/// Stacked body-frame predictions [A(x) b_ref(t); A(x) s_ref].
Vector attitude_measurement(const Vector& angles, double t);

AttitudeResult attitude_demo(const AttitudeConfig& config);

/// Wraps to (-pi, pi].
double wrap_angle(double a);

/// FNV-1a, used for the config hash in reports.
std::uint64_t fnv1a(const std::string& text);

}  // namespace empnoise::bench
