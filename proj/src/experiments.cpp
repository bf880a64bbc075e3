#include "empnoise/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "empnoise/error.hpp"

namespace empnoise::bench {

using nlohmann::json;

namespace {

const char* damping_reference_name(DampingReference r) {
  switch (r) {
    case DampingReference::PriorOffset: return "prior";
    case DampingReference::CurrentIterate: return "iterate";
    case DampingReference::Both: return "both";
  }
  return "unknown";
}

json iplf_json(const IplfConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"kappa", c.kappa},
          {"spread", c.spread},
          {"damping_enabled", c.damping_enabled},
          {"damping_signed", c.damping_signed},
          {"damping_reference", damping_reference_name(c.damping_reference)},
          {"convergence_tol", c.convergence_tol}};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double draw_scaled_student_t(RandomStream& rng) {
  return std::sqrt(kStudentVariance / kStudentDof) * rng.student_t(kStudentDof);
}

StateSpaceModel student_t_state_model() {
  Matrix F(2, 2);
  F << 1, 1, 0, 1;
  Matrix Q = Matrix::Zero(2, 2);
  Q(1, 1) = 1.0;
  Matrix P0 = Matrix::Zero(2, 2);
  P0(0, 0) = 40.0;
  P0(1, 1) = 4.0;
  return {F, Q, GaussianDensity(Vector::Zero(2), P0)};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidInput, "experiment config: " + msg); };
  if (n_sequences < 1 || n_steps < 1) fail("sequence and step counts must be positive");
  if (sweep_replicates < 1 || sweep_count_iterations < 1) fail("sweep counts must be positive");
  if (iplf.max_iterations < 1) fail("iterations must be positive");
  for (auto n : noise_sample_counts) {
    if (n < kMinSamples) fail("noise sample counts must be at least " + std::to_string(kMinSamples));
  }
  for (auto n : sweep_sample_counts) {
    if (n < kMinSamples) fail("sweep sample counts must be at least " + std::to_string(kMinSamples));
  }
  for (int it : iterations_grid) {
    if (it < 1) fail("iteration grid entries must be positive");
  }
}

std::string ExperimentConfig::to_json() const {
  return json{{"n_sequences", n_sequences},
              {"n_steps", n_steps},
              {"noise_sample_counts", noise_sample_counts},
              {"iplf", iplf_json(iplf)},
              {"seed", seed},
              {"iterations_grid", iterations_grid},
              {"sweep_sample_counts", sweep_sample_counts},
              {"sweep_replicates", sweep_replicates},
              {"sweep_iterations_sample_count", sweep_iterations_sample_count},
              {"sweep_count_iterations", sweep_count_iterations}}
      .dump();
}

std::vector<Track> simulate_student_t_tracks(std::uint64_t seed, int n_sequences, int n_steps) {
  const StateSpaceModel ssm = student_t_state_model();
  std::vector<Track> tracks;
  tracks.reserve(static_cast<std::size_t>(n_sequences));
  for (int s = 0; s < n_sequences; ++s) {
    RandomStream rng(seed, stream_id(kTrackStream, static_cast<std::uint32_t>(s)));
    Vector x(2);
    x << rng.normal(0.0, std::sqrt(40.0)), rng.normal(0.0, 2.0);
    Track track;
    for (int k = 1; k <= n_steps; ++k) {
      x = ssm.F * x;
      x(1) += rng.normal();
      Vector y(1);
      y << x(0) + draw_scaled_student_t(rng);
      track.t.push_back(k);
      track.y.push_back(std::move(y));
      track.truth.push_back(x);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

SampleSet draw_student_t_training(std::uint64_t seed, std::size_t count, std::uint32_t replicate) {
  RandomStream rng(seed, stream_id(kTrainingStream, replicate, static_cast<std::uint32_t>(count)));
  std::vector<double> samples(count);
  for (auto& s : samples) s = draw_scaled_student_t(rng);
  return SampleSet(std::move(samples));
}

std::vector<double> pooled_error(const std::vector<RunResult>& runs) {
  std::vector<double> total;
  double steps = 0.0;
  for (const auto& r : runs) {
    const double n = static_cast<double>(r.posteriors.size());
    if (total.empty()) total.assign(r.mean_abs_error.size(), 0.0);
    for (std::size_t j = 0; j < r.mean_abs_error.size(); ++j) total[j] += r.mean_abs_error[j] * n;
    steps += n;
  }
  for (auto& v : total) v /= steps;
  return total;
}

std::vector<double> kalman_baseline_error(const std::vector<Track>& tracks, const StateSpaceModel& ssm) {
  Matrix H(1, 2);
  H << 1, 0;
  const Matrix R = Matrix::Constant(1, 1, kStudentVariance);
  std::vector<RunResult> runs;
  runs.reserve(tracks.size());
  for (const auto& track : tracks) {
    RunResult r;
    GaussianDensity state = ssm.prior;
    Vector abs_sum = Vector::Zero(2);
    for (std::size_t k = 0; k < track.size(); ++k) {
      state = kalman_update(predict(state, ssm), H, R, track.y[k]);
      abs_sum += (state.mean - track.truth[k]).cwiseAbs();
      r.posteriors.push_back(state);
    }
    const Vector mae = abs_sum / static_cast<double>(track.size());
    r.mean_abs_error.assign(mae.data(), mae.data() + mae.size());
    runs.push_back(std::move(r));
  }
  return pooled_error(runs);
}

ProposedResult proposed_error(const std::vector<Track>& tracks, const StateSpaceModel& ssm, const NoiseModel& model,
                              const IplfConfig& config) {
  Matrix H(1, 2);
  H << 1, 0;
  const MeasurementModel mm = MeasurementModel::affine(H, {model});
  std::vector<RunResult> runs;
  runs.reserve(tracks.size());
  ProposedResult out;
  for (std::size_t s = 0; s < tracks.size(); ++s) {
    try {
      runs.push_back(run(tracks[s], ssm, mm, config));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " in sequence " + std::to_string(s));
    }
    // Reports are not kept; they dominate memory for long sweeps.
    runs.back().reports.clear();
    out.max_noise_step = std::max(out.max_noise_step, runs.back().max_noise_step);
  }
  out.err = pooled_error(runs);
  return out;
}

MetricsReport simulate_student_t(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const StateSpaceModel ssm = student_t_state_model();
  const auto tracks = simulate_student_t_tracks(config.seed, config.n_sequences, config.n_steps);

  MetricsReport report;
  report.seed = config.seed;
  report.config_json = config.to_json();
  report.config_hash = fnv1a(report.config_json);
  report.rows.push_back({"kf", 0, 1, kalman_baseline_error(tracks, ssm), 0.0});
  for (std::size_t n : config.noise_sample_counts) {
    const NoiseModel model = fit(draw_student_t_training(config.seed, n));
    const ProposedResult r = proposed_error(tracks, ssm, model, config.iplf);
    report.rows.push_back({"proposed", n, config.iplf.max_iterations, r.err, r.max_noise_step});
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string MetricsReport::to_json() const {
  json rows_json = json::array();
  const json cfg = json::parse(config_json);
  for (const auto& r : rows) {
    rows_json.push_back({{"algorithm", r.algorithm},
                         {"n_samples", r.n_samples},
                         {"iterations", r.iterations},
                         {"err", r.err},
                         {"max_noise_step", r.max_noise_step},
                         {"seed", seed},
                         {"config", cfg},
                         {"config_hash", fnv1a(config_json)},
                         {"aggregation", "pooled mean over (sequence, step)"}});
  }
  return rows_json.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  const std::size_t n_err = rows.empty() ? 0 : rows.front().err.size();
  out << "algorithm,n_samples,iterations";
  for (std::size_t j = 1; j <= n_err; ++j) out << ",err_" << j;
  out << ",max_noise_step,seed,config_hash\n";
  for (const auto& r : rows) {
    out << r.algorithm << "," << r.n_samples << "," << r.iterations;
    for (double e : r.err) out << "," << fmt17(e);
    out << "," << fmt17(r.max_noise_step) << "," << seed << "," << config_hash << "\n";
  }
  return out.str();
}

std::vector<SweepRow> sweep(const ExperimentConfig& config) {
  config.validate();
  const StateSpaceModel ssm = student_t_state_model();
  const auto tracks = simulate_student_t_tracks(config.seed, config.n_sequences, config.n_steps);
  // The iteration grid runs at the reference count; every count of the
  // sample grid runs at the fixed iteration count.
  std::set<std::size_t> counts(config.sweep_sample_counts.begin(), config.sweep_sample_counts.end());
  counts.insert(config.sweep_iterations_sample_count);
  std::vector<SweepRow> rows;
  for (int rep = 0; rep < config.sweep_replicates; ++rep) {
    for (std::size_t n : counts) {
      std::set<int> iterations;
      if (n == config.sweep_iterations_sample_count) iterations.insert(config.iterations_grid.begin(), config.iterations_grid.end());
      if (std::find(config.sweep_sample_counts.begin(), config.sweep_sample_counts.end(), n) !=
          config.sweep_sample_counts.end()) {
        iterations.insert(config.sweep_count_iterations);
      }
      const NoiseModel model = fit(draw_student_t_training(config.seed, n, static_cast<std::uint32_t>(rep + 1)));
      for (int it : iterations) {
        IplfConfig c = config.iplf;
        c.max_iterations = it;
        const ProposedResult r = proposed_error(tracks, ssm, model, c);
        rows.push_back({it, n, rep, r.err[0], r.err[1], r.max_noise_step});
      }
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "iterations,sample_count,replicate,err_x1,err_x2,max_noise_step\n";
  for (const auto& r : rows) {
    out << r.iterations << "," << r.sample_count << "," << r.replicate << "," << fmt17(r.err_x1) << ","
        << fmt17(r.err_x2) << "," << fmt17(r.max_noise_step) << "\n";
  }
  return out.str();
}

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("iterations,sample_count,replicate,err_x1,err_x2", 0) != 0) {
    throw Error(ErrorKind::Parse, "sweep csv: unexpected header");
  }
  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    SweepRow r;
    char c1, c2, c3, c4, c5;
    std::istringstream fields(line);
    if (!(fields >> r.iterations >> c1 >> r.sample_count >> c2 >> r.replicate >> c3 >> r.err_x1 >> c4 >> r.err_x2 >>
          c5 >> r.max_noise_step)) {
      throw Error(ErrorKind::Parse, "sweep csv: malformed line " + std::to_string(line_no));
    }
    rows.push_back(r);
  }
  return rows;
}

namespace {

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

double csv_number(const std::string& field, const char* what, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Parse, std::string(what) + ": malformed line " + std::to_string(line_no));
}

}  // namespace

MetricsReport metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const auto header = csv_fields(line);
  if (header.size() < 6 || header[0] != "algorithm" || header[header.size() - 3] != "max_noise_step") {
    throw Error(ErrorKind::Parse, "metrics csv: unexpected header");
  }
  const std::size_t n_err = header.size() - 6;
  MetricsReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != header.size()) throw Error(ErrorKind::Parse, "metrics csv: malformed line " + std::to_string(line_no));
    MetricsRow r;
    r.algorithm = f[0];
    r.n_samples = static_cast<std::size_t>(csv_number(f[1], "metrics csv", line_no));
    r.iterations = static_cast<int>(csv_number(f[2], "metrics csv", line_no));
    for (std::size_t j = 0; j < n_err; ++j) r.err.push_back(csv_number(f[3 + j], "metrics csv", line_no));
    r.max_noise_step = csv_number(f[3 + n_err], "metrics csv", line_no);
    report.seed = std::stoull(f[4 + n_err]);
    report.config_hash = std::stoull(f[5 + n_err]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

AttitudeResult attitude_residuals_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (csv_fields(line).size() != 10 || line.rfind("t,theta,psi,phi", 0) != 0) {
    throw Error(ErrorKind::Parse, "attitude residual csv: unexpected header");
  }
  AttitudeResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 10) throw Error(ErrorKind::Parse, "attitude residual csv: malformed line " + std::to_string(line_no));
    Vector v(9);
    for (Eigen::Index j = 0; j < 9; ++j) v(j) = csv_number(f[1 + j], "attitude residual csv", line_no);
    result.t.push_back(csv_number(f[0], "attitude residual csv", line_no));
    result.truth.push_back(v.head(3));
    result.residual_proposed.push_back(v.segment(3, 3));
    result.residual_baseline.push_back(v.tail(3));
  }
  return result;
}

std::vector<double> sweep_mean(const std::vector<SweepRow>& rows, int iterations, std::size_t sample_count) {
  double e1 = 0.0, e2 = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.iterations == iterations && r.sample_count == sample_count) {
      e1 += r.err_x1;
      e2 += r.err_x2;
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::InvalidInput, "sweep_mean: no rows for iterations " + std::to_string(iterations) +
                                             " and sample count " + std::to_string(sample_count));
  }
  return {e1 / count, e2 / count};
}

// Attitude demo ------------------------------------------------------------

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

Vector magnetic_reference(double t) {
  // Field direction swings along the orbit.
  const double w = 2.0 * std::numbers::pi / 90.0;
  Vector b(3);
  b << std::cos(w * t), 0.5 * std::sin(w * t), 0.8 * std::sin(0.5 * w * t + 0.4);
  return b;
}

Vector sun_reference() {
  Vector s(3);
  s << 0.3, 0.8, 0.52;
  return s;
}

Vector attitude_measurement(const Vector& angles, double t) {
  const Matrix A = attitude_matrix(angles(0), angles(1), angles(2));
  Vector y(6);
  y.head(3) = A * magnetic_reference(t);
  y.tail(3) = A * sun_reference();
  return y;
}

std::string AttitudeConfig::to_json() const {
  return json{{"n_steps", n_steps},
              {"seed", seed},
              {"angle_step_sigma", angle_step_sigma},
              {"prior_sigma", prior_sigma},
              {"exact_initial_state", exact_initial_state},
              {"mag_scale", mag_scale},
              {"mag_dof", mag_dof},
              {"outlier_rate", outlier_rate},
              {"outlier_scale", outlier_scale},
              {"sun_sigma", sun_sigma},
              {"training_samples", training_samples},
              {"iplf", iplf_json(iplf)},
              {"ukf_spread", ukf_spread}}
      .dump();
}

namespace {

// Models need a non-degenerate sample set even for noise-free runs.
constexpr double kMinNoiseScale = 1e-6;

double draw_mag_noise(RandomStream& rng, const AttitudeConfig& c, double scale) {
  const double u = rng.uniform();
  const double t = rng.student_t(c.mag_dof);
  const double z = rng.normal();
  if (u < c.outlier_rate) return c.outlier_scale * (scale / std::max(c.mag_scale, kMinNoiseScale)) * z;
  return scale * t;
}

double sample_variance(const SampleSet& s) {
  double mean = 0.0;
  for (double v : s.values()) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s.values()) var += (v - mean) * (v - mean);
  return var / static_cast<double>(s.size() - 1);
}

}  // namespace

AttitudeResult attitude_demo(const AttitudeConfig& c) {
  if (c.n_steps < 0 || c.training_samples < kMinSamples) {
    throw Error(ErrorKind::InvalidInput, "attitude config: invalid step or training sample count");
  }
  const double mag_train_scale = std::max(c.mag_scale, kMinNoiseScale);
  const double sun_train_scale = std::max(c.sun_sigma, kMinNoiseScale);

  RandomStream train_mag(c.seed, stream_id(kAttitudeTrainingStream, 0));
  RandomStream train_sun(c.seed, stream_id(kAttitudeTrainingStream, 1));
  std::vector<double> mag_samples(c.training_samples), sun_samples(c.training_samples);
  for (auto& v : mag_samples) v = draw_mag_noise(train_mag, c, mag_train_scale);
  for (auto& v : sun_samples) v = sun_train_scale * train_sun.normal();
  const SampleSet mag_set(std::move(mag_samples)), sun_set(std::move(sun_samples));
  const NoiseModel mag_model = fit(mag_set);
  const NoiseModel sun_model = fit(sun_set);
  const std::vector<NoiseModel> models{mag_model, mag_model, mag_model, sun_model, sun_model, sun_model};
  Vector r_diag(6);
  r_diag << Vector::Constant(3, sample_variance(mag_set)), Vector::Constant(3, sample_variance(sun_set));
  const Matrix R = r_diag.asDiagonal();

  StateSpaceModel ssm{Matrix::Identity(3, 3), Matrix::Identity(3, 3) * c.angle_step_sigma * c.angle_step_sigma,
                      GaussianDensity(Vector::Zero(3), Matrix::Identity(3, 3) * c.prior_sigma * c.prior_sigma)};

  RandomStream rng(c.seed, stream_id(kAttitudeTrackStream, 0));
  Vector x(3);
  for (Eigen::Index j = 0; j < 3; ++j) x(j) = rng.normal(0.0, c.prior_sigma);
  if (c.exact_initial_state) {
    ssm.prior = GaussianDensity(x, Matrix::Identity(3, 3) * c.exact_prior_sigma * c.exact_prior_sigma);
  }

  AttitudeResult out;
  GaussianDensity proposed = ssm.prior;
  GaussianDensity baseline = ssm.prior;
  double abs_p = 0.0, abs_b = 0.0;
  for (int k = 1; k <= c.n_steps; ++k) {
    const double t = k;
    for (Eigen::Index j = 0; j < 3; ++j) x(j) += rng.normal(0.0, c.angle_step_sigma);
    Vector y = attitude_measurement(x, t);
    for (Eigen::Index j = 0; j < 3; ++j) y(j) += c.mag_scale > 0.0 ? draw_mag_noise(rng, c, c.mag_scale) : 0.0;
    for (Eigen::Index j = 3; j < 6; ++j) y(j) += c.sun_sigma * rng.normal();

    const VectorFunction h = [t](const Vector& angles) { return attitude_measurement(angles, t); };
    const MeasurementModel mm = MeasurementModel::nonlinear(h, 3, models);
    try {
      StepResult r = step(proposed, ssm, mm, y, c.iplf);
      for (double s : r.report.noise_steps) out.max_noise_step = std::max(out.max_noise_step, s);
      proposed = std::move(r.posterior);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at attitude step " + std::to_string(k));
    }
    baseline = ukf_update(predict(baseline, ssm), h, R, y, c.ukf_spread);

    Vector rp(3), rb(3);
    for (Eigen::Index j = 0; j < 3; ++j) {
      rp(j) = wrap_angle(proposed.mean(j) - x(j));
      rb(j) = wrap_angle(baseline.mean(j) - x(j));
    }
    abs_p += rp.cwiseAbs().sum();
    abs_b += rb.cwiseAbs().sum();
    out.t.push_back(t);
    out.truth.push_back(x);
    out.residual_proposed.push_back(rp);
    out.residual_baseline.push_back(rb);
  }
  if (c.n_steps > 0) {
    out.mean_abs_proposed = abs_p / (3.0 * c.n_steps);
    out.mean_abs_baseline = abs_b / (3.0 * c.n_steps);
  }
  return out;
}

std::string AttitudeResult::residuals_csv() const {
  std::ostringstream out;
  out << "t,theta,psi,phi,res_theta_proposed,res_psi_proposed,res_phi_proposed,res_theta_ukf,res_psi_ukf,res_phi_ukf\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << fmt17(t[k]);
    for (Eigen::Index j = 0; j < 3; ++j) out << "," << fmt17(truth[k](j));
    for (Eigen::Index j = 0; j < 3; ++j) out << "," << fmt17(residual_proposed[k](j));
    for (Eigen::Index j = 0; j < 3; ++j) out << "," << fmt17(residual_baseline[k](j));
    out << "\n";
  }
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace empnoise::bench
