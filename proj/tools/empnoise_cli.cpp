// Command-line front end: fit and evaluate noise models, run the Student-t
// experiments, filter user tracks, and run the attitude demo.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "empnoise/error.hpp"
#include "empnoise/experiments.hpp"
#include "empnoise/filter.hpp"
#include "empnoise/noise_model.hpp"

namespace fs = std::filesystem;
using namespace empnoise;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int iterations = 5;
  double kappa = 0.01;
  double spread = kDefaultSpread;
  std::string out_dir = ".";
  std::string format = "csv";
};

IplfConfig iplf_config(const GlobalOptions& g) {
  IplfConfig c;
  c.max_iterations = g.iterations;
  c.kappa = g.kappa;
  c.spread = g.spread;
  return c;
}

fs::path out_path(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::Parse, std::string("model config: missing \"") + key + "\"");
  const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
  const auto cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::Parse, std::string("model config: ragged matrix \"") + key + "\"");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void print_knot_table(const NoiseModel& model) {
  std::cout.precision(17);
  std::cout << "knot,value,slope\n";
  for (std::size_t i = 0; i < model.knot_count(); ++i) {
    std::cout << model.knots()[i] << "," << model.values()[i] << "," << model.slopes()[i] << "\n";
  }
}

int cmd_fit(const GlobalOptions& g, const std::string& samples_path, std::string model_path) {
  const NoiseModel model = fit(read_samples_csv(samples_path));
  if (model_path.empty()) {
    model_path = out_path(g, fs::path(samples_path).stem().string() + ".noise.json").string();
  }
  save_model(model, model_path);
  std::cout << "# " << model.sample_count() << " samples, " << model.knot_count() << " knots -> " << model_path << "\n";
  print_knot_table(model);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::vector<double>& values, const std::vector<double>& grid) {
  const NoiseModel model = load_model(model_path);
  std::vector<double> points = values;
  if (!grid.empty()) {
    if (grid.size() != 3 || grid[2] < 1) throw Error(ErrorKind::InvalidInput, "--grid expects FROM TO COUNT");
    const auto count = static_cast<int>(grid[2]);
    for (int i = 0; i < count; ++i) {
      points.push_back(count == 1 ? grid[0] : grid[0] + (grid[1] - grid[0]) * i / (count - 1));
    }
  }
  std::cout << "s,f\n";
  std::cout.precision(17);
  for (double s : points) std::cout << s << "," << eval(model, s) << "\n";
  return 0;
}

int cmd_simulate(const GlobalOptions& g, bench::ExperimentConfig config) {
  config.seed = g.seed;
  config.iplf = iplf_config(g);
  const auto report = bench::simulate_student_t(config);
  const bool json = g.format == "json";
  const auto path = out_path(g, json ? "student_t_metrics.json" : "student_t_metrics.csv");
  write_file(path, json ? report.to_json() : report.to_csv());
  std::cout << report.to_csv();
  std::cout << "# wall time " << report.wall_time_s << " s -> " << path.string() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOptions& g, bench::ExperimentConfig config) {
  config.seed = g.seed;
  config.iplf = iplf_config(g);
  const auto rows = bench::sweep(config);
  const auto path = out_path(g, "sweep.csv");
  write_file(path, bench::sweep_to_csv(rows));
  std::cout << "iterations,sample_count,mean_err_x1,mean_err_x2\n";
  for (int it : config.iterations_grid) {
    const auto m = bench::sweep_mean(rows, it, config.sweep_iterations_sample_count);
    std::cout << it << "," << config.sweep_iterations_sample_count << "," << m[0] << "," << m[1] << "\n";
  }
  for (std::size_t n : config.sweep_sample_counts) {
    const auto m = bench::sweep_mean(rows, config.sweep_count_iterations, n);
    std::cout << config.sweep_count_iterations << "," << n << "," << m[0] << "," << m[1] << "\n";
  }
  std::cout << "# -> " << path.string() << "\n";
  return 0;
}

int cmd_run_track(const GlobalOptions& g, const std::string& track_path, const std::string& ssm_path,
                  const std::vector<std::string>& noise_paths, std::string output) {
  std::ifstream ssm_in(ssm_path);
  if (!ssm_in) throw Error(ErrorKind::Io, "cannot open model config " + ssm_path);
  nlohmann::json j;
  try {
    ssm_in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model config: ") + e.what());
  }
  StateSpaceModel ssm;
  Matrix H;
  Vector offset;
  try {
    ssm.F = matrix_from_json(j, "F");
    ssm.Q = matrix_from_json(j, "Q");
    ssm.prior = GaussianDensity(vector_from_json(j, "prior_mean"), matrix_from_json(j, "prior_cov"));
    H = matrix_from_json(j, "H");
    offset = j.contains("offset") ? vector_from_json(j, "offset") : Vector::Zero(H.rows());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model config: ") + e.what());
  }
  ssm.validate();
  if (H.cols() != ssm.prior.dim()) throw Error(ErrorKind::DimensionMismatch, "model config: H columns do not match the state");

  std::vector<NoiseModel> models;
  for (const auto& p : noise_paths) models.push_back(load_model(p));
  const MeasurementModel mm = MeasurementModel::affine(H, offset, std::move(models));

  const Track track = read_track_csv(track_path);
  if (!track.y.empty() && track.y.front().size() != mm.meas_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "track has " + std::to_string(track.y.front().size()) +
                                                  " measurement columns but " + std::to_string(mm.meas_dim()) +
                                                  " noise models were given");
  }
  if (track.has_truth() && track.truth.front().size() != ssm.prior.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "track ground truth does not match the state dimension");
  }
  const RunResult result = run(track, ssm, mm, iplf_config(g));
  if (output.empty()) output = out_path(g, fs::path(track_path).stem().string() + ".filtered.csv").string();
  std::ofstream out(output);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + output);
  write_run_csv(out, track, result.posteriors, ssm.prior.dim());
  std::cout << "# " << track.size() << " steps -> " << output << "\n";
  for (std::size_t j2 = 0; j2 < result.mean_abs_error.size(); ++j2) {
    std::cout << "mean_abs_err_" << j2 + 1 << "," << result.mean_abs_error[j2] << "\n";
  }
  return 0;
}

int cmd_attitude(const GlobalOptions& g, bench::AttitudeConfig config) {
  config.seed = g.seed;
  config.iplf = iplf_config(g);
  const auto result = bench::attitude_demo(config);
  const auto path = out_path(g, "attitude_residuals.csv");
  write_file(path, result.residuals_csv());
  nlohmann::json rows = nlohmann::json::array();
  rows.push_back({{"algorithm", "proposed"}, {"err", {result.mean_abs_proposed}}});
  rows.push_back({{"algorithm", "ukf"}, {"err", {result.mean_abs_baseline}}});
  for (auto& r : rows) {
    r["n_samples"] = config.training_samples;
    r["iterations"] = config.iplf.max_iterations;
    r["seed"] = config.seed;
    r["config"] = nlohmann::json::parse(config.to_json());
  }
  if (g.format == "json") {
    write_file(out_path(g, "attitude_metrics.json"), rows.dump(2) + "\n");
  } else {
    std::ostringstream csv;
    csv << "algorithm,n_samples,iterations,err_1,seed\n";
    csv.precision(17);
    csv << "proposed," << config.training_samples << "," << config.iplf.max_iterations << ","
        << result.mean_abs_proposed << "," << config.seed << "\n";
    csv << "ukf," << config.training_samples << "," << config.iplf.max_iterations << "," << result.mean_abs_baseline
        << "," << config.seed << "\n";
    write_file(out_path(g, "attitude_metrics.csv"), csv.str());
  }
  std::cout << "algorithm,mean_abs_angle_residual\n";
  std::cout << "proposed," << result.mean_abs_proposed << "\nukf," << result.mean_abs_baseline << "\n";
  std::cout << "# -> " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman filtering with empirically fitted non-Gaussian measurement noise"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master random seed");
  app.add_option("--iterations", g.iterations, "Maximum filter iterations per update")->check(CLI::PositiveNumber);
  app.add_option("--kappa", g.kappa, "Covariance regularization for linearization")->check(CLI::NonNegativeNumber);
  app.add_option("--spread", g.spread, "Sigma-point spread")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--format", g.format, "Metrics format")->check(CLI::IsMember({"csv", "json"}));

  std::string samples_path, model_out;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a noise model from a CSV of error samples");
  fit_cmd->add_option("samples", samples_path, "CSV, one error value per line")->required();
  fit_cmd->add_option("-o,--model", model_out, "Output model path (default: OUT/<stem>.noise.json)");

  std::string model_path;
  std::vector<double> eval_values, eval_grid;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a noise model at given sigma positions");
  eval_cmd->add_option("model", model_path, "Model file")->required();
  eval_cmd->add_option("s", eval_values, "Sigma positions");
  eval_cmd->add_option("--grid", eval_grid, "FROM TO COUNT evenly spaced positions")->expected(3);

  bench::ExperimentConfig experiment;
  auto add_experiment_options = [&](CLI::App* cmd) {
    cmd->add_option("--sequences", experiment.n_sequences, "Simulated sequences")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", experiment.n_steps, "Time steps per sequence")->check(CLI::PositiveNumber);
  };
  auto* sim_cmd = app.add_subcommand("simulate-student-t", "KF baseline vs proposed filter on Student-t noise");
  add_experiment_options(sim_cmd);
  sim_cmd->add_option("--samples", experiment.noise_sample_counts, "Training sample counts")->delimiter(',');

  auto* sweep_cmd = app.add_subcommand("sweep", "Error versus iterations and versus training sample count");
  add_experiment_options(sweep_cmd);
  sweep_cmd->add_option("--iteration-grid", experiment.iterations_grid)->delimiter(',');
  sweep_cmd->add_option("--sample-grid", experiment.sweep_sample_counts)->delimiter(',');
  sweep_cmd->add_option("--replicates", experiment.sweep_replicates)->check(CLI::PositiveNumber);

  std::string track_path, ssm_path, track_out;
  std::vector<std::string> noise_paths;
  auto* track_cmd = app.add_subcommand("run-track", "Filter a measurement track with fitted noise models");
  track_cmd->add_option("track", track_path, "Track CSV: t,y1..ym[,x1..xd]")->required();
  track_cmd->add_option("--model", ssm_path, "JSON with F, Q, prior_mean, prior_cov, H[, offset]")->required();
  track_cmd->add_option("--noise", noise_paths, "One .noise.json per measurement component")->required();
  track_cmd->add_option("-o,--output", track_out, "Output CSV (default: OUT/<stem>.filtered.csv)");

  bench::AttitudeConfig attitude;
  auto* att_cmd = app.add_subcommand("attitude-demo", "Simulated attitude estimation with heavy-tailed noise");
  att_cmd->add_option("--steps", attitude.n_steps)->check(CLI::NonNegativeNumber);
  att_cmd->add_option("--mag-scale", attitude.mag_scale)->check(CLI::NonNegativeNumber);
  att_cmd->add_option("--sun-sigma", attitude.sun_sigma)->check(CLI::NonNegativeNumber);
  att_cmd->add_option("--outlier-rate", attitude.outlier_rate)->check(CLI::Range(0.0, 1.0));
  att_cmd->add_option("--angle-step-sigma", attitude.angle_step_sigma)->check(CLI::NonNegativeNumber);
  att_cmd->add_flag("--exact-initial-state", attitude.exact_initial_state);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(g, samples_path, model_out);
    if (*eval_cmd) return cmd_eval(model_path, eval_values, eval_grid);
    if (*sim_cmd) return cmd_simulate(g, experiment);
    if (*sweep_cmd) return cmd_sweep(g, experiment);
    if (*track_cmd) return cmd_run_track(g, track_path, ssm_path, noise_paths, track_out);
    if (*att_cmd) return cmd_attitude(g, attitude);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::NumericalFailure ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
