#include "empnoise/filter.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "empnoise/error.hpp"

namespace empnoise {

void StateSpaceModel::validate() const {
  const Eigen::Index d = prior.dim();
  if (F.rows() != d || F.cols() != d || Q.rows() != d || Q.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "StateSpaceModel: F and Q must be " + std::to_string(d) + "x" +
                                                  std::to_string(d));
  }
  if (!F.allFinite() || !Q.allFinite()) throw Error(ErrorKind::InvalidInput, "StateSpaceModel: non-finite entries");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()) || !is_psd(Q)) {
    throw Error(ErrorKind::InvalidInput, "StateSpaceModel: Q must be symmetric positive semi-definite");
  }
}

void Track::validate() const {
  if (t.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "Track: timestamps and measurements differ in length");
  if (has_truth() && truth.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Track: ground truth and measurements differ in length");
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!y[k].allFinite() || !std::isfinite(t[k]) || (has_truth() && !truth[k].allFinite())) {
      throw Error(ErrorKind::InvalidInput, "Track: non-finite value at row " + std::to_string(k));
    }
  }
}

GaussianDensity predict(const GaussianDensity& state, const StateSpaceModel& ssm) {
  if (ssm.F.cols() != state.dim() || ssm.F.rows() != state.dim() || ssm.Q.rows() != state.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "predict: model dimensions do not match the state");
  }
  return GaussianDensity(ssm.F * state.mean, symmetrize(ssm.F * state.cov * ssm.F.transpose() + ssm.Q));
}

StepResult step(const GaussianDensity& state, const StateSpaceModel& ssm, const MeasurementModel& mm, const Vector& y,
                const IplfConfig& config) {
  const GaussianDensity predicted = predict(state, ssm);
  UpdateReport report = iterated_update(predicted, mm, y, config);
  GaussianDensity posterior = report.posterior;
  return {std::move(posterior), std::move(report)};
}

RunResult run(const Track& track, const StateSpaceModel& ssm, const MeasurementModel& mm, const IplfConfig& config) {
  track.validate();
  ssm.validate();
  const Eigen::Index d = ssm.prior.dim();
  RunResult out;
  out.posteriors.reserve(track.size());
  out.reports.reserve(track.size());
  GaussianDensity state = ssm.prior;
  Vector abs_sum = Vector::Zero(d);
  for (std::size_t k = 0; k < track.size(); ++k) {
    StepResult r;
    try {
      r = step(state, ssm, mm, track.y[k], config);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at step " + std::to_string(k));
    }
    state = r.posterior;
    for (double s : r.report.noise_steps) out.max_noise_step = std::max(out.max_noise_step, s);
    if (track.has_truth()) abs_sum += (state.mean - track.truth[k]).cwiseAbs();
    out.posteriors.push_back(std::move(r.posterior));
    out.reports.push_back(std::move(r.report));
  }
  if (track.has_truth() && track.size() > 0) {
    const Vector mae = abs_sum / static_cast<double>(track.size());
    out.mean_abs_error.assign(mae.data(), mae.data() + mae.size());
  }
  return out;
}

GaussianDensity kalman_update(const GaussianDensity& prior, const Matrix& H, const Matrix& R, const Vector& y) {
  if (H.cols() != prior.dim() || H.rows() != y.size() || R.rows() != y.size() || R.cols() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "kalman_update: inconsistent dimensions");
  }
  const Matrix S = symmetrize(H * prior.cov * H.transpose() + R);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "kalman_update: singular innovation covariance");
  const Matrix K = llt.solve(H * prior.cov).transpose();
  return GaussianDensity(prior.mean + K * (y - H * prior.mean), symmetrize(prior.cov - K * S * K.transpose()));
}

GaussianDensity ukf_update(const GaussianDensity& prior, const VectorFunction& h, const Matrix& R, const Vector& y,
                           double spread) {
  const SigmaPointSet points = sigma_points(prior, spread);
  const MomentTriple moments = propagate_moments(points, h, prior);
  if (moments.y_hat.size() != y.size() || R.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "ukf_update: inconsistent measurement dimensions");
  }
  const Matrix S = symmetrize(moments.output + R);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "ukf_update: singular innovation covariance");
  const Matrix K = llt.solve(moments.cross.transpose()).transpose();
  return GaussianDensity(prior.mean + K * (y - moments.y_hat), symmetrize(prior.cov - K * S * K.transpose()));
}

Matrix attitude_matrix(double theta, double psi, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cs = std::cos(psi), ss = std::sin(psi);
  const double cf = std::cos(phi), sf = std::sin(phi);
  Matrix A(3, 3);
  A << cs * ct, cs * st, -ss,
      -cf * st + sf * ss * ct, cf * ct + sf * ss * st, sf * cs,
      sf * st + cf * ss * ct, -sf * ct + cf * ss * st, cf * cs;
  return A;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_field(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* begin = field.data();
  if (!field.empty() && field.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": invalid number '" + field + "'");
  }
  return v;
}

bool is_indexed(const std::string& name, char prefix, std::size_t index) {
  return name == std::string(1, prefix) + std::to_string(index);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Track read_track_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "track: missing header");
  ++line_no;
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "t") throw Error(ErrorKind::Parse, "track: header must start with 't'");
  std::size_t m = 0;
  while (1 + m < header.size() && is_indexed(header[1 + m], 'y', m + 1)) ++m;
  std::size_t d = 0;
  while (1 + m + d < header.size() && is_indexed(header[1 + m + d], 'x', d + 1)) ++d;
  if (m == 0) throw Error(ErrorKind::Parse, "track: header needs at least one measurement column y1");
  if (1 + m + d != header.size()) {
    throw Error(ErrorKind::Parse, "track: unexpected header column '" + header[1 + m + d] + "'");
  }

  Track track;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                        " fields, got " + std::to_string(fields.size()));
    }
    track.t.push_back(parse_field(fields[0], line_no));
    Vector y(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) y(static_cast<Eigen::Index>(j)) = parse_field(fields[1 + j], line_no);
    track.y.push_back(std::move(y));
    if (d > 0) {
      Vector x(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(j)) = parse_field(fields[1 + m + j], line_no);
      track.truth.push_back(std::move(x));
    }
  }
  return track;
}

Track read_track_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open track file " + path);
  return read_track_csv(in);
}

void write_run_csv(std::ostream& out, const Track& track, const std::vector<GaussianDensity>& posteriors,
                   Eigen::Index state_dim) {
  out << "t";
  for (Eigen::Index j = 1; j <= state_dim; ++j) out << ",mean_" << j;
  for (Eigen::Index j = 1; j <= state_dim; ++j) out << ",var_" << j;
  if (track.has_truth()) {
    for (Eigen::Index j = 1; j <= state_dim; ++j) out << ",abs_err_" << j;
  }
  out << "\n";
  for (std::size_t k = 0; k < posteriors.size(); ++k) {
    const auto& p = posteriors[k];
    out << fmt17(track.t[k]);
    for (Eigen::Index j = 0; j < state_dim; ++j) out << "," << fmt17(p.mean(j));
    for (Eigen::Index j = 0; j < state_dim; ++j) out << "," << fmt17(p.cov(j, j));
    if (track.has_truth()) {
      for (Eigen::Index j = 0; j < state_dim; ++j) out << "," << fmt17(std::abs(p.mean(j) - track.truth[k](j)));
    }
    out << "\n";
  }
}

RunCsv read_run_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "run output: missing header");
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "t") throw Error(ErrorKind::Parse, "run output: header must start with 't'");
  std::size_t d = 0;
  while (1 + d < header.size() && header[1 + d] == "mean_" + std::to_string(d + 1)) ++d;
  const bool has_err = header.size() == 1 + 3 * d;
  if (d == 0 || (header.size() != 1 + 2 * d && !has_err)) throw Error(ErrorKind::Parse, "run output: malformed header");
  RunCsv out;
  auto read_block = [&](const std::vector<std::string>& f, std::size_t offset) {
    Vector v(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) v(static_cast<Eigen::Index>(j)) = parse_field(f[offset + j], line_no);
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": wrong field count");
    out.t.push_back(parse_field(f[0], line_no));
    out.mean.push_back(read_block(f, 1));
    out.var.push_back(read_block(f, 1 + d));
    if (has_err) out.abs_err.push_back(read_block(f, 1 + 2 * d));
  }
  return out;
}

}  // namespace empnoise
