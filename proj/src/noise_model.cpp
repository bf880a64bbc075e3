#include "empnoise/noise_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "empnoise/error.hpp"
#include "empnoise/hermite.hpp"
#include "empnoise/normal.hpp"

namespace empnoise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_enough(std::size_t n) {
  if (n < kMinSamples) {
    throw Error(ErrorKind::TooFewSamples, "too few samples: got " + std::to_string(n) +
                                              ", need at least " + std::to_string(kMinSamples));
  }
}

}  // namespace

SampleSet::SampleSet(std::vector<double> samples) : samples_(std::move(samples)) {
  for (std::size_t j = 0; j < samples_.size(); ++j) {
    if (!std::isfinite(samples_[j])) {
      throw Error(ErrorKind::InvalidInput, "sample " + std::to_string(j) + " is not finite");
    }
  }
  sorted_ = samples_;
  std::sort(sorted_.begin(), sorted_.end());
}

NoiseModel NoiseModel::from_parts(std::vector<int> knots, std::vector<double> values,
                                  std::vector<double> slopes, std::size_t sample_count) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidInput, "noise model: " + msg); };
  const std::size_t m = knots.size();
  if (m < 3) fail("needs at least 3 knots");
  if (values.size() != m || slopes.size() != m) fail("knots, values and slopes differ in length");
  if (knots.front() != -knots.back()) fail("knots are not symmetric about 0");
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (knots[i + 1] != knots[i] + 1) fail("knots are not consecutive integers");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(slopes[i])) fail("non-finite value or slope");
    if (slopes[i] < 0.0) fail("negative slope at knot " + std::to_string(knots[i]));
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!(values[i] < values[i + 1])) fail("values are not strictly increasing");
    const double delta = values[i + 1] - values[i];
    const double radius = std::hypot(slopes[i] / delta, slopes[i + 1] / delta);
    if (radius > kFritschCarlsonRadius * (1.0 + 1e-12)) {
      fail("Fritsch-Carlson bound violated on interval starting at knot " + std::to_string(knots[i]));
    }
  }
  if (sample_count == 0) fail("sample count must be positive");
  NoiseModel model;
  model.knots_ = std::move(knots);
  model.values_ = std::move(values);
  model.slopes_ = std::move(slopes);
  model.sample_count_ = sample_count;
  return model;
}

double NoiseModel::operator()(double s) const { return eval(*this, s); }

double ecdf(const SampleSet& samples, double s) {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "ecdf: empty sample set");
  const auto sorted = samples.sorted();
  const auto count = std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin();
  return static_cast<double>(count) / static_cast<double>(sorted.size());
}

std::vector<int> select_knots(std::size_t n) {
  require_enough(n);
  const int first = static_cast<int>(std::ceil(std_normal_quantile(1.0 / (static_cast<double>(n) + 1.0))));
  const int m = 1 - 2 * first;
  std::vector<int> knots(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) knots[static_cast<std::size_t>(i)] = first + i;
  return knots;
}

double plotting_position_quantile(const SampleSet& samples, double p) {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "quantile: empty sample set");
  const auto sorted = samples.sorted();
  const double n = static_cast<double>(sorted.size());
  // 1-based fractional rank; order statistic j sits at probability j/(n+1).
  const double rank = std::clamp(p * (n + 1.0), 1.0, n);
  const double lower = std::floor(rank);
  const auto j = static_cast<std::size_t>(lower) - 1;
  const double frac = rank - lower;
  if (frac == 0.0 || j + 1 >= sorted.size()) return sorted[j];
  return sorted[j] + frac * (sorted[j + 1] - sorted[j]);
}

std::vector<double> knot_values(const SampleSet& samples, std::span<const int> knots) {
  std::vector<double> values;
  values.reserve(knots.size());
  for (int s : knots) values.push_back(plotting_position_quantile(samples, std_normal_cdf(s)));
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (!(values[i] < values[i + 1])) {
      throw Error(ErrorKind::DegenerateQuantiles,
                  "quantiles at knots " + std::to_string(knots[i]) + " and " + std::to_string(knots[i + 1]) +
                      " are not strictly increasing; use more samples or add continuous jitter to discrete data");
    }
  }
  return values;
}

std::vector<double> sigma_scores(const SampleSet& samples) {
  const auto sorted = samples.sorted();
  const double denom = static_cast<double>(sorted.size()) + 1.0;
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (double e : samples.values()) {
    const auto less = std::lower_bound(sorted.begin(), sorted.end(), e) - sorted.begin();
    scores.push_back(less == 0 ? -kInf : std_normal_quantile(static_cast<double>(less) / denom));
  }
  return scores;
}

SlopeFit fit_slopes(const SampleSet& samples, std::span<const int> knots, std::span<const double> values) {
  const std::size_t m = knots.size();
  if (m < 2 || values.size() != m) {
    throw Error(ErrorKind::InvalidInput, "fit_slopes: need at least two knots with matching values");
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!(values[i] < values[i + 1])) throw Error(ErrorKind::InvalidInput, "fit_slopes: values not strictly increasing");
  }

  const auto scores = sigma_scores(samples);
  const auto raw = samples.values();
  SlopeFit out{std::vector<double>(m, 0.0), std::vector<bool>(m, false), std::vector<bool>(m, false)};

  auto secant = [&](std::size_t i) { return (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]); };

  for (std::size_t i = 0; i < m; ++i) {
    const double lo = i == 0 ? -kInf : knots[i - 1];
    const double hi = i + 1 == m ? kInf : knots[i + 1];
    const double s = knots[i];
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      const double k = scores[j];
      if (k > lo && k <= hi) {
        num += (k - s) * (raw[j] - values[i]);
        den += (k - s) * (k - s);
      }
    }
    if (den > 0.0) {
      out.slopes[i] = num / den;
    } else {
      out.fallback[i] = true;
      if (i == 0) out.slopes[i] = secant(0);
      else if (i + 1 == m) out.slopes[i] = secant(m - 2);
      else out.slopes[i] = 0.5 * (secant(i - 1) + secant(i));
    }
  }
  make_monotone(knots, values, out);
  return out;
}

void make_monotone(std::span<const int> knots, std::span<const double> values, SlopeFit& fit) {
  const std::size_t m = knots.size();
  if (m < 2 || values.size() != m || fit.slopes.size() != m) {
    throw Error(ErrorKind::InvalidInput, "make_monotone: mismatched knot arrays");
  }
  fit.repaired.assign(m, false);
  for (double& d : fit.slopes) d = std::max(d, 0.0);

  const double floor = 1e-12 * (values[m - 1] - values[0]);
  fit.slopes.front() = std::max(fit.slopes.front(), floor);
  fit.slopes.back() = std::max(fit.slopes.back(), floor);

  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double delta = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    const double radius = std::hypot(fit.slopes[i] / delta, fit.slopes[i + 1] / delta);
    if (radius > kFritschCarlsonRadius) {
      const double tau = kFritschCarlsonRadius / radius;
      fit.slopes[i] *= tau;
      fit.slopes[i + 1] *= tau;
      fit.repaired[i] = true;
      fit.repaired[i + 1] = true;
    }
  }
}

double eval(const NoiseModel& model, double s) {
  const auto k = model.knots();
  const auto y = model.values();
  const auto d = model.slopes();
  const std::size_t m = k.size();
  if (s <= k[0]) return y[0] + d[0] * (s - k[0]);
  if (s >= k[m - 1]) return y[m - 1] + d[m - 1] * (s - k[m - 1]);
  // Unit-spaced knots: s_i < s <= s_{i+1}.
  auto i = static_cast<std::size_t>(std::ceil(s - k[0])) - 1;
  i = std::min(i, m - 2);
  return hermite_segment(k[i], k[i + 1], y[i], y[i + 1], d[i], d[i + 1], s);
}

NoiseModel fit(const SampleSet& samples) {
  require_enough(samples.size());
  auto knots = select_knots(samples.size());
  auto values = knot_values(samples, knots);
  auto slopes = fit_slopes(samples, knots, values);
  return NoiseModel::from_parts(std::move(knots), std::move(values), std::move(slopes.slopes), samples.size());
}

std::string serialize(const NoiseModel& model) {
  std::ostringstream out;
  out << "{\"n\":" << model.sample_count() << ",\"knots\":[";
  for (std::size_t i = 0; i < model.knot_count(); ++i) out << (i ? "," : "") << model.knots()[i];
  out << "],\"values\":[";
  for (std::size_t i = 0; i < model.knot_count(); ++i) out << (i ? "," : "") << fmt17(model.values()[i]);
  out << "],\"slopes\":[";
  for (std::size_t i = 0; i < model.knot_count(); ++i) out << (i ? "," : "") << fmt17(model.slopes()[i]);
  out << "]}\n";
  return out.str();
}

NoiseModel deserialize(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("noise model document: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "noise model document: expected a JSON object");
  for (const char* key : {"n", "knots", "values", "slopes"}) {
    if (!doc.contains(key)) throw Error(ErrorKind::Parse, std::string("noise model document: missing \"") + key + "\"");
  }
  try {
    const auto n = doc.at("n").get<std::size_t>();
    auto knots = doc.at("knots").get<std::vector<int>>();
    auto values = doc.at("values").get<std::vector<double>>();
    auto slopes = doc.at("slopes").get<std::vector<double>>();
    return NoiseModel::from_parts(std::move(knots), std::move(values), std::move(slopes), n);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("noise model document: ") + e.what());
  }
}

NoiseModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void save_model(const NoiseModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write model file " + path);
  out << serialize(model);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

SampleSet read_samples_csv(std::istream& in) {
  std::vector<double> samples;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = trim(line);
    if (field.empty()) continue;
    double v = 0.0;
    if (!parse_double(field, v)) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorKind::Parse, "samples: line " + std::to_string(line_no) + " is not a number");
    }
    first = false;
    samples.push_back(v);
  }
  try {
    return SampleSet(std::move(samples));
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, std::string("samples: ") + e.what());
  }
}

SampleSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open sample file " + path);
  return read_samples_csv(in);
}

}  // namespace empnoise
