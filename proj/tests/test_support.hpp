#pragma once

// Sample generators and invariant checks shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "empnoise/noise_model.hpp"
#include "empnoise/random.hpp"

namespace support {

inline std::vector<double> gaussian_samples(std::size_t n, double mean, double sd, std::uint64_t seed,
                                            std::uint64_t stream = 0) {
  empnoise::RandomStream rng(seed, stream);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal(mean, sd);
  return out;
}

inline std::vector<double> student_t_samples(std::size_t n, int dof, double scale, std::uint64_t seed,
                                             std::uint64_t stream = 0) {
  empnoise::RandomStream rng(seed, stream);
  std::vector<double> out(n);
  for (auto& v : out) v = scale * rng.student_t(dof);
  return out;
}

/// Checks knot layout, interpolation, monotonicity (dense grid and tails),
/// the Fritsch-Carlson bound and C1 continuity. Returns an empty string when
/// every invariant holds, otherwise the first violation.
inline std::string model_violation(const empnoise::NoiseModel& model) {
  const auto k = model.knots();
  const auto y = model.values();
  const auto d = model.slopes();
  const std::size_t m = k.size();
  const double range = y[m - 1] - y[0];
  std::ostringstream why;

  if (m < 3) return "fewer than three knots";
  for (std::size_t i = 0; i < m; ++i) {
    if (k[i] != k[0] + static_cast<int>(i) || k[i] != -k[m - 1 - i]) return "knots not consecutive and symmetric";
    if (!(d[i] >= 0.0)) return "negative slope";
    if (model(k[i]) != y[i]) {
      why << "no interpolation at knot " << k[i];
      return why.str();
    }
  }
  if (!(d[0] > 0.0) || !(d[m - 1] > 0.0)) return "end slope not positive";

  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double delta = y[i + 1] - y[i];
    if (!(delta > 0.0)) return "values not strictly increasing";
    if (std::hypot(d[i] / delta, d[i + 1] / delta) > empnoise::kFritschCarlsonRadius * (1.0 + 1e-12)) {
      why << "Fritsch-Carlson bound violated on [" << k[i] << "," << k[i + 1] << "]";
      return why.str();
    }
    // Monotone on a dense grid, including the extrapolated ends.
    double prev = model(k[i]);
    for (int j = 1; j <= 200; ++j) {
      const double cur = model(k[i] + j / 200.0);
      if (cur < prev - 1e-12 * range) {
        why << "decreasing inside [" << k[i] << "," << k[i + 1] << "]";
        return why.str();
      }
      prev = cur;
    }
  }
  if (model(k[0] - 5.0) > y[0] || model(k[m - 1] + 5.0) < y[m - 1]) return "extrapolation decreasing";

  // C1: one-sided difference quotients at every knot approach the slope.
  const double h = 1e-6;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = k[i];
    const double left = (model(s) - model(s - h)) / h;
    const double right = (model(s + h) - model(s)) / h;
    const double tol = 1e-3 * (1.0 + d[i]) + 1e-6 * range;
    if (std::abs(left - d[i]) > tol || std::abs(right - d[i]) > tol) {
      why << "derivative discontinuous at knot " << s << ": " << left << " / " << d[i] << " / " << right;
      return why.str();
    }
  }
  return {};
}

/// Largest |model(s) - (mean + sd*s)| on a grid of [lo, hi].
inline double affine_deviation(const empnoise::NoiseModel& model, double mean, double sd, double lo, double hi) {
  double worst = 0.0;
  for (int j = 0; j <= 600; ++j) {
    const double s = lo + (hi - lo) * j / 600.0;
    worst = std::max(worst, std::abs(model(s) - (mean + sd * s)));
  }
  return worst;
}

}  // namespace support
