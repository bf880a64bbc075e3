#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace empnoise {

/// Cubic Hermite value on [x0, x1] given end values and end derivatives.
inline double hermite_segment(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double hm = (x - x0) / h;
  const double hp = (x1 - x) / h;
  return y0 * (3.0 * hp * hp - 2.0 * hp * hp * hp) + y1 * (3.0 * hm * hm - 2.0 * hm * hm * hm) -
         d0 * h * (hp * hp * hp - hp * hp) + d1 * h * (hm * hm * hm - hm * hm);
}

/// Piecewise Hermite interpolant over arbitrary increasing knots with linear
/// extrapolation. Needs at least two knots.
inline double hermite_eval(std::span<const double> knots, std::span<const double> values,
                           std::span<const double> slopes, double x) {
  const std::size_t m = knots.size();
  if (m < 2 || values.size() != m || slopes.size() != m) {
    throw std::invalid_argument("hermite_eval: mismatched or too short knot arrays");
  }
  if (x <= knots[0]) return values[0] + slopes[0] * (x - knots[0]);
  if (x >= knots[m - 1]) return values[m - 1] + slopes[m - 1] * (x - knots[m - 1]);
  // First knot >= x gives s_i < x <= s_{i+1}.
  const auto upper = static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), x) - knots.begin());
  const std::size_t i = upper - 1;
  return hermite_segment(knots[i], knots[i + 1], values[i], values[i + 1], slopes[i], slopes[i + 1], x);
}

}  // namespace empnoise
