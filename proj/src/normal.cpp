#include "empnoise/normal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "empnoise/error.hpp"

namespace empnoise {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::TooFewSamples: return "too-few-samples";
    case ErrorKind::DegenerateQuantiles: return "degenerate-quantiles";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
  }
  return "unknown";
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

namespace {

// Acklam's coefficients, relative error ~1.15e-9 before refinement.
constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                        1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                        6.680131188771972e+01,  -1.328068155288572e+01};
constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                        -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                        3.754408661907416e+00};

// Lower-half quantile, p <= 0.5.
double lower_quantile(double p) {
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Newton refinement; x <= 0 here so the cdf is evaluated in its accurate tail.
  const double err = std_normal_cdf(x) - p;
  return x - err / std_normal_pdf(x);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::InvalidInput,
                "std_normal_quantile: probability must lie in (0, 1), got " + std::to_string(p));
  }
  if (p <= 0.5) return lower_quantile(p);
  // 1 - p is exact for p >= 0.5.
  return -lower_quantile(1.0 - p);
}

}  // namespace empnoise
