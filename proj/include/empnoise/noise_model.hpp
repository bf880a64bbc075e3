#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace empnoise {

/// Raw measurement-error samples. Construction checks finiteness only; the
/// minimum count is enforced by the fitting routines.
class SampleSet {
 public:
  SampleSet() = default;
  explicit SampleSet(std::vector<double> samples);

  std::span<const double> values() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// Samples in ascending order, computed once on construction.
  std::span<const double> sorted() const { return sorted_; }

 private:
  std::vector<double> samples_;
  std::vector<double> sorted_;
};

/// Monotone piecewise cubic Hermite map from standard-normal units to
/// measurement-error units, extended linearly outside the knot range.
///
/// Knots are consecutive integers symmetric about zero. Instances satisfy:
/// values strictly increasing, slopes non-negative, and the Fritsch-Carlson
/// circle bound on every interval. Models from `fit` also have positive end
/// slopes, so the extrapolated tails stay strictly increasing.
class NoiseModel {
 public:
  /// Validates every invariant; throws Error(InvalidInput) on violation.
  static NoiseModel from_parts(std::vector<int> knots, std::vector<double> values,
                               std::vector<double> slopes, std::size_t sample_count);

  std::span<const int> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> slopes() const { return slopes_; }
  std::size_t sample_count() const { return sample_count_; }
  std::size_t knot_count() const { return knots_.size(); }

  double operator()(double s) const;

  bool operator==(const NoiseModel&) const = default;

 private:
  NoiseModel() = default;

  std::vector<int> knots_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  std::size_t sample_count_ = 0;
};

/// Smallest sample count that yields three knots.
inline constexpr std::size_t kMinSamples = 6;

/// Maximum of sqrt(alpha^2 + beta^2) on a monotone interval.
inline constexpr double kFritschCarlsonRadius = 3.0;

/// Empirical cdf: fraction of samples <= s.
double ecdf(const SampleSet& samples, double s);

/// Integer knot positions s_1..s_m with s_1 = ceil(Phi^-1(1/(n+1))), m = 1 - 2 s_1.
std::vector<int> select_knots(std::size_t n);

/// Quantile with plotting position j/(n+1) for the j-th order statistic,
/// linear between order statistics, clamped to the extremes.
double plotting_position_quantile(const SampleSet& samples, double p);

/// Empirical quantiles at Phi(s_i). Throws DegenerateQuantiles unless
/// strictly increasing.
std::vector<double> knot_values(const SampleSet& samples, std::span<const int> knots);

struct SlopeFit {
  std::vector<double> slopes;
  /// True where the windowed least-squares denominator vanished and the
  /// secant fallback was used.
  std::vector<bool> fallback;
  /// True where the Fritsch-Carlson repair rescaled the slope.
  std::vector<bool> repaired;
};

/// Sigma score of each sample: Phi^-1(#{l : e_l < e_j} / (n+1)). The minimum
/// sample maps to -infinity.
std::vector<double> sigma_scores(const SampleSet& samples);

/// Windowed least-squares slopes at each knot, clamped to be non-negative,
/// end slopes floored to stay positive, then the monotonicity repair.
SlopeFit fit_slopes(const SampleSet& samples, std::span<const int> knots,
                    std::span<const double> values);

/// Clamps negative slopes to zero, keeps the end slopes positive, then
/// rescales each interval that violates the Fritsch-Carlson bound.
void make_monotone(std::span<const int> knots, std::span<const double> values, SlopeFit& fit);

/// Hermite evaluation with linear extrapolation beyond the end knots.
double eval(const NoiseModel& model, double s);

/// select_knots -> knot_values -> fit_slopes.
NoiseModel fit(const SampleSet& samples);

/// JSON document {"n":..., "knots":[...], "values":[...], "slopes":[...]}.
std::string serialize(const NoiseModel& model);
NoiseModel deserialize(const std::string& text);

NoiseModel load_model(const std::string& path);
void save_model(const NoiseModel& model, const std::string& path);

/// One value per line; a non-numeric first line is treated as a header.
SampleSet read_samples_csv(std::istream& in);
SampleSet read_samples_csv(const std::string& path);

}  // namespace empnoise
