#pragma once

#include <optional>
#include <vector>

#include "empnoise/gaussian.hpp"
#include "empnoise/noise_model.hpp"

namespace empnoise {

/// y = h(x) + f(eps), eps ~ N(0, I_m), with f applied componentwise by one
/// NoiseModel per measurement component.
class MeasurementModel {
 public:
  /// Affine fast path: h(x) = H x + offset.
  static MeasurementModel affine(Matrix H, Vector offset, std::vector<NoiseModel> noise);
  static MeasurementModel affine(Matrix H, std::vector<NoiseModel> noise);

  /// General h; `state_dim` is the dimension of x.
  static MeasurementModel nonlinear(VectorFunction h, Eigen::Index state_dim, std::vector<NoiseModel> noise);

  Eigen::Index state_dim() const { return state_dim_; }
  Eigen::Index meas_dim() const { return static_cast<Eigen::Index>(noise_.size()); }
  const std::vector<NoiseModel>& noise_models() const { return noise_; }

  /// Matrix of the affine fast path, if any.
  const std::optional<Matrix>& H() const { return H_; }

  Vector h(const Vector& x) const;

  /// h(x) + f(eps) on an augmented vector z = (x, eps).
  Vector augmented(const Vector& z) const;

 private:
  MeasurementModel() = default;

  VectorFunction h_;
  std::optional<Matrix> H_;
  Vector offset_;
  Eigen::Index state_dim_ = 0;
  std::vector<NoiseModel> noise_;
};

}  // namespace empnoise
