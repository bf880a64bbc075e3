#include "empnoise/measurement_model.hpp"

#include <string>

#include "empnoise/error.hpp"

namespace empnoise {

MeasurementModel MeasurementModel::affine(Matrix H, Vector offset, std::vector<NoiseModel> noise) {
  if (H.rows() != static_cast<Eigen::Index>(noise.size())) {
    throw Error(ErrorKind::DimensionMismatch, "MeasurementModel: H has " + std::to_string(H.rows()) +
                                                  " rows but " + std::to_string(noise.size()) + " noise models");
  }
  if (offset.size() != H.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "MeasurementModel: offset length does not match H");
  }
  MeasurementModel mm;
  mm.state_dim_ = H.cols();
  mm.H_ = std::move(H);
  mm.offset_ = std::move(offset);
  mm.noise_ = std::move(noise);
  return mm;
}

MeasurementModel MeasurementModel::affine(Matrix H, std::vector<NoiseModel> noise) {
  Vector offset = Vector::Zero(H.rows());
  return affine(std::move(H), std::move(offset), std::move(noise));
}

MeasurementModel MeasurementModel::nonlinear(VectorFunction h, Eigen::Index state_dim, std::vector<NoiseModel> noise) {
  if (!h) throw Error(ErrorKind::InvalidInput, "MeasurementModel: empty measurement function");
  MeasurementModel mm;
  mm.h_ = std::move(h);
  mm.state_dim_ = state_dim;
  mm.noise_ = std::move(noise);
  return mm;
}

Vector MeasurementModel::h(const Vector& x) const {
  if (H_) return *H_ * x + offset_;
  Vector y = h_(x);
  if (y.size() != meas_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "MeasurementModel: h returned " + std::to_string(y.size()) +
                                                  " values, expected " + std::to_string(meas_dim()));
  }
  return y;
}

Vector MeasurementModel::augmented(const Vector& z) const {
  Vector y = h(z.head(state_dim_));
  for (Eigen::Index j = 0; j < meas_dim(); ++j) {
    y(j) += eval(noise_[static_cast<std::size_t>(j)], z(state_dim_ + j));
  }
  return y;
}

}  // namespace empnoise
