#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "empnoise/error.hpp"
#include "empnoise/filter.hpp"
#include "empnoise/random.hpp"
#include "test_support.hpp"

using namespace empnoise;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) { return Vector::Map(std::data(v), static_cast<Eigen::Index>(v.size())); }

StateSpaceModel constant_velocity() {
  return {mat({{1, 1}, {0, 1}}), mat({{0, 0}, {0, 1}}), GaussianDensity(Vector::Zero(2), mat({{40, 0}, {0, 4}}))};
}

NoiseModel linear_noise(double scale) {
  return NoiseModel::from_parts({-2, -1, 0, 1, 2}, {-2 * scale, -scale, 0, scale, 2 * scale},
                                {scale, scale, scale, scale, scale}, 100);
}

Track gaussian_track(const StateSpaceModel& ssm, int steps, double noise_sd, std::uint64_t seed) {
  RandomStream rng(seed, 1);
  Track tr;
  Vector x = ssm.prior.mean + Eigen::LLT<Matrix>(ssm.prior.cov).matrixL() * vec({rng.normal(), rng.normal()});
  for (int k = 1; k <= steps; ++k) {
    x = ssm.F * x + vec({0.0, rng.normal()});
    tr.t.push_back(k);
    tr.y.push_back(Vector::Constant(1, x(0) + noise_sd * rng.normal()));
    tr.truth.push_back(x);
  }
  return tr;
}

}  // namespace

TEST_CASE("prediction") {
  const GaussianDensity s(vec({1, 1}), mat({{40, 0}, {0, 4}}));
  StateSpaceModel id{Matrix::Identity(2, 2), Matrix::Zero(2, 2), s};
  CHECK(predict(s, id).mean == s.mean);
  CHECK(predict(s, id).cov == s.cov);
  const auto p = predict(s, constant_velocity());
  CHECK(p.mean == vec({2, 1}));
  CHECK(p.cov == mat({{44, 4}, {4, 5}}));
}

TEST_CASE("model validation") {
  StateSpaceModel bad = constant_velocity();
  bad.Q = mat({{1, 0}, {0, -1}});
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = constant_velocity();
  bad.F = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("baselines agree on linear models") {
  const GaussianDensity prior(vec({1, -1}), mat({{3, 0.4}, {0.4, 2}}));
  const Matrix H = mat({{1, 2}, {0.5, -1}});
  const Matrix R = mat({{1, 0.2}, {0.2, 0.5}});
  const Vector y = vec({0.3, 2.0});
  const auto kf = kalman_update(prior, H, R, y);
  const auto ukf = ukf_update(prior, [&](const Vector& x) { return Vector(H * x); }, R, y);
  CHECK((kf.mean - ukf.mean).norm() < 1e-10);
  CHECK((kf.cov - ukf.cov).norm() < 1e-10);
  // Information form.
  const Matrix info = prior.cov.inverse() + H.transpose() * R.inverse() * H;
  CHECK((kf.cov - info.inverse()).norm() < 1e-10);
}

TEST_CASE("runs") {
  const auto ssm = constant_velocity();
  const auto mm = MeasurementModel::affine(mat({{1, 0}}), {linear_noise(10.0)});
  SUBCASE("empty track") {
    const auto r = run(Track{}, ssm, mm, {});
    CHECK(r.posteriors.empty());
    CHECK(r.reports.empty());
    CHECK(r.mean_abs_error.empty());
  }
  SUBCASE("single measurement") {
    Track tr;
    tr.t = {1.0};
    tr.y = {vec({3.0})};
    const auto r = run(tr, ssm, mm, {});
    REQUIRE(r.posteriors.size() == 1);
    const auto kf = kalman_update(predict(ssm.prior, ssm), mat({{1, 0}}), Matrix::Constant(1, 1, 100), tr.y[0]);
    CHECK((r.posteriors[0].mean - kf.mean).norm() < 1e-9);
    CHECK(r.mean_abs_error.empty());
  }
  SUBCASE("exact linear noise tracks the Kalman filter") {
    // Damping truncates steps for innovations beyond about 1.4 sigma, so
    // exactness only holds without it.
    const Track tr = gaussian_track(ssm, 50, 10.0, 3);
    IplfConfig undamped;
    undamped.damping_enabled = false;
    const auto r = run(tr, ssm, mm, undamped);
    GaussianDensity kf = ssm.prior;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      kf = kalman_update(predict(kf, ssm), mat({{1, 0}}), Matrix::Constant(1, 1, 100), tr.y[k]);
      CHECK((r.posteriors[k].mean - kf.mean).norm() < 1e-7 * (1 + kf.mean.norm()));
      CHECK((r.posteriors[k].cov - kf.cov).norm() < 1e-7 * kf.cov.norm());
      CHECK(is_psd(r.posteriors[k].cov));
    }
    REQUIRE(r.mean_abs_error.size() == 2);
    CHECK(run(tr, ssm, mm, {}).max_noise_step <= 1.0 + 1e-12);
  }
  SUBCASE("failures carry the step index") {
    const auto bad = MeasurementModel::nonlinear(
        [](const Vector& x) { return Vector::Constant(1, x(0) > 5.0 ? NAN : x(0)); }, 2, {linear_noise(1.0)});
    Track tr;
    tr.t = {1, 2, 3};
    tr.y = {vec({0.0}), vec({0.0}), vec({0.0})};
    StateSpaceModel tight = ssm;
    tight.prior = GaussianDensity(Vector::Zero(2), mat({{1e-4, 0}, {0, 1e-4}}));
    tight.Q = Matrix::Zero(2, 2);
    tight.F = mat({{1, 4}, {0, 1}});
    tight.prior.mean(1) = 1.0;
    try {
      run(tr, tight, bad, {});
      FAIL("expected a numerical failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NumericalFailure);
      CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
  }
}

TEST_CASE("attitude matrix") {
  CHECK((attitude_matrix(0, 0, 0) - Matrix::Identity(3, 3)).norm() == 0.0);
  const Matrix q = attitude_matrix(std::numbers::pi / 2, 0, 0);
  CHECK((q.row(0).transpose() - vec({0, 1, 0})).norm() < 1e-15);
  CHECK((q * vec({1, 0, 0}) - vec({0, -1, 0})).norm() < 1e-15);
  RandomStream rng(2, 2);
  for (int i = 0; i < 200; ++i) {
    const Matrix A = attitude_matrix(6 * rng.normal(), 6 * rng.normal(), 6 * rng.normal());
    CHECK((A.transpose() * A - Matrix::Identity(3, 3)).norm() < 1e-12);
    CHECK(A.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Yaw about z, then pitch about y, then roll about x.
  const double th = 0.3, ps = -0.7, ph = 1.1;
  const Matrix Rz = mat({{std::cos(th), std::sin(th), 0}, {-std::sin(th), std::cos(th), 0}, {0, 0, 1}});
  const Matrix Ry = mat({{std::cos(ps), 0, -std::sin(ps)}, {0, 1, 0}, {std::sin(ps), 0, std::cos(ps)}});
  const Matrix Rx = mat({{1, 0, 0}, {0, std::cos(ph), std::sin(ph)}, {0, -std::sin(ph), std::cos(ph)}});
  CHECK((attitude_matrix(th, ps, ph) - Rx * Ry * Rz).norm() < 1e-14);
}

TEST_CASE("track and run CSV") {
  SUBCASE("round trip") {
    const auto ssm = constant_velocity();
    const Track tr = gaussian_track(ssm, 20, 10.0, 4);
    const auto mm = MeasurementModel::affine(mat({{1, 0}}), {linear_noise(10.0)});
    const auto r = run(tr, ssm, mm, {});
    std::ostringstream out;
    write_run_csv(out, tr, r.posteriors, 2);
    std::istringstream in(out.str());
    const RunCsv back = read_run_csv(in);
    REQUIRE(back.t.size() == tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(back.t[k] == tr.t[k]);
      CHECK(back.mean[k] == r.posteriors[k].mean);
      CHECK(back.var[k] == r.posteriors[k].cov.diagonal());
      CHECK(back.abs_err[k] == (r.posteriors[k].mean - tr.truth[k]).cwiseAbs());
    }
  }
  SUBCASE("empty track writes only the header") {
    std::ostringstream out;
    write_run_csv(out, Track{}, {}, 2);
    CHECK(out.str() == "t,mean_1,mean_2,var_1,var_2\n");
  }
  SUBCASE("track reading") {
    std::istringstream in("t,y1,x1,x2\n1,2.5,0.1,0.2\n2,3.5,0.3,0.4\n");
    const Track tr = read_track_csv(in);
    CHECK(tr.size() == 2);
    CHECK(tr.has_truth());
    CHECK(tr.truth[1] == vec({0.3, 0.4}));
  }
  SUBCASE("malformed rows name the line") {
    for (const std::string text : {"t,y1\n1,2\n2,x\n", "t,y1\n1,2\n2\n"}) {
      std::istringstream in(text);
      try {
        read_track_csv(in);
        FAIL("expected a parse error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      }
    }
  }
  SUBCASE("bad header") {
    std::istringstream in("time,y1\n");
    CHECK_THROWS_AS(read_track_csv(in), Error);
  }
}
