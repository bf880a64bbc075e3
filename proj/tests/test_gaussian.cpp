#include <doctest.h>

#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "empnoise/error.hpp"
#include "empnoise/gaussian.hpp"
#include "empnoise/normal.hpp"
#include "empnoise/random.hpp"

using namespace empnoise;

namespace {

Matrix random_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / (1.0 + b.norm()); }

}  // namespace

TEST_CASE("standard normal cdf and quantile") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(1.0 / 101.0) == doctest::Approx(-2.3301).epsilon(1e-3 / 2.3301));
  CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    CHECK_THROWS_AS(std_normal_quantile(p), Error);
  }

  const boost::math::normal_distribution<double> oracle;
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    const double want = boost::math::cdf(oracle, x);
    CHECK(std_normal_cdf(x) == doctest::Approx(want).epsilon(1e-13).scale(0));
  }
  for (double e = -12.0; e <= -1.0; e += 0.25) {
    const double p = std::pow(10.0, e);
    const double want = boost::math::quantile(oracle, p);
    CHECK(std_normal_quantile(p) == doctest::Approx(want).epsilon(1e-12));
    CHECK(std_normal_quantile(1.0 - p) == doctest::Approx(boost::math::quantile(oracle, 1.0 - p)).epsilon(1e-12));
  }
  for (double p = 0.01; p < 1.0; p += 0.0137) {
    CHECK(std_normal_quantile(p) == doctest::Approx(boost::math::quantile(oracle, p)).epsilon(1e-12).scale(1e-15));
    CHECK(std::abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-9);
  }
  for (double p : {1e-12, 1e-9, 1.0 - 1e-9, 1.0 - 1e-12}) {
    CHECK(std::abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-9);
  }
}

TEST_CASE("density construction validates input") {
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(2), Matrix::Identity(3, 3)), Error);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(2), asym), Error);
  Vector bad = Vector::Zero(2);
  bad(1) = NAN;
  CHECK_THROWS_AS(GaussianDensity(bad, Matrix::Identity(2, 2)), Error);
}

TEST_CASE("regularization inflates the diagonal") {
  Matrix c(2, 2);
  c << 4, 0, 0, 0;
  const GaussianDensity d(Vector::Zero(2), c);
  Matrix want(2, 2);
  want << 4.04, 0, 0, 0;
  CHECK(rel_diff(regularize(d, 0.01).cov, want) < 1e-15);
  CHECK(regularize(d, 0.0).cov == c);

  Matrix s(2, 2);
  s << 1, 1, 1, 1;
  const Matrix r = regularize(GaussianDensity(Vector::Zero(2), s), 1.0).cov;
  Matrix want2(2, 2);
  want2 << 2, 1, 1, 2;
  CHECK(r == want2);
  CHECK(r.determinant() == doctest::Approx(3.0));

  CHECK_THROWS_AS(regularize(d, -0.1), Error);

  RandomStream rng(4, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 4, 4);
    const GaussianDensity g(Vector::Zero(4), a * a.transpose());
    const Matrix out = regularize(g, rng.uniform()).cov;
    CHECK((out.diagonal() - g.cov.diagonal()).minCoeff() >= 0.0);
    CHECK(out == out.transpose());
  }
}

TEST_CASE("sigma points") {
  SUBCASE("scalar standard normal") {
    const auto sp = sigma_points(GaussianDensity(Vector::Zero(1), Matrix::Identity(1, 1)), 0.7);
    REQUIRE(sp.size() == 3);
    CHECK(sp.points(0, 0) == 0.0);
    CHECK(std::abs(sp.points(0, 1)) == doctest::Approx(0.7));
    CHECK(sp.points(0, 1) == doctest::Approx(-sp.points(0, 2)));
  }
  SUBCASE("radius in three dimensions") {
    Matrix c(3, 3);
    c << 4, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
    const GaussianDensity d(Vector::Ones(3), c);
    const auto sp = sigma_points(d, 0.5);
    const Eigen::LLT<Matrix> llt(c);
    for (Eigen::Index k = 1; k < sp.size(); ++k) {
      const Vector dx = sp.points.col(k) - d.mean;
      const double r = std::sqrt(dx.dot(llt.solve(dx)));
      CHECK(r == doctest::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-12));
    }
  }
  SUBCASE("weights") {
    const auto sp = sigma_points(GaussianDensity(Vector::Zero(1), Matrix::Identity(1, 1)), 0.5);
    CHECK(sp.mean_weights(0) == doctest::Approx(-3.0));
    CHECK(sp.mean_weights(1) == doctest::Approx(2.0));
    CHECK(sp.cov_weights(0) == doctest::Approx(-0.25));
    for (int dim = 1; dim <= 6; ++dim) {
      for (double spread : {0.1, 0.5, 1.0, 1.7}) {
        const auto s = sigma_points(GaussianDensity(Vector::Zero(dim), Matrix::Identity(dim, dim)), spread);
        CHECK(s.mean_weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("noise coordinates stay within three sigma") {
    for (Eigen::Index m = 1; m <= 6; ++m) {
      Matrix c = Matrix::Identity(2 + m, 2 + m);
      c.topLeftCorner(2, 2) << 40, 3, 3, 4;
      const auto sp = sigma_points(GaussianDensity(Vector::Zero(2 + m), c));
      CHECK(sp.points.bottomRows(m).cwiseAbs().maxCoeff() <= 3.0);
    }
  }
  SUBCASE("singular covariance is accepted") {
    Matrix c(2, 2);
    c << 1, 1, 1, 1;
    const auto sp = sigma_points(GaussianDensity(Vector::Zero(2), c));
    CHECK(sp.points.allFinite());
  }
  SUBCASE("invalid spread") { CHECK_THROWS_AS(sigma_points(GaussianDensity(Vector::Zero(1), Matrix::Identity(1, 1)), 0.0), Error); }
}

TEST_CASE("moment propagation") {
  SUBCASE("identity recovers the input moments") {
    Matrix c(2, 2);
    c << 2, 0.3, 0.3, 1;
    Vector mu(2);
    mu << 1, -2;
    const GaussianDensity d(mu, c);
    const auto mt = propagate_moments(sigma_points(d), [](const Vector& x) { return x; }, d);
    CHECK(rel_diff(mt.y_hat, mu) < 1e-14);
    CHECK(rel_diff(mt.cross, c) < 1e-13);
    CHECK(rel_diff(mt.output, c) < 1e-13);
  }
  SUBCASE("square of a standard normal") {
    const GaussianDensity d(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto mt = propagate_moments(sigma_points(d), [](const Vector& x) { return Vector(x.array().square()); }, d);
    CHECK(mt.y_hat(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(mt.cross(0, 0)) < 1e-14);
  }
  SUBCASE("non-finite output names the point") {
    const GaussianDensity d(Vector::Zero(1), Matrix::Identity(1, 1));
    try {
      propagate_moments(sigma_points(d), [](const Vector& x) { return Vector(x.array().log()); }, d);
      FAIL("expected a numerical failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NumericalFailure);
      CHECK(std::string(e.what()).find("sigma point") != std::string::npos);
    }
  }
  SUBCASE("random affine maps are exact") {
    RandomStream rng(21, 2);
    for (int trial = 0; trial < 200; ++trial) {
      const auto L = static_cast<Eigen::Index>(1 + rng.next_u64() % 6);
      const auto m = static_cast<Eigen::Index>(1 + rng.next_u64() % 4);
      const auto rank = static_cast<Eigen::Index>(1 + rng.next_u64() % L);
      const Matrix root = random_matrix(rng, L, rank);
      const GaussianDensity d(random_matrix(rng, L, 1), root * root.transpose());
      const Matrix A = random_matrix(rng, m, L);
      const Vector c = random_matrix(rng, m, 1);
      const double spread = 0.1 + 1.5 * rng.uniform();
      const auto mt = propagate_moments(sigma_points(d, spread), [&](const Vector& x) { return Vector(A * x + c); }, d);
      INFO("trial " << trial);
      CHECK(rel_diff(mt.y_hat, A * d.mean + c) < 1e-9);
      CHECK(rel_diff(mt.cross, d.cov * A.transpose()) < 1e-9);
      CHECK(rel_diff(mt.output, A * d.cov * A.transpose()) < 1e-9);
    }
  }
}

TEST_CASE("psd helpers") {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;  // eigenvalues 3, -1
  CHECK_FALSE(is_psd(m));
  const Matrix c = clamp_psd(m);
  CHECK(is_psd(c));
  CHECK(c(0, 0) == doctest::Approx(1.5));
  CHECK(c(0, 1) == doctest::Approx(1.5));
  Matrix a(2, 2);
  a << 1, 2, 0, 1;
  CHECK(symmetrize(a)(0, 1) == 1.0);
}
