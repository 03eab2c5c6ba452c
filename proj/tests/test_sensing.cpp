#include "support.hpp"

#include "hase/error.hpp"
#include "hase/sensing.hpp"

#include <doctest.h>

#include <numbers>

using namespace hase;

TEST_CASE("triangulation inverts projection") {
  StereoRig rig;
  rig.baseline = 0.2;
  const Vector3 p(0.3, -0.2, 4.0);
  const Pixels px = project_to_pixels(rig, p);
  CHECK((triangulate(rig, px) - p).norm() < 1e-12);
  CHECK_THROWS_AS(triangulate(rig, Pixels(1.0, 2.0, 0.0)), DegenerateGeometryError);
}

TEST_CASE("stereo jacobian matches central differences") {
  StereoRig rig;
  const Pixels px(40.0, 10.0, -7.0);
  const Matrix3 j = stereo_jacobian(rig, px);
  for (int c = 0; c < 3; ++c) {
    Pixels hi = px, lo = px;
    hi(c) += 1e-4;
    lo(c) -= 1e-4;
    const Vector3 fd = (triangulate(rig, hi) - triangulate(rig, lo)) / 2e-4;
    CHECK((fd - j.col(c)).norm() < 1e-6 * j.col(c).norm() + 1e-9);
  }
}

TEST_CASE("range-bearing covariance grows with range") {
  RangeBearingModel m;
  m.radial_var4 = 0.01;
  m.tangential_var2 = 0.02;
  const SensorModel s(m);
  const Vector target = Vector::Zero(2);
  const Matrix near = s.observation_cov(target, Pose::looking_at(Vector::Unit(2, 0), target));
  const Matrix far = s.observation_cov(target, Pose::looking_at(3.0 * Vector::Unit(2, 0), target));
  CHECK(far.trace() > near.trace());
  CHECK(near(0, 0) == doctest::Approx(m.radial_var0 + m.radial_var4));
  CHECK(near(1, 1) == doctest::Approx(m.tangential_var0 + m.tangential_var2));
}

TEST_CASE("limited field of view hides targets behind the sensor") {
  RangeBearingModel m;
  m.field_of_view = std::numbers::pi / 2;
  const SensorModel s(m);
  const Vector target = Vector::Zero(2);
  Vector at(2);
  at << 1.0, 0.0;
  const Pose facing = Pose::looking_at(at, target);
  const Pose away(at, 0.0);
  CHECK(s.visible(target, facing));
  CHECK(!s.visible(target, away));
  CHECK_THROWS_AS(s.observation_cov(target, away), TargetNotVisible);
}

TEST_CASE("kalman update with an exact measurement") {
  Vector x(2), truth(2);
  x << 1.0, 1.0;
  truth << 0.0, 0.0;
  Matrix sigma = Matrix::Identity(2, 2);
  Observation obs{truth, 0.01 * Matrix::Identity(2, 2)};
  kalman_update(x, sigma, obs);
  CHECK(x.norm() == doctest::Approx(std::sqrt(2.0) * 0.01 / 1.01));
  CHECK(sigma(0, 0) == doctest::Approx(0.01 / 1.01));
}

TEST_CASE("stereo observations are visible only in front of the camera") {
  StereoRig rig;
  rig.baseline = 0.12;
  const SensorModel s(rig);
  Vector target = Vector::Zero(3);
  Vector at(3);
  at << 5.0, 0.0, 0.0;
  const Pose pose = Pose::looking_at(at, target);
  REQUIRE(s.visible(target, pose));
  const Matrix q = s.observation_cov(target, pose);
  CHECK(is_spd(q));
  Rng rng(3);
  const Observation o = s.simulate(target, target, pose, rng);
  CHECK((o.value - target).norm() < 1.0);
}

TEST_CASE("pixel corrector recovers a linear bias") {
  Rng rng(8);
  Eigen::Matrix<double, 6, 3> c = Eigen::Matrix<double, 6, 3>::Zero();
  c.row(0) << 0.5, -0.3, 0.2;
  c(1, 2) = 1.0;
  c(3, 0) = 0.5;
  c(3, 1) = 0.5;
  c(2, 0) = 0.5;
  c(2, 1) = -0.5;
  c(4, 0) = 1e-4;
  std::vector<PixelPair> data;
  std::uniform_real_distribution<double> u(-200.0, 200.0), d(5.0, 80.0);
  for (int k = 0; k < 100; ++k) {
    const double xr = u(rng), y = u(rng);
    const Pixels raw(xr + d(rng), xr, y);
    data.push_back({raw, (pixel_features(raw) * c).transpose()});
  }
  const PixelCorrector fit = fit_corrector(data);
  CHECK((fit.coeffs - c).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(fit_corrector(std::span<const PixelPair>(data.data(), 3)), IllConditionedError);
}
