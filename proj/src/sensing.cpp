#include "hase/sensing.hpp"

#include "hase/error.hpp"

#include <Eigen/QR>

#include <cmath>
#include <fstream>
#include <sstream>

namespace hase {

void StereoRig::validate() const {
  if (!(baseline > 0.0)) throw ParameterError("stereo: baseline must be positive");
  if (!(focal > 0.0)) throw ParameterError("stereo: focal length must be positive");
  if (width < 1 || height < 1) throw ParameterError("stereo: resolution must be positive");
  if (!(field_of_view > 0.0) || field_of_view >= std::numbers::pi)
    throw ParameterError("stereo: field of view must lie in (0, pi)");
  require_psd(pixel_cov, "stereo pixel covariance");
}

double StereoRig::focal_from_fov(int width, double field_of_view) {
  return 0.5 * width / std::tan(0.5 * field_of_view);
}

Vector3 triangulate(const StereoRig& rig, const Pixels& px) {
  if (!(px(0) - px(1) > 0.0)) throw DegenerateGeometryError("triangulate: disparity must be positive");
  return triangulate_pixels(rig.baseline, rig.focal, px(0), px(1), px(2));
}

Matrix3 stereo_jacobian(const StereoRig& rig, const Pixels& px) {
  if (!(px(0) - px(1) > 0.0)) throw DegenerateGeometryError("stereo_jacobian: disparity must be positive");
  return triangulation_jacobian(rig.baseline, rig.focal, px(0), px(1), px(2));
}

Pixels project_to_pixels(const StereoRig& rig, const Vector3& p) {
  if (!(p.z() > 0.0)) throw DegenerateGeometryError("project_to_pixels: point behind the camera");
  const double d = rig.baseline * rig.focal / p.z();
  const double mid = rig.focal * p.x() / p.z();
  return {mid + 0.5 * d, mid - 0.5 * d, rig.focal * p.y() / p.z()};
}

Matrix3 stereo_cov(const StereoRig& rig, const Pixels& px, const Matrix3& rotation) {
  const Matrix3 j = stereo_jacobian(rig, px);
  const Matrix3 m = rotation * j * rig.pixel_cov * j.transpose() * rotation.transpose();
  return 0.5 * (m + m.transpose());
}

CameraFrame camera_frame(const StereoRig& rig, const Pose& pose) {
  const Vector3 z = pose.forward();
  const Vector3 x(std::sin(pose.yaw), -std::cos(pose.yaw), 0.0);
  const Vector3 y = z.cross(x);
  CameraFrame frame;
  frame.rotation.col(0) = x;
  frame.rotation.col(1) = y;
  frame.rotation.col(2) = z;
  frame.translation = pose.position3() + rig.mount_offset;
  return frame;
}

void RangeBearingModel::validate() const {
  if (radial_var0 < 0 || radial_var2 < 0 || radial_var4 < 0 || tangential_var0 < 0 || tangential_var2 < 0)
    throw ParameterError("range-bearing: variance coefficients must be non-negative");
  if (!(radial_var0 + radial_var2 + radial_var4 > 0) || !(tangential_var0 + tangential_var2 > 0))
    throw ParameterError("range-bearing: variances must not vanish identically");
  if (!(min_range > 0.0) || !(max_range > min_range))
    throw ParameterError("range-bearing: need 0 < min_range < max_range");
  if (!(field_of_view > 0.0)) throw ParameterError("range-bearing: field of view must be positive");
}

namespace {

struct StereoView {
  CameraFrame frame;
  Vector3 camera_point;
  Pixels pixels;
};

std::optional<StereoView> stereo_view(const StereoRig& rig, const Vector& target, const Pose& pose) {
  StereoView v;
  v.frame = camera_frame(rig, pose);
  v.camera_point = v.frame.to_camera(lift3(target));
  const Vector3& p = v.camera_point;
  if (!(p.z() > 0.0)) return std::nullopt;
  if (std::atan2(p.head<2>().norm(), p.z()) > 0.5 * rig.field_of_view) return std::nullopt;
  v.pixels = project_to_pixels(rig, p);
  if (v.pixels(0) - v.pixels(1) < 1.0) return std::nullopt;
  const double half_w = 0.5 * rig.width;
  const double half_h = 0.5 * rig.height;
  if (std::abs(v.pixels(0)) > half_w || std::abs(v.pixels(1)) > half_w || std::abs(v.pixels(2)) > half_h)
    return std::nullopt;
  return v;
}

struct Bearing {
  Vector u;
  double range;
};

std::optional<Bearing> range_bearing_view(const RangeBearingModel& m, const Vector& target, const Pose& pose) {
  const Eigen::Index n = target.size();
  const Vector3 diff3 = lift3(target) - pose.position3();
  const Vector diff = diff3.head(std::min<Eigen::Index>(n, 3));
  const double r = diff.norm();
  if (r < m.min_range || r > m.max_range) return std::nullopt;
  if (m.field_of_view < 2.0 * std::numbers::pi) {
    const double c = std::clamp(pose.forward().dot(diff3.normalized()), -1.0, 1.0);
    if (std::acos(c) > 0.5 * m.field_of_view) return std::nullopt;
  }
  return Bearing{diff / r, r};
}

}  // namespace

bool SensorModel::visible(const Vector& target, const Pose& pose) const {
  if (const auto* rig = std::get_if<StereoRig>(&model_)) return stereo_view(*rig, target, pose).has_value();
  return range_bearing_view(std::get<RangeBearingModel>(model_), target, pose).has_value();
}

std::optional<Matrix> SensorModel::try_observation_cov(const Vector& target, const Pose& pose) const {
  const Eigen::Index n = target.size();
  if (const auto* rig = std::get_if<StereoRig>(&model_)) {
    if (n < 1 || n > 3) throw DomainError("stereo observation: target dimension must be 1..3");
    const auto view = stereo_view(*rig, target, pose);
    if (!view) return std::nullopt;
    const Matrix3 q = stereo_cov(*rig, view->pixels, view->frame.rotation);
    return Matrix(q.topLeftCorner(n, n));
  }
  const auto& m = std::get<RangeBearingModel>(model_);
  if (n < 1 || n > 3) throw DomainError("range-bearing observation: target dimension must be 1..3");
  const auto view = range_bearing_view(m, target, pose);
  if (!view) return std::nullopt;
  const double r2 = view->range * view->range;
  const double radial = m.radial_var0 + m.radial_var2 * r2 + m.radial_var4 * r2 * r2;
  const double tangential = m.tangential_var0 + m.tangential_var2 * r2;
  const Matrix uu = view->u * view->u.transpose();
  const Matrix q = radial * uu + tangential * (Matrix::Identity(n, n) - uu);
  return symmetrize(q);
}

Matrix SensorModel::observation_cov(const Vector& target, const Pose& pose) const {
  auto q = try_observation_cov(target, pose);
  if (!q) throw TargetNotVisible("target is not visible from the requested pose");
  return *q;
}

Observation SensorModel::simulate(const Vector& truth, const Vector& planner_mean, const Pose& pose, Rng& rng,
                                  bool quantize) const {
  Observation obs;
  obs.q = observation_cov(planner_mean, pose);
  const Eigen::Index n = truth.size();
  if (const auto* rig = std::get_if<StereoRig>(&model_)) {
    const auto view = stereo_view(*rig, truth, pose);
    if (!view) throw TargetNotVisible("simulate: target is not visible");
    const Matrix3 root = psd_sqrt(rig->pixel_cov);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Pixels px = view->pixels + root * standard_normal(3, rng);
      if (quantize) px = px.array().round().matrix();
      if (px(0) - px(1) <= 0.0) continue;
      const Vector3 world = view->frame.to_world(triangulate(*rig, px));
      obs.value = world.head(n);
      return obs;
    }
    throw DegenerateGeometryError("simulate: could not draw a positive disparity");
  }
  const Matrix q_truth = observation_cov(truth, pose);
  obs.value = truth + psd_sqrt(q_truth) * standard_normal(n, rng);
  return obs;
}

void kalman_update(Vector& x, Matrix& sigma, const Observation& obs) {
  const Matrix gain = sigma * spd_inverse(Matrix(sigma + obs.q), "innovation covariance");
  x += gain * (obs.value - x);
  sigma = fuse(sigma, obs.q);
}

double max_observation_trace(const SensorModel& sensor, const Vector& target, std::span<const Pose> poses) {
  double best = 0.0;
  for (const auto& pose : poses)
    if (const auto q = sensor.try_observation_cov(target, pose)) best = std::max(best, q->trace());
  return best;
}

Eigen::Matrix<double, 1, 6> pixel_features(const Pixels& px) {
  const double d = px(0) - px(1);
  if (!(d > 0.0)) throw DegenerateGeometryError("pixel_features: disparity must be positive");
  const double s = px(0) + px(1);
  Eigen::Matrix<double, 1, 6> row;
  row << 1.0, px(2), d, s, px(2) * d, s / d;
  return row;
}

PixelCorrector fit_corrector(std::span<const PixelPair> training) {
  const auto n = static_cast<Eigen::Index>(training.size());
  if (n < 7) throw IllConditionedError("fit_corrector: need at least 7 training samples");
  Matrix x(n, 6);
  Matrix y(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = pixel_features(training[static_cast<std::size_t>(i)].raw);
    y.row(i) = training[static_cast<std::size_t>(i)].truth.transpose();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-12);
  if (qr.rank() < 6) throw IllConditionedError("fit_corrector: feature matrix is rank deficient");
  PixelCorrector out;
  out.coeffs = qr.solve(y);
  const Matrix resid = y - x * out.coeffs;
  const Eigen::RowVectorXd mean = resid.colwise().mean();
  const Matrix centered = resid.rowwise() - mean;
  out.residual_cov = symmetrize(centered.transpose() * centered / static_cast<double>(n - 1));
  return out;
}

Pixels correct(const PixelCorrector& corrector, const Pixels& raw) {
  return (pixel_features(raw) * corrector.coeffs).transpose();
}

std::vector<PixelPair> load_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open training file " + path);
  std::vector<PixelPair> out;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find("x_L") != std::string::npos) continue;
    }
    std::stringstream ss(line);
    std::string cell;
    double v[6];
    int k = 0;
    while (k < 6 && std::getline(ss, cell, ',')) v[k++] = std::stod(cell);
    if (k != 6) throw ConfigurationError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    out.push_back({Pixels(v[0], v[1], v[2]), Pixels(v[3], v[4], v[5])});
  }
  return out;
}

}  // namespace hase
