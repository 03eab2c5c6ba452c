#pragma once

#include "hase/linalg.hpp"
#include "hase/rng.hpp"
#include "hase/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hase {

/// Pixel triple (x_L, x_R, y) measured from the principal point.
using Pixels = Vector3;

/// Stereo pair with rectified, identical cameras.
struct StereoRig {
  double baseline = 1.0;
  double focal = 731.0;  // pixels
  int width = 1024;
  int height = 1024;
  double field_of_view = 70.0 * std::numbers::pi / 180.0;  // radians, full angle
  Matrix3 pixel_cov = Matrix3::Identity();
  Vector3 mount_offset = Vector3::Zero();  // camera centre relative to the pose position

  void validate() const;
  /// Focal length consistent with the horizontal field of view and image width.
  static double focal_from_fov(int width, double field_of_view);
};

/// Triangulated camera-frame point (b/d) * [(x_L + x_R)/2, y, f].
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> triangulate_pixels(Scalar baseline, Scalar focal, Scalar x_l, Scalar x_r, Scalar y) {
  const Scalar d = x_l - x_r;
  return (baseline / d) * Eigen::Matrix<Scalar, 3, 1>((x_l + x_r) / Scalar(2), y, focal);
}

/// Analytic Jacobian of triangulate_pixels with respect to (x_L, x_R, y).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> triangulation_jacobian(Scalar baseline, Scalar focal, Scalar x_l, Scalar x_r, Scalar y) {
  const Scalar d = x_l - x_r;
  const Scalar k = baseline / (d * d);
  Eigen::Matrix<Scalar, 3, 3> j;
  j << -k * x_r, k * x_l, Scalar(0),
       -k * y, k * y, baseline / d,
       -k * focal, k * focal, Scalar(0);
  return j;
}

Vector3 triangulate(const StereoRig& rig, const Pixels& px);
Matrix3 stereo_jacobian(const StereoRig& rig, const Pixels& px);
/// Inverse of triangulate: ideal pixels of a camera-frame point with Z > 0.
Pixels project_to_pixels(const StereoRig& rig, const Vector3& camera_point);
/// T J P J^T T^T.
Matrix3 stereo_cov(const StereoRig& rig, const Pixels& px, const Matrix3& rotation = Matrix3::Identity());

/// Camera-to-world transform of a rig held at `pose` (optical axis along pose.forward()).
struct CameraFrame {
  Matrix3 rotation;  // columns: camera x (right), y (down), z (optical axis) in world
  Vector3 translation;
  Vector3 to_camera(const Vector3& world) const { return rotation.transpose() * (world - translation); }
  Vector3 to_world(const Vector3& camera) const { return rotation * camera + translation; }
};
CameraFrame camera_frame(const StereoRig& rig, const Pose& pose);

/// Synthetic sensor for desk-scale tests. With r the range and u the unit
/// bearing, Q = s_r(r) u u^T + s_t(r) (I - u u^T) where
/// s_r = radial_var0 + radial_var2 r^2 + radial_var4 r^4 and
/// s_t = tangential_var0 + tangential_var2 r^2.
struct RangeBearingModel {
  double radial_var0 = 0.01;
  double radial_var2 = 0.0;
  double radial_var4 = 0.0;
  double tangential_var0 = 0.001;
  double tangential_var2 = 0.0;
  double min_range = 1e-6;
  double max_range = 1e9;
  double field_of_view = 2.0 * std::numbers::pi;

  void validate() const;
};

struct Observation {
  Vector value;  // simulated measurement of the hidden state
  Matrix q;      // covariance the estimator should use (evaluated at the planner's mean)
};

class SensorModel {
 public:
  SensorModel() = default;
  explicit SensorModel(StereoRig rig) : model_(std::move(rig)) { std::get<StereoRig>(model_).validate(); }
  explicit SensorModel(RangeBearingModel rb) : model_(std::move(rb)) { std::get<RangeBearingModel>(model_).validate(); }

  bool is_stereo() const { return std::holds_alternative<StereoRig>(model_); }
  const StereoRig& stereo() const { return std::get<StereoRig>(model_); }
  const RangeBearingModel& range_bearing() const { return std::get<RangeBearingModel>(model_); }

  bool visible(const Vector& target, const Pose& pose) const;

  /// Observation covariance in the target's dimension; throws TargetNotVisible.
  Matrix observation_cov(const Vector& target, const Pose& pose) const;
  std::optional<Matrix> try_observation_cov(const Vector& target, const Pose& pose) const;

  /// Draws a measurement of `truth`. The returned covariance is evaluated at
  /// `planner_mean`. Stereo measurements are produced by perturbing ideal
  /// pixels (optionally rounded to the pixel grid) and re-triangulating.
  Observation simulate(const Vector& truth, const Vector& planner_mean, const Pose& pose, Rng& rng,
                       bool quantize = false) const;

 private:
  std::variant<RangeBearingModel, StereoRig> model_;
};

/// Kalman update of a static state observed directly: x += K (y - x) with
/// K = sigma (sigma + q)^-1, and sigma := fuse(sigma, q).
void kalman_update(Vector& x, Matrix& sigma, const Observation& obs);

/// Largest tr Q over the poses; bounds the principal eigenvalue of every reachable covariance.
double max_observation_trace(const SensorModel& sensor, const Vector& target, std::span<const Pose> poses);

// ---------------------------------------------------------------------------
// Data-driven pixel bias correction.

struct PixelPair {
  Pixels raw;
  Pixels truth;
};

struct PixelCorrector {
  Eigen::Matrix<double, 6, 3> coeffs;
  Matrix3 residual_cov;
};

/// [1, y, d, x_L + x_R, y d, (x_L + x_R) / d] with d = x_L - x_R.
Eigen::Matrix<double, 1, 6> pixel_features(const Pixels& px);

/// Ordinary least squares of ground-truth pixels on pixel features.
PixelCorrector fit_corrector(std::span<const PixelPair> training);
Pixels correct(const PixelCorrector& corrector, const Pixels& raw);

/// Reads CSV with header x_L,x_R,y,gt_x_L,gt_x_R,gt_y.
std::vector<PixelPair> load_training_csv(const std::string& path);

}  // namespace hase
