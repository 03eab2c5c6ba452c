#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hase {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Sensor pose: a position in the workspace plus the heading of the optical
/// axis (yaw about +z, pitch above the xy-plane).
struct Pose {
  Vector position;
  double yaw = 0.0;
  double pitch = 0.0;

  Pose() = default;
  Pose(Vector p, double yaw_, double pitch_ = 0.0)
      : position(std::move(p)), yaw(wrap_angle(yaw_)), pitch(pitch_) {}

  /// Unit optical axis in world coordinates (always 3-D).
  Vector3 forward() const {
    return {std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
            std::sin(pitch)};
  }

  /// Position lifted into 3-D (planar workspaces sit at z = 0).
  Vector3 position3() const {
    Vector3 p = Vector3::Zero();
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, position.size()); ++i) p(i) = position(i);
    return p;
  }

  /// Pose at `position` whose optical axis points at `target` (first 3 coords used).
  static Pose looking_at(const Vector& position, const Vector& target);
};

inline Vector3 lift3(const Vector& v) {
  Vector3 p = Vector3::Zero();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, v.size()); ++i) p(i) = v(i);
  return p;
}

inline Pose Pose::looking_at(const Vector& position, const Vector& target) {
  const Vector3 dir = lift3(target) - lift3(position);
  const double horiz = std::hypot(dir.x(), dir.y());
  const double yaw = horiz > 0.0 ? std::atan2(dir.y(), dir.x()) : 0.0;
  const double pitch = std::atan2(dir.z(), horiz);
  return Pose(position, yaw, pitch);
}

/// Gaussian prior over one hidden state.
struct TargetBelief {
  Vector mean;
  Matrix cov;
};

}  // namespace hase
