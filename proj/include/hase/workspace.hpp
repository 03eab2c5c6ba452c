#pragma once

#include "hase/rng.hpp"
#include "hase/types.hpp"

#include <vector>

namespace hase {

/// Finite pose space of one target with deterministic goto actions.
///
/// Action 0 is "remain stationary" when enabled; the remaining actions move to
/// the k-th nearest other pose (ties by pose index). Travel cost is the
/// Euclidean distance between the two positions.
struct Workspace {
  std::vector<Pose> poses;
  int num_actions = 0;
  bool has_stationary = true;
  std::vector<int> transition;  // [pose * num_actions + action] -> pose
  std::vector<double> travel;   // [pose * num_actions + action] -> distance
  std::vector<int> boundary;    // poses on the boundary of the convex hull of positions

  int size() const { return static_cast<int>(poses.size()); }
  int next(int pose, int action) const { return transition[static_cast<std::size_t>(pose * num_actions + action)]; }
  double cost(int pose, int action) const { return travel[static_cast<std::size_t>(pose * num_actions + action)]; }
  const Vector& position(int pose) const { return poses[static_cast<std::size_t>(pose)].position; }

  void validate() const;
};

struct ActionModel {
  int neighbors = 0;  // goto actions per pose; 0 means every other pose
  bool stationary = true;
};

Workspace make_workspace(std::vector<Pose> poses, const ActionModel& actions);

/// Indices of points on the boundary of their convex hull (vertices and points
/// on edges/faces). Collinear sets contribute only their two end points.
std::vector<int> hull_boundary(const std::vector<Vector>& positions);

// Pose generators. Every generated pose looks at `target`.

/// Planar polar grid: n_radii equally spaced radii in [r_min, r_max] and
/// angles sector_start + i * step within [sector_start, sector_end] (degrees).
std::vector<Pose> polar_poses(const Vector& target, double r_min, double r_max, int n_radii, double step_deg,
                              double sector_start_deg = 0.0, double sector_end_deg = 360.0);

/// Concentric shells (spheres in 3-D, circles in 2-D) with uniformly random
/// viewpoints; views are split across shells in proportion to shell area.
std::vector<Pose> shell_poses(const Vector& target, int dim, double r_min, double r_max, int n_shells,
                              int total_views, bool upper_half, Rng& rng);

/// Poses at target + offsets[i] * e_0 + standoff * e_1.
std::vector<Pose> line_poses(const Vector& target, const std::vector<double>& offsets, double standoff);

/// Poses at target + each relative offset.
std::vector<Pose> offset_poses(const Vector& target, const std::vector<Vector>& offsets);

}  // namespace hase
