#pragma once

// Cluster-level planning: which target to sense next and for how long, over
// states (reward bitmask, current target, entry point, depth along the local
// optimal trajectory from that entry).

#include "hase/local_dp.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace hase {

/// One LocalState per boundary pose, with covariance project(prior_cov).
std::vector<LocalState> entry_points(const Workspace& ws, const Matrix& prior_cov, const CovGrid& grid);

struct ClusterTarget {
  int id = 0;  // global target id, carried into tours
  Matrix prior_cov;
  const LocalModel* model = nullptr;
  const LocalPolicy* policy = nullptr;
};

struct Cluster {
  std::vector<ClusterTarget> targets;
  std::vector<std::vector<LocalState>> entries;  // [target][entry]
  std::vector<std::vector<Rollout>> rollouts;    // [target][entry]

  int size() const { return static_cast<int>(targets.size()); }
  /// Local state after `depth` optimal steps from entry j of target i (clamped at K).
  const LocalState& rollout_state(int i, int j, int depth) const;
  const Vector& rollout_position(int i, int j, int depth) const;
  int horizon(int i, int j) const { return rollouts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].steps(); }
};

/// Builds entry points and the cached local rollouts. Throws ClusterSizeError
/// above m_max targets and ConfigurationError if workspaces overlap.
Cluster make_cluster(std::vector<ClusterTarget> targets, int m_max = 8);

struct ClusterState {
  std::uint32_t visited = 0;  // bit i set: target i can still earn reward
  int current = 0;
  int entry = 0;
  int depth = 0;
  bool operator==(const ClusterState&) const = default;
  std::uint64_t key() const;
};

/// Action l == current continues the local trajectory; any other l moves to the
/// nearest entry of target l and clears the bit of the departed target.
ClusterState transition(const Cluster& c, const ClusterState& s, int action);
double cluster_reward(const Cluster& c, const ClusterState& s, int action, const DpConfig& config);

/// Upper bound 2^M * M * max|E| * (1 + max K) on the cluster state count.
long long cluster_state_bound(const Cluster& c);

struct TourStop {
  Vector position;
  int target = 0;   // index within the cluster
  int global = 0;   // global target id
  int pose = 0;
  int observations = 0;  // observations taken on arrival and while dwelling
};

struct Tour {
  int target = 0;  // entry target (cluster index)
  int entry = 0;
  std::vector<TourStop> stops;  // consecutive stops at one pose are merged
  std::vector<double> arc;      // arc length at each stop
  double length = 0.0;
  double reward = 0.0;  // discounted cluster reward along the tour
  double uncertainty_reduction = 0.0;  // undiscounted sum of sqrt trace drops
  int steps = 0;

  /// Position at arc length l in [0, length].
  Vector at(double l) const;
  const Vector& start() const { return stops.front().position; }
  const Vector& end() const { return stops.back().position; }
  int observation_count() const;
};

struct ClusterPolicy {
  std::vector<ClusterState> states;
  std::unordered_map<std::uint64_t, int> index;
  std::vector<int> actions;
  std::vector<double> values;
  std::vector<std::vector<Tour>> tours;  // [target][entry]
  int sweeps = 0;

  int find(const ClusterState& s) const;
  double value(const ClusterState& s) const { return values[static_cast<std::size_t>(find(s))]; }
  int action(const ClusterState& s) const { return actions[static_cast<std::size_t>(find(s))]; }
};

/// Value iteration over the states reachable from every entry with all bits
/// set; greedy actions prefer continuing, then the lowest target index.
ClusterPolicy solve_cluster(const Cluster& c, const DpConfig& config);

Tour tour(const ClusterPolicy& policy, const Cluster& c, int target, int entry, const DpConfig& config);

/// Entry points of the whole cluster: (target, entry) pairs whose pose lies on
/// the boundary of the convex hull of all the cluster's pose positions.
struct ClusterEntry {
  int target = 0;
  int entry = 0;
  Vector position;
};
std::vector<ClusterEntry> cluster_entries(const Cluster& c);

}  // namespace hase
