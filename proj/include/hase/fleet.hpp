#pragma once

// Multi-robot layer: target partitioning, the entry-point graph, and a
// deterministic simulation of the busy/transit/done automaton coordinated by
// a neighbourhood auction.

#include "hase/cluster_dp.hpp"
#include "hase/rng.hpp"
#include "hase/sensing.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hase {

/// Recursive median bisection along the coordinate of largest spread until
/// every part has at most m_max targets. Parts are listed depth first.
std::vector<std::vector<int>> partition_targets(const std::vector<Vector>& means, int m_max);

/// A cluster tour started from one cluster entry, with the sensing pose of every stop.
struct Route {
  Vector entry;
  Tour tour;
  std::vector<Pose> views;  // one per tour stop
};

struct FleetCluster {
  std::vector<int> targets;  // global target ids
  std::vector<Route> routes;
};

inline constexpr int kNone = -1;
inline constexpr int kDepot = -2;

struct GraphEdge {
  int cluster = 0;
  int route = 0;  // closest entry of `cluster` to the tour end
  double gap = 0.0;
  double cost = 0.0;  // tour length + gap
};

struct EntryGraph {
  Vector depot;
  std::vector<std::vector<std::vector<GraphEdge>>> edges;  // [cluster][route] -> one edge per other cluster

  /// Closest entry of `cluster` to `from`; ties to the lowest route index.
  int nearest_route(const std::vector<FleetCluster>& clusters, int cluster, const Vector& from) const;
  double max_cost() const;
  double median_cost() const;
};

EntryGraph build_graph(const std::vector<FleetCluster>& clusters, const Vector& depot);

enum class Mode { busy, transit, done };
const char* mode_name(Mode m);

struct FleetConfig {
  std::vector<Vector> starts;  // one per robot
  Vector depot;
  double comm_range = 1e9;
  double step = 0.0;          // <= 0 selects median edge cost / 50
  int ticks_per_round = 1;    // a coordination block every this many ticks
  int rounds_per_tick = 1;    // rounds in each coordination block
  long long stall_ticks = 0;  // <= 0 selects 10 * max edge cost / step
  bool noiseless = false;
  bool quantize = false;

  void validate() const;
};

struct TargetTruth {
  Vector truth;
  Vector prior_mean;
  Matrix prior_cov;
};

struct RobotState {
  int id = 0;
  Vector position;
  Mode mode = Mode::transit;
  int c_curr = kNone;
  int c_next = kNone;
  int route = 0;      // route of c_curr while busy, of c_next while in transit
  double arc = 0.0;   // arc length along the current tour
  int stop = 0;       // next tour stop not yet passed
  int pending = 0;    // observations left at the current stop
  bool arrived = false;
  double bid = 0.0;
  std::vector<char> taken;
  std::vector<int> history;  // clusters sensed, in order
  double distance = 0.0;

  int free_count() const;
};

struct AssignmentEvent {
  long long tick = 0;
  int robot = 0;
  int cluster = 0;  // kDepot for depot assignments
  std::string event;  // claim, lose, commit, complete, done
};

struct ObservationRecord {
  long long tick = 0;
  int robot = 0;
  int target = 0;
  Vector estimate;
  double error_trace = 0.0;  // squared norm of the estimation error
  double cov_trace = 0.0;    // trace of the filter covariance
};

struct FleetResult {
  long long ticks = 0;
  long long rounds = 0;
  std::vector<RobotState> robots;
  std::vector<int> sensed_count;  // per cluster
  std::vector<Vector> estimates;  // per target
  std::vector<Matrix> covariances;
  std::vector<double> error_trace;
  std::vector<ObservationRecord> observations;
  std::vector<AssignmentEvent> events;
  std::vector<std::vector<Vector>> positions;  // [tick][robot]
  double step = 0.0;

  bool exclusive() const;
};

/// Runs the automaton until every robot is done. Per-tick robot records and
/// per-observation records are written to `trace` as JSON lines when non-null.
/// Throws StallError if no robot changes state for the configured number of ticks.
FleetResult simulate_fleet(const std::vector<FleetCluster>& clusters, const EntryGraph& graph,
                           const SensorModel& sensor, const std::vector<TargetTruth>& targets,
                           const FleetConfig& config, std::uint64_t seed, std::ostream* trace = nullptr);

}  // namespace hase
