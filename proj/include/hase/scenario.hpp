#pragma once

// Scenario files: everything a run needs, with every default spelled out by
// scenario_to_json so a loaded scenario can be printed back in full.

#include "hase/covgrid.hpp"
#include "hase/local_dp.hpp"
#include "hase/sensing.hpp"
#include "hase/workspace.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hase {

struct WorkspaceSpec {
  std::string type = "polar";  // polar | shell | line | explicit
  double r_min = 1.0;
  double r_max = 3.0;
  int n_radii = 3;
  double step_deg = 45.0;
  double sector_start_deg = 0.0;
  double sector_end_deg = 360.0;
  int n_shells = 1;
  int views = 8;
  bool upper_half = true;
  std::vector<double> line_offsets;
  double standoff = 1.0;
  std::vector<Vector> offsets;
  ActionModel actions;

  /// Poses around `target`; shell views draw from `rng`.
  std::vector<Pose> generate(const Vector& target, Rng& rng) const;
  /// Largest distance from the target to any generated pose.
  double reach() const;
};

struct TargetSpec {
  Vector mean;
  std::optional<Matrix> cov;  // empty: prior_scale * I, see ScenarioPrior
};

struct TargetGenerator {
  std::string kind = "explicit";  // explicit | uniform | grouped
  int count = 0;
  int groups = 1;
  Vector extent;            // targets (or group centres) lie in [0, extent]
  double group_radius = 0.0;
  double min_separation = 0.0;
};

struct FleetSpec {
  int robots = 1;
  std::vector<Vector> starts;  // empty: every robot starts at the depot
  Vector depot;
  double comm_range = 1e9;
  double step = 0.0;
  int ticks_per_round = 1;
  int rounds_per_tick = 1;
  long long stall_ticks = 0;
};

struct SimSpec {
  int monte_carlo = 100;
  bool noiseless = false;
  bool quantize = false;
};

struct SingleSpec {
  int start_pose = -1;  // -1: first boundary pose
  int baseline_runs = 100;
};

struct Scenario {
  int version = 1;
  std::uint64_t seed = 1;
  int dim = 2;
  TargetGenerator generator;
  std::vector<TargetSpec> targets;  // expanded
  std::optional<double> prior_scale;  // empty: lambda_max of the grid
  WorkspaceSpec workspace;
  nlohmann::json sensor_spec;
  SensorModel sensor;
  GridParams grid;
  bool lambda_auto = true;
  DpConfig dp;
  int m_max = 8;
  FleetSpec fleet;
  SimSpec sim;
  SingleSpec single;
  std::vector<double> rho_sweep{0.0, 0.25, 0.5, 0.75, 1.0};

  void validate() const;
};

/// Parses and validates; throws ScenarioError naming a JSON pointer.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Complete configuration including defaults (targets expanded).
nlohmann::json scenario_to_json(const Scenario& s);

/// Re-expands generated targets for a different root seed.
void reseed(Scenario& s, std::uint64_t seed);

SensorModel parse_sensor(const nlohmann::json& spec, const std::string& pointer);

}  // namespace hase
