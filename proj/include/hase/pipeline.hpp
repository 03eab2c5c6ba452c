#pragma once

// Orchestration: scenario -> grid -> local policies -> cluster policies ->
// fleet simulation, plus the scripted single-target baselines and CSV output.

#include "hase/cluster_dp.hpp"
#include "hase/fleet.hpp"
#include "hase/scenario.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace hase {

struct StageTimes {
  std::map<std::string, double> seconds;
  void add(const std::string& stage, double s) { seconds[stage] += s; }
};

struct TargetPlan {
  int id = 0;
  Vector mean;
  Matrix prior;
  Workspace ws;
  std::unique_ptr<LocalModel> model;
  std::shared_ptr<const LocalPolicy> policy;
};

/// Owns every planning artefact of one scenario. Local policies are shared
/// between targets whose relative geometry is identical.
class Pipeline {
 public:
  explicit Pipeline(Scenario scenario, int threads = 1);

  const Scenario& scenario() const { return scenario_; }
  const CovGrid& grid() const { return *grid_; }
  const SensorModel& sensor() const { return scenario_.sensor; }
  int num_targets() const { return static_cast<int>(targets_.size()); }
  DpConfig dp() const;

  /// Builds the target's model and policy on first use.
  TargetPlan& target(int i);
  int local_solves() const { return local_solves_; }

  /// Cluster over the given global target ids (policy cached by content hash).
  struct ClusterPlan {
    std::vector<int> ids;
    Cluster cluster;
    ClusterPolicy policy;
    std::vector<ClusterEntry> entries;
  };
  const ClusterPlan& cluster(const std::vector<int>& ids);
  int cluster_solves() const { return cluster_solves_; }

  StageTimes times;

 private:
  std::string local_key(const TargetPlan& t) const;
  std::string cluster_key(const std::vector<int>& ids);

  Scenario scenario_;
  int threads_;
  std::unique_ptr<CovGrid> grid_;
  std::vector<std::unique_ptr<TargetPlan>> targets_;
  std::map<std::string, std::shared_ptr<const LocalPolicy>> local_cache_;
  std::map<std::string, std::unique_ptr<ClusterPlan>> cluster_cache_;
  int local_solves_ = 0;
  int cluster_solves_ = 0;
};

/// Reward accounting shared by the optimal policy and the baselines.
struct PathReport {
  std::string policy;
  double reward = 0.0;                 // discounted total
  double uncertainty_reduction = 0.0;  // sum of sqrt trace drops, undiscounted
  double distance = 0.0;
  int steps = 0;
  int observations = 0;  // steps whose covariance index changed
  std::vector<LocalState> states;
  std::vector<int> actions;
};

/// Steps needed before the discount falls below 1e-12.
int baseline_horizon(double gamma);

/// Accounts a fixed action sequence from `start`.
PathReport account(const LocalModel& model, const LocalState& start, const std::vector<int>& actions,
                   const DpConfig& config);

/// Scripted policies: "closer", "static", "circle", "random" (one seeded run).
std::vector<int> baseline_actions(const LocalModel& model, const LocalState& start, const std::string& name, int horizon,
                                  Rng* rng);

LocalState single_start(Pipeline& p);

PathReport run_single(Pipeline& p);
/// Random averages scenario.single.baseline_runs seeded runs.
PathReport run_baseline(Pipeline& p, const std::string& name);

struct SweepRow {
  double rho = 0.0;
  PathReport path;
};
std::vector<SweepRow> rho_sweep(const Scenario& s, int threads);

struct ClusterRun {
  PathReport path;  // reward, uncertainty reduction, distance of the tour
  Tour tour;
  long long states = 0;
  long long state_bound = 0;
  std::vector<int> observed_target;  // target of each observation
  std::vector<double> error_mean;    // sum of error norms after k observations, k = 0..N
  std::vector<double> error_std;
};
ClusterRun run_cluster(Pipeline& p);

struct FleetRun {
  std::vector<std::vector<int>> partition;
  std::vector<FleetCluster> clusters;
  EntryGraph graph;
  FleetResult result;
  double tolerance = 0.0;
};
/// Writes JSON-lines records to `trace` when non-null.
FleetRun run_fleet(Pipeline& p, std::ostream* trace = nullptr);

nlohmann::json report_json(const PathReport& r);
nlohmann::json report_json(const ClusterRun& r);
nlohmann::json report_json(const FleetRun& r);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_error_csv(std::ostream& out, const ClusterRun& run);
void write_timeline_csv(std::ostream& out, const FleetResult& r);
/// One row per tick: every robot's position.
void write_trajectory_csv(std::ostream& out, const FleetResult& r);
void write_summary_csv(std::ostream& out, const FleetRun& run);

}  // namespace hase
