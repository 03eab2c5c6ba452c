#pragma once

// Single-target planning over pose x covariance-grid states.

#include "hase/covgrid.hpp"
#include "hase/sensing.hpp"
#include "hase/workspace.hpp"

#include <vector>

namespace hase {

struct DpConfig {
  double gamma = 0.9;
  double rho = 0.5;
  double vi_tolerance = 1e-6;
  int max_sweeps = 10000;
  int threads = 1;

  void validate() const;
};

struct LocalState {
  int pose = 0;
  int cov = 0;
  bool operator==(const LocalState&) const = default;
};

/// Covariance after observing the target from `pose`. An update that would not
/// strictly lower the trace after projection (including the zero member and
/// poses that cannot see the target) leaves the index unchanged.
int observe(const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean, const Pose& pose, int cov);

LocalState step(const Workspace& ws, const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean,
                const LocalState& state, int action);

/// (1 - rho) sqrt(max(0, tr before - tr after)) - rho * travel.
double reward(const Workspace& ws, const CovGrid& grid, const LocalState& before, const LocalState& after, int action,
              const DpConfig& config);

/// Precomputed transition tables of one target. State index = pose * |C| + cov.
class LocalModel {
 public:
  LocalModel(const Workspace& ws, const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean);

  const Workspace& workspace() const { return *ws_; }
  const CovGrid& grid() const { return *grid_; }
  const Vector& target_mean() const { return mean_; }

  int num_poses() const { return ws_->size(); }
  int num_covs() const { return grid_->size(); }
  int num_states() const { return num_poses() * num_covs(); }
  int num_actions() const { return ws_->num_actions; }

  int index(const LocalState& s) const { return s.pose * num_covs() + s.cov; }
  LocalState state(int index) const { return {index / num_covs(), index % num_covs()}; }

  LocalState step(const LocalState& s, int action) const;
  double reward(const LocalState& s, int action, double rho) const;
  /// sqrt of the trace reduction earned by observing from `pose` at covariance `cov`.
  double gain(int pose, int cov) const { return gain_[slot(pose, cov)]; }
  int observed(int pose, int cov) const { return next_cov_[slot(pose, cov)]; }
  bool visible(int pose) const { return visible_[static_cast<std::size_t>(pose)] != 0; }

 private:
  std::size_t slot(int pose, int cov) const { return static_cast<std::size_t>(pose * num_covs() + cov); }

  const Workspace* ws_;
  const CovGrid* grid_;
  Vector mean_;
  std::vector<int> next_cov_;
  std::vector<double> gain_;
  std::vector<char> visible_;
};

struct LocalPolicy {
  Vector target_mean;
  DpConfig config;
  int num_poses = 0;
  int num_covs = 0;
  std::vector<double> values;
  std::vector<int> actions;
  std::vector<double> residuals;  // sup-norm Bellman residual after each sweep
  int sweeps = 0;

  int num_states() const { return num_poses * num_covs; }
  int action(const LocalState& s) const { return actions[static_cast<std::size_t>(s.pose * num_covs + s.cov)]; }
  double value(const LocalState& s) const { return values[static_cast<std::size_t>(s.pose * num_covs + s.cov)]; }
};

/// Jacobi value iteration to the configured residual, then greedy extraction
/// (ties to the lowest action index) polished by exact policy evaluation.
LocalPolicy solve(const LocalModel& model, const DpConfig& config);

/// Greedy action for state `s` under value table `values`; ties to the lowest action.
int greedy_action(const LocalModel& model, const std::vector<double>& values, int s, const DpConfig& config);

struct Rollout {
  std::vector<LocalState> states;  // states[0] = start; states.size() == K + 1
  std::vector<int> actions;
  std::vector<double> rewards;
  bool converged = true;  // false when max_steps cut the rollout short

  int steps() const { return static_cast<int>(actions.size()); }
  double total(double gamma) const;
};

/// Follows the policy until a fixed point. Throws OptimalityViolation when the
/// trajectory enters a cycle through two or more states. max_steps < 0 means |S|.
Rollout rollout(const LocalPolicy& policy, const LocalModel& model, const LocalState& start, int max_steps = -1);

}  // namespace hase
