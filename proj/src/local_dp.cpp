#include "hase/local_dp.hpp"

#include "hase/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace hase {

void DpConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("dp: gamma must lie in [0, 1)");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("dp: rho must lie in [0, 1]");
  if (!(vi_tolerance > 0.0)) throw ParameterError("dp: vi_tolerance must be positive");
  if (max_sweeps < 1) throw ParameterError("dp: max_sweeps must be >= 1");
  if (threads < 1) throw ParameterError("dp: threads must be >= 1");
}

int observe(const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean, const Pose& pose, int cov) {
  if (cov == CovGrid::zero_index()) return cov;
  const auto q = sensor.try_observation_cov(target_mean, pose);
  if (!q) return cov;
  const int next = grid.project(fuse(grid.member(cov), *q));
  const double slack = 1e-12 * grid.params().lambda_max;
  return grid.trace(next) < grid.trace(cov) - slack ? next : cov;
}

LocalState step(const Workspace& ws, const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean,
                const LocalState& state, int action) {
  const int pose = ws.next(state.pose, action);
  return {pose, observe(grid, sensor, target_mean, ws.poses[static_cast<std::size_t>(pose)], state.cov)};
}

double reward(const Workspace& ws, const CovGrid& grid, const LocalState& before, const LocalState& after, int action,
              const DpConfig& config) {
  const double drop = std::max(0.0, grid.trace(before.cov) - grid.trace(after.cov));
  return (1.0 - config.rho) * std::sqrt(drop) - config.rho * ws.cost(before.pose, action);
}

LocalModel::LocalModel(const Workspace& ws, const CovGrid& grid, const SensorModel& sensor, const Vector& target_mean)
    : ws_(&ws), grid_(&grid), mean_(target_mean) {
  if (target_mean.size() != grid.dim()) throw ConfigurationError("target dimension does not match the grid");
  ws.validate();
  next_cov_.resize(static_cast<std::size_t>(num_states()));
  gain_.resize(next_cov_.size());
  visible_.resize(static_cast<std::size_t>(num_poses()));
  for (int p = 0; p < num_poses(); ++p) {
    const auto q = sensor.try_observation_cov(target_mean, ws.poses[static_cast<std::size_t>(p)]);
    visible_[static_cast<std::size_t>(p)] = q.has_value();
    for (int c = 0; c < num_covs(); ++c) {
      int next = c;
      if (q && c != CovGrid::zero_index()) {
        const int cand = grid.project(fuse(grid.member(c), *q));
        if (grid.trace(cand) < grid.trace(c) - 1e-12 * grid.params().lambda_max) next = cand;
      }
      next_cov_[slot(p, c)] = next;
      gain_[slot(p, c)] = std::sqrt(std::max(0.0, grid.trace(c) - grid.trace(next)));
    }
  }
}

LocalState LocalModel::step(const LocalState& s, int action) const {
  const int pose = ws_->next(s.pose, action);
  return {pose, next_cov_[slot(pose, s.cov)]};
}

double LocalModel::reward(const LocalState& s, int action, double rho) const {
  const int pose = ws_->next(s.pose, action);
  return (1.0 - rho) * gain_[slot(pose, s.cov)] - rho * ws_->cost(s.pose, action);
}

namespace {

double q_value(const LocalModel& m, const std::vector<double>& v, int s, int a, const DpConfig& cfg) {
  const LocalState st = m.state(s);
  const LocalState nx = m.step(st, a);
  return m.reward(st, a, cfg.rho) + cfg.gamma * v[static_cast<std::size_t>(m.index(nx))];
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 4096) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// Exact value of a deterministic stationary policy: every trajectory ends in
// a cycle, whose values follow from a finite geometric sum.
std::vector<double> evaluate(const LocalModel& m, const std::vector<int>& actions, const DpConfig& cfg) {
  const int n = m.num_states();
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  std::vector<char> color(static_cast<std::size_t>(n), 0);  // 0 new, 1 on path, 2 done
  std::vector<int> path;
  auto next_of = [&](int s) { return m.index(m.step(m.state(s), actions[static_cast<std::size_t>(s)])); };
  auto rew_of = [&](int s) { return m.reward(m.state(s), actions[static_cast<std::size_t>(s)], cfg.rho); };

  for (int root = 0; root < n; ++root) {
    if (color[static_cast<std::size_t>(root)]) continue;
    path.clear();
    int s = root;
    while (color[static_cast<std::size_t>(s)] == 0) {
      color[static_cast<std::size_t>(s)] = 1;
      path.push_back(s);
      s = next_of(s);
    }
    std::size_t tail = path.size();
    if (color[static_cast<std::size_t>(s)] == 1) {
      // s closes a cycle that starts at its position on the path
      const auto start = static_cast<std::size_t>(std::find(path.begin(), path.end(), s) - path.begin());
      double sum = 0.0, disc = 1.0;
      for (std::size_t i = start; i < path.size(); ++i) {
        sum += disc * rew_of(path[i]);
        disc *= cfg.gamma;
      }
      v[static_cast<std::size_t>(s)] = sum / (1.0 - disc);
      color[static_cast<std::size_t>(s)] = 2;
      for (std::size_t i = path.size(); i-- > start + 1;) {
        const int c = path[i];
        v[static_cast<std::size_t>(c)] = rew_of(c) + cfg.gamma * v[static_cast<std::size_t>(next_of(c))];
        color[static_cast<std::size_t>(c)] = 2;
      }
      tail = start;
    }
    for (std::size_t i = tail; i-- > 0;) {
      const int c = path[i];
      v[static_cast<std::size_t>(c)] = rew_of(c) + cfg.gamma * v[static_cast<std::size_t>(next_of(c))];
      color[static_cast<std::size_t>(c)] = 2;
    }
  }
  return v;
}

double bellman_residual(const LocalModel& m, const std::vector<double>& v, const DpConfig& cfg) {
  double res = 0.0;
  for (int s = 0; s < m.num_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m.num_actions(); ++a) best = std::max(best, q_value(m, v, s, a, cfg));
    res = std::max(res, std::abs(best - v[static_cast<std::size_t>(s)]));
  }
  return res;
}

}  // namespace

int greedy_action(const LocalModel& model, const std::vector<double>& values, int s, const DpConfig& config) {
  int best_a = 0;
  double best = q_value(model, values, s, 0, config);
  for (int a = 1; a < model.num_actions(); ++a) {
    const double q = q_value(model, values, s, a, config);
    if (q > best + 1e-9 * std::max(1.0, std::abs(best))) {
      best = q;
      best_a = a;
    }
  }
  return best_a;
}

LocalPolicy solve(const LocalModel& model, const DpConfig& config) {
  config.validate();
  const int n = model.num_states();
  LocalPolicy out;
  out.target_mean = model.target_mean();
  out.config = config;
  out.num_poses = model.num_poses();
  out.num_covs = model.num_covs();

  std::vector<double> v(static_cast<std::size_t>(n), 0.0), next(v.size());
  std::vector<double> chunk_res(static_cast<std::size_t>(config.threads), 0.0);
  double residual = std::numeric_limits<double>::infinity();
  while (out.sweeps < config.max_sweeps) {
    std::fill(chunk_res.begin(), chunk_res.end(), 0.0);
    const int per = (n + config.threads - 1) / config.threads;
    parallel_for(n, config.threads, [&](int lo, int hi) {
      double res = 0.0;
      for (int s = lo; s < hi; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < model.num_actions(); ++a) best = std::max(best, q_value(model, v, s, a, config));
        next[static_cast<std::size_t>(s)] = best;
        res = std::max(res, std::abs(best - v[static_cast<std::size_t>(s)]));
      }
      chunk_res[static_cast<std::size_t>(std::min(lo / std::max(per, 1), config.threads - 1))] = res;
    });
    residual = *std::max_element(chunk_res.begin(), chunk_res.end());
    v.swap(next);
    ++out.sweeps;
    out.residuals.push_back(residual);
    if (residual < config.vi_tolerance) break;
  }
  if (!(residual < config.vi_tolerance))
    throw NonConvergedError("value iteration did not reach the tolerance", residual);

  // Greedy extraction, then policy iteration on the exact policy values.
  std::vector<int> actions(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) actions[static_cast<std::size_t>(s)] = greedy_action(model, v, s, config);
  for (int round = 0; round < 100; ++round) {
    std::vector<double> exact = evaluate(model, actions, config);
    bool stable = true;
    for (int s = 0; s < n; ++s) {
      const int a = greedy_action(model, exact, s, config);
      if (a != actions[static_cast<std::size_t>(s)]) {
        const double gain = q_value(model, exact, s, a, config) -
                            q_value(model, exact, s, actions[static_cast<std::size_t>(s)], config);
        if (gain > 1e-9 * std::max(1.0, std::abs(exact[static_cast<std::size_t>(s)]))) {
          actions[static_cast<std::size_t>(s)] = a;
          stable = false;
        }
      }
    }
    v.swap(exact);
    if (stable) break;
  }
  // Apply the tie rule against the exact values.
  for (int s = 0; s < n; ++s) actions[static_cast<std::size_t>(s)] = greedy_action(model, v, s, config);
  v = evaluate(model, actions, config);
  const double final_res = bellman_residual(model, v, config);
  if (!(final_res < config.vi_tolerance))
    throw NonConvergedError("policy values fail the Bellman residual check", final_res);

  out.values = std::move(v);
  out.actions = std::move(actions);
  return out;
}

double Rollout::total(double gamma) const {
  double sum = 0.0, disc = 1.0;
  for (double r : rewards) {
    sum += disc * r;
    disc *= gamma;
  }
  return sum;
}

Rollout rollout(const LocalPolicy& policy, const LocalModel& model, const LocalState& start, int max_steps) {
  if (start.pose < 0 || start.pose >= model.num_poses() || start.cov < 0 || start.cov >= model.num_covs())
    throw ConfigurationError("rollout: start state out of range");
  if (policy.num_poses != model.num_poses() || policy.num_covs != model.num_covs())
    throw ConfigurationError("rollout: policy does not match the model");
  if (max_steps < 0) max_steps = model.num_states();

  Rollout out;
  out.states.push_back(start);
  std::vector<char> seen(static_cast<std::size_t>(model.num_states()), 0);
  LocalState s = start;
  seen[static_cast<std::size_t>(model.index(s))] = 1;
  for (int k = 0;; ++k) {
    const int a = policy.action(s);
    const LocalState nx = model.step(s, a);
    if (nx == s) return out;
    if (k >= max_steps) {
      out.converged = false;
      return out;
    }
    if (seen[static_cast<std::size_t>(model.index(nx))])
      throw OptimalityViolation("rollout entered a cycle through distinct states");
    seen[static_cast<std::size_t>(model.index(nx))] = 1;
    out.actions.push_back(a);
    out.rewards.push_back(model.reward(s, a, policy.config.rho));
    out.states.push_back(nx);
    s = nx;
  }
}

}  // namespace hase
