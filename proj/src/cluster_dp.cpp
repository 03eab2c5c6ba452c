#include "hase/cluster_dp.hpp"

#include "hase/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace hase {

std::vector<LocalState> entry_points(const Workspace& ws, const Matrix& prior_cov, const CovGrid& grid) {
  if (ws.boundary.empty()) throw ConfigurationError("entry_points: workspace boundary is empty");
  const int cov = grid.project(prior_cov);
  std::vector<LocalState> out;
  for (int p : ws.boundary) out.push_back({p, cov});
  return out;
}

const LocalState& Cluster::rollout_state(int i, int j, int depth) const {
  const auto& r = rollouts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return r.states[static_cast<std::size_t>(std::min(depth, r.steps()))];
}

const Vector& Cluster::rollout_position(int i, int j, int depth) const {
  return targets[static_cast<std::size_t>(i)].model->workspace().position(rollout_state(i, j, depth).pose);
}

Cluster make_cluster(std::vector<ClusterTarget> targets, int m_max) {
  if (targets.empty()) throw ConfigurationError("cluster has no targets");
  if (m_max < 1 || m_max > 24) throw ParameterError("cluster: m_max must lie in [1, 24]");
  if (static_cast<int>(targets.size()) > m_max)
    throw ClusterSizeError("cluster has " + std::to_string(targets.size()) + " targets, limit is " +
                           std::to_string(m_max));
  for (std::size_t a = 0; a < targets.size(); ++a) {
    if (!targets[a].model || !targets[a].policy) throw ConfigurationError("cluster target lacks a model or policy");
    for (std::size_t b = a + 1; b < targets.size(); ++b) {
      const auto& wa = targets[a].model->workspace();
      const auto& wb = targets[b].model->workspace();
      for (int p = 0; p < wa.size(); ++p)
        for (int q = 0; q < wb.size(); ++q)
          if ((wa.position(p) - wb.position(q)).norm() <= 1e-12)
            throw ConfigurationError("cluster workspaces overlap");
    }
  }

  Cluster c;
  c.targets = std::move(targets);
  for (const auto& t : c.targets) {
    auto entries = entry_points(t.model->workspace(), t.prior_cov, t.model->grid());
    std::vector<Rollout> rolls;
    for (const auto& e : entries) rolls.push_back(rollout(*t.policy, *t.model, e));
    c.entries.push_back(std::move(entries));
    c.rollouts.push_back(std::move(rolls));
  }
  return c;
}

std::uint64_t ClusterState::key() const {
  return static_cast<std::uint64_t>(visited) | (static_cast<std::uint64_t>(current) << 24) |
         (static_cast<std::uint64_t>(entry) << 29) | (static_cast<std::uint64_t>(depth) << 45);
}

namespace {

int nearest_entry(const Cluster& c, int target, const Vector& from) {
  const auto& ws = c.targets[static_cast<std::size_t>(target)].model->workspace();
  const auto& entries = c.entries[static_cast<std::size_t>(target)];
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const double d = (ws.position(entries[j].pose) - from).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Candidate order used for tie-breaking: continue first, then by index.
std::vector<int> action_order(int m, int current) {
  std::vector<int> order{current};
  for (int l = 0; l < m; ++l)
    if (l != current) order.push_back(l);
  return order;
}

}  // namespace

ClusterState transition(const Cluster& c, const ClusterState& s, int action) {
  if (action < 0 || action >= c.size()) throw ConfigurationError("cluster transition: action out of range");
  if (action == s.current) {
    ClusterState n = s;
    n.depth = std::min(s.depth + 1, c.horizon(s.current, s.entry));
    return n;
  }
  ClusterState n;
  n.visited = s.visited & ~(1u << s.current);
  n.current = action;
  n.entry = nearest_entry(c, action, c.rollout_position(s.current, s.entry, s.depth));
  n.depth = 0;
  return n;
}

double cluster_reward(const Cluster& c, const ClusterState& s, int action, const DpConfig& config) {
  if (action == s.current) {
    const int k = c.horizon(s.current, s.entry);
    if (s.depth >= k) return 0.0;
    const auto& r = c.rollouts[static_cast<std::size_t>(s.current)][static_cast<std::size_t>(s.entry)];
    if (s.visited & (1u << s.current)) return r.rewards[static_cast<std::size_t>(s.depth)];
    const auto& ws = c.targets[static_cast<std::size_t>(s.current)].model->workspace();
    return -config.rho * ws.cost(r.states[static_cast<std::size_t>(s.depth)].pose,
                                 r.actions[static_cast<std::size_t>(s.depth)]);
  }
  const ClusterState n = transition(c, s, action);
  const Vector& from = c.rollout_position(s.current, s.entry, s.depth);
  const Vector& to = c.rollout_position(n.current, n.entry, 0);
  return -config.rho * (to - from).norm();
}

long long cluster_state_bound(const Cluster& c) {
  long long max_e = 0, max_k = 0;
  for (int i = 0; i < c.size(); ++i) {
    max_e = std::max<long long>(max_e, static_cast<long long>(c.entries[static_cast<std::size_t>(i)].size()));
    for (std::size_t j = 0; j < c.entries[static_cast<std::size_t>(i)].size(); ++j)
      max_k = std::max<long long>(max_k, c.horizon(i, static_cast<int>(j)));
  }
  return (1LL << c.size()) * c.size() * max_e * (1 + max_k);
}

int ClusterPolicy::find(const ClusterState& s) const {
  const auto it = index.find(s.key());
  if (it == index.end()) throw ConfigurationError("cluster state is not reachable under this policy");
  return it->second;
}

namespace {

struct Tables {
  int m = 0;
  std::vector<int> next;  // [state * m + action]
  std::vector<double> reward;

  double q(const std::vector<double>& v, double gamma, int s, int a) const {
    const auto k = static_cast<std::size_t>(s * m + a);
    return reward[k] + gamma * v[static_cast<std::size_t>(next[k])];
  }
};

int greedy(const Tables& t, const std::vector<double>& v, double gamma, int s, int current) {
  int best_a = current;
  double best = t.q(v, gamma, s, current);
  for (int a : action_order(t.m, current)) {
    const double q = t.q(v, gamma, s, a);
    if (q > best + 1e-9 * std::max(1.0, std::abs(best))) {
      best = q;
      best_a = a;
    }
  }
  return best_a;
}

std::vector<double> evaluate(const Tables& t, const std::vector<int>& actions, double gamma) {
  const std::size_t n = actions.size();
  std::vector<double> v(n, 0.0);
  std::vector<char> color(n, 0);
  std::vector<int> path;
  auto nxt = [&](int s) { return t.next[static_cast<std::size_t>(s * t.m + actions[static_cast<std::size_t>(s)])]; };
  auto rew = [&](int s) { return t.reward[static_cast<std::size_t>(s * t.m + actions[static_cast<std::size_t>(s)])]; };
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root]) continue;
    path.clear();
    int s = static_cast<int>(root);
    while (color[static_cast<std::size_t>(s)] == 0) {
      color[static_cast<std::size_t>(s)] = 1;
      path.push_back(s);
      s = nxt(s);
    }
    std::size_t tail = path.size();
    if (color[static_cast<std::size_t>(s)] == 1) {
      const auto start = static_cast<std::size_t>(std::find(path.begin(), path.end(), s) - path.begin());
      double sum = 0.0, disc = 1.0;
      for (std::size_t i = start; i < path.size(); ++i) {
        sum += disc * rew(path[i]);
        disc *= gamma;
      }
      v[static_cast<std::size_t>(s)] = sum / (1.0 - disc);
      color[static_cast<std::size_t>(s)] = 2;
      for (std::size_t i = path.size(); i-- > start + 1;) {
        v[static_cast<std::size_t>(path[i])] = rew(path[i]) + gamma * v[static_cast<std::size_t>(nxt(path[i]))];
        color[static_cast<std::size_t>(path[i])] = 2;
      }
      tail = start;
    }
    for (std::size_t i = tail; i-- > 0;) {
      v[static_cast<std::size_t>(path[i])] = rew(path[i]) + gamma * v[static_cast<std::size_t>(nxt(path[i]))];
      color[static_cast<std::size_t>(path[i])] = 2;
    }
  }
  return v;
}

}  // namespace

ClusterPolicy solve_cluster(const Cluster& c, const DpConfig& config) {
  config.validate();
  const int m = c.size();
  const std::uint32_t full = (m == 32) ? ~0u : ((1u << m) - 1u);
  ClusterPolicy out;

  auto intern = [&](const ClusterState& s, std::deque<int>& queue) {
    const auto [it, fresh] = out.index.emplace(s.key(), static_cast<int>(out.states.size()));
    if (fresh) {
      out.states.push_back(s);
      queue.push_back(it->second);
    }
    return it->second;
  };

  std::deque<int> queue;
  for (int i = 0; i < m; ++i)
    for (std::size_t j = 0; j < c.entries[static_cast<std::size_t>(i)].size(); ++j)
      intern({full, i, static_cast<int>(j), 0}, queue);

  Tables t;
  t.m = m;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    const ClusterState s = out.states[static_cast<std::size_t>(id)];
    if (t.next.size() < static_cast<std::size_t>((id + 1) * m)) {
      t.next.resize(static_cast<std::size_t>((id + 1) * m));
      t.reward.resize(t.next.size());
    }
    for (int a = 0; a < m; ++a) {
      const int nx = intern(transition(c, s, a), queue);
      t.next[static_cast<std::size_t>(id * m + a)] = nx;
      t.reward[static_cast<std::size_t>(id * m + a)] = cluster_reward(c, s, a, config);
    }
  }
  const auto n = out.states.size();
  t.next.resize(n * static_cast<std::size_t>(m));
  t.reward.resize(t.next.size());

  std::vector<double> v(n, 0.0), next(n);
  double residual = std::numeric_limits<double>::infinity();
  while (out.sweeps < config.max_sweeps) {
    residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m; ++a) best = std::max(best, t.q(v, config.gamma, static_cast<int>(s), a));
      next[s] = best;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v.swap(next);
    ++out.sweeps;
    if (residual < config.vi_tolerance) break;
  }
  if (!(residual < config.vi_tolerance))
    throw NonConvergedError("cluster value iteration did not reach the tolerance", residual);

  std::vector<int> actions(n);
  auto extract = [&] {
    for (std::size_t s = 0; s < n; ++s)
      actions[s] = greedy(t, v, config.gamma, static_cast<int>(s), out.states[s].current);
  };
  extract();
  for (int round = 0; round < 100; ++round) {
    const std::vector<int> before = actions;
    v = evaluate(t, actions, config.gamma);
    extract();
    if (actions == before) break;
  }
  v = evaluate(t, actions, config.gamma);
  out.values = std::move(v);
  out.actions = std::move(actions);

  out.tours.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    for (std::size_t j = 0; j < c.entries[static_cast<std::size_t>(i)].size(); ++j)
      out.tours[static_cast<std::size_t>(i)].push_back(tour(out, c, i, static_cast<int>(j), config));
  return out;
}

Vector Tour::at(double l) const {
  if (stops.empty()) throw ConfigurationError("empty tour");
  if (l <= 0.0) return stops.front().position;
  if (l >= length) return stops.back().position;
  const auto it = std::upper_bound(arc.begin(), arc.end(), l);
  const auto k = static_cast<std::size_t>(it - arc.begin());
  const double seg = arc[k] - arc[k - 1];
  if (seg <= 0.0) return stops[k].position;
  const double t = (l - arc[k - 1]) / seg;
  return stops[k - 1].position + t * (stops[k].position - stops[k - 1].position);
}

int Tour::observation_count() const {
  int n = 0;
  for (const auto& s : stops) n += s.observations;
  return n;
}

Tour tour(const ClusterPolicy& policy, const Cluster& c, int target, int entry, const DpConfig& config) {
  const int m = c.size();
  const std::uint32_t full = (1u << m) - 1u;
  Tour out;
  out.target = target;
  out.entry = entry;

  auto add_stop = [&](int i, int pose, int obs) {
    const auto& t = c.targets[static_cast<std::size_t>(i)];
    const Vector& pos = t.model->workspace().position(pose);
    if (!out.stops.empty() && out.stops.back().target == i && out.stops.back().pose == pose) {
      out.stops.back().observations += obs;
      return;
    }
    const double seg = out.stops.empty() ? 0.0 : (pos - out.stops.back().position).norm();
    out.length += seg;
    out.stops.push_back({pos, i, t.id, pose, obs});
    out.arc.push_back(out.length);
  };

  ClusterState s{full, target, entry, 0};
  add_stop(target, c.rollout_state(target, entry, 0).pose, 0);
  std::unordered_map<std::uint64_t, char> seen{{s.key(), 1}};
  double disc = 1.0;
  while (s.visited != 0) {
    const int a = policy.action(s);
    const ClusterState n = transition(c, s, a);
    if (n == s) break;
    out.reward += disc * cluster_reward(c, s, a, config);
    disc *= config.gamma;
    ++out.steps;
    if (a == s.current) {
      const int pose = c.rollout_state(s.current, s.entry, n.depth).pose;
      const bool earns = (s.visited >> s.current) & 1u;
      const auto& model = *c.targets[static_cast<std::size_t>(s.current)].model;
      add_stop(s.current, pose, earns && model.visible(pose) ? 1 : 0);
      if (earns) {
        const int before = c.rollout_state(s.current, s.entry, s.depth).cov;
        const int after = c.rollout_state(s.current, s.entry, n.depth).cov;
        out.uncertainty_reduction += std::sqrt(std::max(0.0, model.grid().trace(before) - model.grid().trace(after)));
      }
    } else {
      add_stop(n.current, c.rollout_state(n.current, n.entry, 0).pose, 0);
    }
    if (!seen.emplace(n.key(), 1).second) throw OptimalityViolation("cluster tour entered a cycle");
    s = n;
  }
  return out;
}

std::vector<ClusterEntry> cluster_entries(const Cluster& c) {
  std::vector<Vector> pts;
  std::vector<std::pair<int, int>> label;  // (target, pose)
  for (int i = 0; i < c.size(); ++i) {
    const auto& ws = c.targets[static_cast<std::size_t>(i)].model->workspace();
    for (int p = 0; p < ws.size(); ++p) {
      pts.push_back(ws.position(p));
      label.emplace_back(i, p);
    }
  }
  std::vector<ClusterEntry> out;
  for (int k : hull_boundary(pts)) {
    const auto [i, p] = label[static_cast<std::size_t>(k)];
    const auto& entries = c.entries[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < entries.size(); ++j)
      if (entries[j].pose == p) out.push_back({i, static_cast<int>(j), pts[static_cast<std::size_t>(k)]});
  }
  if (out.empty()) throw ConfigurationError("cluster has no entry points");
  return out;
}

}  // namespace hase
