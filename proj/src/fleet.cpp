#include "hase/fleet.hpp"

#include "hase/error.hpp"
#include "hase/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace hase {

namespace {

void bisect(const std::vector<Vector>& means, std::vector<int> idx, int m_max, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(idx.size()) <= m_max) {
    std::sort(idx.begin(), idx.end());
    out.push_back(std::move(idx));
    return;
  }
  const Eigen::Index dim = means[static_cast<std::size_t>(idx.front())].size();
  Eigen::Index axis = 0;
  double widest = -1.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : idx) {
      lo = std::min(lo, means[static_cast<std::size_t>(i)](d));
      hi = std::max(hi, means[static_cast<std::size_t>(i)](d));
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = d;
    }
  }
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double va = means[static_cast<std::size_t>(a)](axis), vb = means[static_cast<std::size_t>(b)](axis);
    return va != vb ? va < vb : a < b;
  });
  const auto half = static_cast<std::ptrdiff_t>(idx.size() / 2);
  bisect(means, std::vector<int>(idx.begin(), idx.begin() + half), m_max, out);
  bisect(means, std::vector<int>(idx.begin() + half, idx.end()), m_max, out);
}

}  // namespace

std::vector<std::vector<int>> partition_targets(const std::vector<Vector>& means, int m_max) {
  if (means.empty()) throw ConfigurationError("partition: no targets");
  if (m_max < 1) throw ParameterError("partition: m_max must be >= 1");
  std::vector<int> idx(means.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  bisect(means, std::move(idx), m_max, out);
  return out;
}

int EntryGraph::nearest_route(const std::vector<FleetCluster>& clusters, int cluster, const Vector& from) const {
  const auto& routes = clusters.at(static_cast<std::size_t>(cluster)).routes;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const double d = (routes[r].entry - from).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(r);
    }
  }
  return best;
}

double EntryGraph::max_cost() const {
  double m = 0.0;
  for (const auto& c : edges)
    for (const auto& r : c)
      for (const auto& e : r) m = std::max(m, e.cost);
  return m;
}

double EntryGraph::median_cost() const {
  std::vector<double> costs;
  for (const auto& c : edges)
    for (const auto& r : c)
      for (const auto& e : r) costs.push_back(e.cost);
  if (costs.empty()) return 0.0;
  std::sort(costs.begin(), costs.end());
  const std::size_t n = costs.size();
  return n % 2 ? costs[n / 2] : 0.5 * (costs[n / 2 - 1] + costs[n / 2]);
}

EntryGraph build_graph(const std::vector<FleetCluster>& clusters, const Vector& depot) {
  EntryGraph g;
  g.depot = depot;
  for (std::size_t p = 0; p < clusters.size(); ++p)
    if (clusters[p].routes.empty()) throw ConfigurationError("cluster " + std::to_string(p) + " has no tours");
  g.edges.resize(clusters.size());
  for (std::size_t p = 0; p < clusters.size(); ++p) {
    for (const auto& route : clusters[p].routes) {
      std::vector<GraphEdge> out;
      const Vector end = route.tour.end();
      for (std::size_t q = 0; q < clusters.size(); ++q) {
        if (q == p) continue;
        GraphEdge e;
        e.cluster = static_cast<int>(q);
        e.route = g.nearest_route(clusters, e.cluster, end);
        e.gap = (clusters[q].routes[static_cast<std::size_t>(e.route)].entry - end).norm();
        e.cost = route.tour.length + e.gap;
        out.push_back(e);
      }
      g.edges[p].push_back(std::move(out));
    }
  }
  return g;
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::busy: return "busy";
    case Mode::transit: return "transit";
    case Mode::done: return "done";
  }
  return "?";
}

void FleetConfig::validate() const {
  if (starts.empty()) throw ParameterError("fleet: at least one robot is required");
  if (!(comm_range > 0.0)) throw ParameterError("fleet: communication range must be positive");
  if (ticks_per_round < 1 || rounds_per_tick < 1) throw ParameterError("fleet: schedule counts must be >= 1");
  for (const auto& s : starts)
    if (s.size() != depot.size()) throw ParameterError("fleet: start and depot dimensions differ");
}

int RobotState::free_count() const {
  return static_cast<int>(std::count(taken.begin(), taken.end(), char{0}));
}

bool FleetResult::exclusive() const {
  return std::all_of(sensed_count.begin(), sensed_count.end(), [](int n) { return n == 1; });
}

namespace {

nlohmann::json to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::json cluster_ref(int c) {
  if (c == kNone) return nullptr;
  if (c == kDepot) return "depot";
  return c;
}

class Simulator {
 public:
  Simulator(const std::vector<FleetCluster>& clusters, const EntryGraph& graph, const SensorModel& sensor,
            const std::vector<TargetTruth>& targets, const FleetConfig& config, std::uint64_t seed,
            std::ostream* trace)
      : clusters_(clusters), graph_(graph), sensor_(sensor), targets_(targets), cfg_(config), trace_(trace),
        rng_(substream(seed, "fleet-observations")) {
    cfg_.validate();
    step_ = cfg_.step > 0.0 ? cfg_.step : graph_.median_cost() / 50.0;
    if (!(step_ > 0.0)) {
      double span = 0.0;
      for (const auto& c : clusters_)
        for (const auto& r : c.routes) span = std::max({span, r.tour.length, (r.entry - cfg_.depot).norm()});
      step_ = span > 0.0 ? span / 50.0 : 1.0;
    }
    double longest = graph_.max_cost();
    for (const auto& s : cfg_.starts)
      for (const auto& c : clusters_)
        for (const auto& r : c.routes) longest = std::max(longest, (r.entry - s).norm() + r.tour.length);
    for (const auto& c : clusters_)
      for (const auto& r : c.routes) longest = std::max(longest, (r.entry - cfg_.depot).norm());
    stall_limit_ = cfg_.stall_ticks > 0 ? cfg_.stall_ticks
                                        : static_cast<long long>(std::ceil(10.0 * longest / step_)) + 10;

    const std::size_t p = clusters_.size();
    for (std::size_t i = 0; i < cfg_.starts.size(); ++i) {
      RobotState r;
      r.id = static_cast<int>(i);
      r.position = cfg_.starts[i];
      r.taken.assign(p, 0);
      result_.robots.push_back(std::move(r));
    }
    result_.sensed_count.assign(p, 0);
    for (const auto& t : targets_) {
      result_.estimates.push_back(t.prior_mean);
      result_.covariances.push_back(t.prior_cov);
      result_.error_trace.push_back((t.prior_mean - t.truth).squaredNorm());
    }
    result_.step = step_;
  }

  FleetResult run() {
    long long idle = 0;
    for (long long tick = 0;; ++tick) {
      bool changed = false;
      for (auto& r : result_.robots) changed |= move(r, tick);
      if (tick % cfg_.ticks_per_round == 0)
        for (int k = 0; k < cfg_.rounds_per_tick; ++k) changed |= coordinate(tick);
      write_tick(tick);
      result_.positions.emplace_back();
      for (const auto& r : result_.robots) result_.positions.back().push_back(r.position);
      result_.ticks = tick + 1;
      if (std::all_of(result_.robots.begin(), result_.robots.end(),
                      [](const RobotState& r) { return r.mode == Mode::done; }))
        break;
      idle = changed ? 0 : idle + 1;
      if (idle > stall_limit_) throw StallError("fleet made no progress for " + std::to_string(idle) + " ticks",
                                                dump(tick));
    }
    return std::move(result_);
  }

 private:
  const Tour& tour_of(const RobotState& r) const {
    return clusters_[static_cast<std::size_t>(r.c_curr)].routes[static_cast<std::size_t>(r.route)].tour;
  }

  void event(long long tick, const RobotState& r, int cluster, const char* what) {
    result_.events.push_back({tick, r.id, cluster, what});
  }

  // One motion tick. Returns true when the robot's state changed.
  bool move(RobotState& r, long long tick) {
    if (r.mode == Mode::done) return false;
    if (r.mode == Mode::busy) {
      if (r.pending > 0) {
        observe(r, tick);
        --r.pending;
        return true;
      }
      const Tour& t = tour_of(r);
      double budget = step_;
      const Vector before = r.position;
      while (budget > 0.0 && r.stop + 1 < static_cast<int>(t.stops.size())) {
        const double gap = t.arc[static_cast<std::size_t>(r.stop + 1)] - r.arc;
        if (gap <= budget) {
          budget -= gap;
          r.arc = t.arc[static_cast<std::size_t>(r.stop + 1)];
          ++r.stop;
          r.pending = t.stops[static_cast<std::size_t>(r.stop)].observations;
          if (r.pending > 0) break;
        } else {
          r.arc += budget;
          budget = 0.0;
        }
      }
      r.position = t.at(r.arc);
      r.distance += (r.position - before).norm();
      if (r.stop + 1 >= static_cast<int>(t.stops.size()) && r.pending == 0) {
        r.history.push_back(r.c_curr);
        ++result_.sensed_count[static_cast<std::size_t>(r.c_curr)];
        event(tick, r, r.c_curr, "complete");
        r.c_curr = kNone;
        r.mode = Mode::transit;
        r.arc = 0.0;
        r.stop = 0;
      }
      return true;
    }
    // transit
    if (r.c_next == kNone || r.arrived) return false;
    Vector goal;
    if (r.c_next == kDepot) {
      goal = cfg_.depot;
    } else {
      r.route = graph_.nearest_route(clusters_, r.c_next, r.position);
      goal = clusters_[static_cast<std::size_t>(r.c_next)].routes[static_cast<std::size_t>(r.route)].entry;
    }
    const Vector d = goal - r.position;
    const double dist = d.norm();
    if (dist <= step_) {
      r.position = goal;
      r.distance += dist;
      if (r.c_next == kDepot) {
        r.mode = Mode::done;
        event(tick, r, kDepot, "done");
      } else {
        r.arrived = true;
      }
    } else {
      r.position += step_ * d / dist;
      r.distance += step_;
    }
    return true;
  }

  void observe(RobotState& r, long long tick) {
    const Route& route = clusters_[static_cast<std::size_t>(r.c_curr)].routes[static_cast<std::size_t>(r.route)];
    const TourStop& stop = route.tour.stops[static_cast<std::size_t>(r.stop)];
    const Pose& view = route.views[static_cast<std::size_t>(r.stop)];
    const auto g = static_cast<std::size_t>(stop.global);
    const TargetTruth& t = targets_[g];
    Observation obs;
    try {
      if (cfg_.noiseless) {
        obs.q = sensor_.observation_cov(t.prior_mean, view);
        obs.value = t.truth;
      } else {
        obs = sensor_.simulate(t.truth, t.prior_mean, view, rng_, cfg_.quantize);
      }
    } catch (const TargetNotVisible&) {
      return;
    }
    Vector& x = result_.estimates[g];
    Matrix& sigma = result_.covariances[g];
    kalman_update(x, sigma, obs);
    result_.error_trace[g] = (x - t.truth).squaredNorm();
    ObservationRecord rec{tick, r.id, stop.global, x, result_.error_trace[g], sigma.trace()};
    if (trace_) {
      nlohmann::json j;
      j["tick"] = tick;
      j["robot"] = r.id;
      j["target"] = stop.global;
      j["estimate"] = to_json(x);
      j["error_trace"] = rec.error_trace;
      j["cov_trace"] = rec.cov_trace;
      *trace_ << j.dump() << '\n';
    }
    result_.observations.push_back(std::move(rec));
  }

  double selection_cost(const RobotState& r, int q) const {
    double best = std::numeric_limits<double>::infinity();
    if (r.mode == Mode::busy) {
      for (const auto& e : graph_.edges[static_cast<std::size_t>(r.c_curr)][static_cast<std::size_t>(r.route)])
        if (e.cluster == q) best = e.cost - r.arc;
      return std::max(0.0, best);
    }
    for (const auto& route : clusters_[static_cast<std::size_t>(q)].routes)
      best = std::min(best, (route.entry - r.position).norm());
    return best;
  }

  void select_next(RobotState& r, long long tick) {
    int choice = kDepot;
    double cost = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < r.taken.size(); ++q) {
      if (r.taken[q]) continue;
      const double c = selection_cost(r, static_cast<int>(q));
      if (c < cost) {
        cost = c;
        choice = static_cast<int>(q);
      }
    }
    if (choice == kDepot) {
      cost = (cfg_.depot - r.position).norm();
    } else {
      r.taken[static_cast<std::size_t>(choice)] = 1;
    }
    r.c_next = choice;
    r.bid = 1.0 / (1.0 + cost);
    r.arrived = false;
    event(tick, r, choice, "claim");
  }

  bool coordinate(long long tick) {
    ++result_.rounds;
    auto& robots = result_.robots;
    const std::size_t n = robots.size();
    std::vector<std::vector<int>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((robots[i].position - robots[j].position).norm() < cfg_.comm_range) nbrs[i].push_back(static_cast<int>(j));

    bool changed = false;
    std::vector<std::vector<char>> snapshot;
    for (const auto& r : robots) snapshot.push_back(r.taken);
    for (std::size_t i = 0; i < n; ++i)
      for (int j : nbrs[i])
        for (std::size_t q = 0; q < snapshot[i].size(); ++q)
          if (snapshot[static_cast<std::size_t>(j)][q] && !robots[i].taken[q]) {
            robots[i].taken[q] = 1;
            changed = true;
          }

    for (auto& r : robots)
      if (r.mode != Mode::done && r.c_next == kNone) {
        select_next(r, tick);
        changed = true;
      }

    // Conflicts: a claim loses to a neighbour sensing that cluster, or to a
    // neighbour claiming it with a higher bid (equal bids: lower id wins).
    for (std::size_t guard = 0; guard <= robots.front().taken.size() + 1; ++guard) {
      std::vector<int> losers;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& ri = robots[i];
        if (ri.mode == Mode::done || ri.c_next < 0) continue;
        for (int j : nbrs[i]) {
          if (static_cast<std::size_t>(j) == i) continue;
          const auto& rj = robots[static_cast<std::size_t>(j)];
          const bool sensing = rj.mode == Mode::busy && rj.c_curr == ri.c_next;
          const bool outbid = rj.mode != Mode::done && rj.c_next == ri.c_next &&
                              (rj.bid > ri.bid || (rj.bid == ri.bid && j < static_cast<int>(i)));
          if (sensing || outbid) {
            losers.push_back(static_cast<int>(i));
            break;
          }
        }
      }
      if (losers.empty()) break;
      for (int i : losers) {
        auto& r = robots[static_cast<std::size_t>(i)];
        event(tick, r, r.c_next, "lose");
        r.c_next = kNone;
        select_next(r, tick);
      }
      changed = true;
    }

    for (auto& r : robots) {
      if (r.mode != Mode::transit || !r.arrived || r.c_next < 0) continue;
      r.mode = Mode::busy;
      r.c_curr = r.c_next;
      r.c_next = kNone;
      r.arrived = false;
      r.arc = 0.0;
      r.stop = 0;
      r.pending = tour_of(r).stops.front().observations;
      event(tick, r, r.c_curr, "commit");
      changed = true;
    }
    return changed;
  }

  void write_tick(long long tick) {
    if (!trace_) return;
    for (const auto& r : result_.robots) {
      nlohmann::json j;
      j["tick"] = tick;
      j["round"] = result_.rounds;
      j["robot"] = r.id;
      j["mode"] = mode_name(r.mode);
      j["position"] = to_json(r.position);
      j["c_curr"] = cluster_ref(r.c_curr);
      j["c_next"] = cluster_ref(r.c_next);
      j["bid"] = r.bid;
      j["free_count"] = r.free_count();
      *trace_ << j.dump() << '\n';
    }
  }

  std::string dump(long long tick) const {
    std::ostringstream out;
    out << "tick " << tick << '\n';
    for (const auto& r : result_.robots)
      out << "robot " << r.id << " mode=" << mode_name(r.mode) << " c_curr=" << r.c_curr << " c_next=" << r.c_next
          << " arrived=" << r.arrived << " free=" << r.free_count() << " position=" << r.position.transpose()
          << '\n';
    return out.str();
  }

  const std::vector<FleetCluster>& clusters_;
  const EntryGraph& graph_;
  const SensorModel& sensor_;
  const std::vector<TargetTruth>& targets_;
  FleetConfig cfg_;
  std::ostream* trace_;
  Rng rng_;
  double step_ = 1.0;
  long long stall_limit_ = 0;
  FleetResult result_;
};

}  // namespace

FleetResult simulate_fleet(const std::vector<FleetCluster>& clusters, const EntryGraph& graph,
                           const SensorModel& sensor, const std::vector<TargetTruth>& targets,
                           const FleetConfig& config, std::uint64_t seed, std::ostream* trace) {
  if (clusters.empty()) throw ConfigurationError("fleet: no clusters");
  if (graph.edges.size() != clusters.size()) throw ConfigurationError("fleet: graph does not match the clusters");
  return Simulator(clusters, graph, sensor, targets, config, seed, trace).run();
}

}  // namespace hase
