#include "hase/pipeline.hpp"

#include "hase/error.hpp"
#include "hase/linalg.hpp"
#include "hase/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace hase {

using nlohmann::json;

namespace {

class Timer {
 public:
  Timer(StageTimes& t, std::string stage) : times_(t), stage_(std::move(stage)), start_(clock::now()) {}
  ~Timer() { times_.add(stage_, std::chrono::duration<double>(clock::now() - start_).count()); }

 private:
  using clock = std::chrono::steady_clock;
  StageTimes& times_;
  std::string stage_;
  clock::time_point start_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Matrix default_prior(const Scenario& s, const CovGrid& grid) {
  const double scale = s.prior_scale ? *s.prior_scale : grid.eigen().lambdas.back();
  return scale * Matrix::Identity(s.dim, s.dim);
}

Vector draw(const Vector& mean, const Matrix& cov, Rng& rng) {
  return mean + psd_sqrt(cov) * standard_normal(mean.size(), rng);
}

}  // namespace

Pipeline::Pipeline(Scenario scenario, int threads) : scenario_(std::move(scenario)), threads_(std::max(1, threads)) {
  scenario_.validate();
  Timer t(times, "grid");
  for (std::size_t i = 0; i < scenario_.targets.size(); ++i) {
    auto plan = std::make_unique<TargetPlan>();
    plan->id = static_cast<int>(i);
    plan->mean = scenario_.targets[i].mean;
    // Same stream per target: every target sees identical relative geometry.
    Rng rng = substream(scenario_.seed, "workspace");
    plan->ws = make_workspace(scenario_.workspace.generate(plan->mean, rng), scenario_.workspace.actions);
    targets_.push_back(std::move(plan));
  }

  GridParams gp = scenario_.grid;
  gp.dim = scenario_.dim;
  if (scenario_.lambda_auto) {
    double lmax = 0.0;
    for (const auto& plan : targets_) lmax = std::max(lmax, max_observation_trace(sensor(), plan->mean, plan->ws.poses));
    for (const auto& spec : scenario_.targets)
      if (spec.cov) lmax = std::max(lmax, symmetric_eigen(*spec.cov).values.maxCoeff());
    if (scenario_.prior_scale) lmax = std::max(lmax, *scenario_.prior_scale);
    if (!(lmax > 0.0)) throw ScenarioError("/workspace", "no pose can observe any target");
    gp.lambda_max = lmax;
  }
  grid_ = std::make_unique<CovGrid>(CovGrid::assemble(gp, substream_seed(scenario_.seed, "grid")));

  for (std::size_t i = 0; i < targets_.size(); ++i) {
    const auto& spec = scenario_.targets[i];
    targets_[i]->prior = spec.cov ? *spec.cov : default_prior(scenario_, *grid_);
  }
}

DpConfig Pipeline::dp() const {
  DpConfig c = scenario_.dp;
  c.threads = threads_;
  return c;
}

std::string Pipeline::local_key(const TargetPlan& t) const {
  std::ostringstream k;
  for (const auto& pose : t.ws.poses) {
    for (Eigen::Index d = 0; d < pose.position.size(); ++d) k << fmt(pose.position(d) - t.mean(d)) << ',';
    k << fmt(pose.yaw) << ',' << fmt(pose.pitch) << ';';
  }
  k << '|';
  for (int n : t.ws.transition) k << n << ',';
  k << '|';
  for (double c : t.ws.travel) k << fmt(c) << ',';
  k << '|' << scenario_.sensor_spec.dump() << '|' << grid_hash(*grid_);
  const DpConfig c = scenario_.dp;
  k << '|' << fmt(c.gamma) << ',' << fmt(c.rho) << ',' << fmt(c.vi_tolerance) << ',' << c.max_sweeps;
  return hex64(fnv1a(k.str()));
}

TargetPlan& Pipeline::target(int i) {
  if (i < 0 || i >= num_targets()) throw ConfigurationError("target index out of range");
  TargetPlan& t = *targets_[static_cast<std::size_t>(i)];
  if (t.model) return t;
  {
    Timer timer(times, "local_model");
    t.model = std::make_unique<LocalModel>(t.ws, *grid_, sensor(), t.mean);
  }
  const std::string key = local_key(t);
  const auto it = local_cache_.find(key);
  if (it != local_cache_.end()) {
    t.policy = it->second;
  } else {
    Timer timer(times, "local_solve");
    t.policy = std::make_shared<const LocalPolicy>(solve(*t.model, dp()));
    local_cache_.emplace(key, t.policy);
    ++local_solves_;
  }
  return t;
}

std::string Pipeline::cluster_key(const std::vector<int>& ids) {
  std::ostringstream k;
  for (int id : ids) {
    TargetPlan& t = target(id);
    k << id << ':' << local_key(t) << ':';
    for (Eigen::Index d = 0; d < t.mean.size(); ++d) k << fmt(t.mean(d)) << ',';
    for (Eigen::Index r = 0; r < t.prior.size(); ++r) k << fmt(t.prior.data()[r]) << ',';
    k << ';';
  }
  k << scenario_.m_max;
  return hex64(fnv1a(k.str()));
}

const Pipeline::ClusterPlan& Pipeline::cluster(const std::vector<int>& ids) {
  const std::string key = cluster_key(ids);
  if (const auto it = cluster_cache_.find(key); it != cluster_cache_.end()) return *it->second;
  Timer timer(times, "cluster_solve");
  std::vector<ClusterTarget> members;
  for (int id : ids) {
    TargetPlan& t = target(id);
    members.push_back({id, t.prior, t.model.get(), t.policy.get()});
  }
  auto plan = std::make_unique<ClusterPlan>();
  plan->ids = ids;
  plan->cluster = make_cluster(std::move(members), scenario_.m_max);
  plan->policy = solve_cluster(plan->cluster, dp());
  plan->entries = cluster_entries(plan->cluster);
  ++cluster_solves_;
  return *cluster_cache_.emplace(key, std::move(plan)).first->second;
}

int baseline_horizon(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in (0, 1)");
  return static_cast<int>(std::ceil(std::log(1e-12) / std::log(gamma)));
}

PathReport account(const LocalModel& model, const LocalState& start, const std::vector<int>& actions,
                   const DpConfig& config) {
  PathReport r;
  r.states.push_back(start);
  r.actions = actions;
  LocalState s = start;
  double disc = 1.0;
  for (int a : actions) {
    const LocalState n = model.step(s, a);
    r.reward += disc * model.reward(s, a, config.rho);
    r.uncertainty_reduction += std::sqrt(std::max(0.0, model.grid().trace(s.cov) - model.grid().trace(n.cov)));
    r.distance += model.workspace().cost(s.pose, a);
    if (n.cov != s.cov) ++r.observations;
    disc *= config.gamma;
    s = n;
    r.states.push_back(s);
  }
  r.steps = static_cast<int>(actions.size());
  return r;
}

namespace {

double range_of(const LocalModel& m, int pose) { return (m.workspace().position(pose) - m.target_mean()).norm(); }

double azimuth_of(const LocalModel& m, int pose) {
  const Vector d = m.workspace().position(pose) - m.target_mean();
  return std::atan2(d.size() > 1 ? d(1) : 0.0, d(0));
}

int closer_action(const LocalModel& m, int pose) {
  int best = 0;
  double best_r = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m.num_actions(); ++a) {
    const double r = range_of(m, m.workspace().next(pose, a));
    if (r < best_r) {
      best_r = r;
      best = a;
    }
  }
  return best;
}

int circle_action(const LocalModel& m, int pose) {
  const double r0 = range_of(m, pose), az0 = azimuth_of(m, pose);
  int best = -1;
  double best_step = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m.num_actions(); ++a) {
    const int n = m.workspace().next(pose, a);
    if (n == pose || std::abs(range_of(m, n) - r0) > 1e-9 * std::max(1.0, r0)) continue;
    double step = azimuth_of(m, n) - az0;
    while (step <= 1e-12) step += 2.0 * std::numbers::pi;
    if (step < best_step) {
      best_step = step;
      best = a;
    }
  }
  if (best >= 0) return best;
  for (int a = 0; a < m.num_actions(); ++a)
    if (m.workspace().next(pose, a) == pose) return a;
  return 0;
}

}  // namespace

std::vector<int> baseline_actions(const LocalModel& model, const LocalState& start, const std::string& name,
                                  int horizon, Rng* rng) {
  std::vector<int> out;
  LocalState s = start;
  std::uniform_int_distribution<int> pick(0, model.num_actions() - 1);
  for (int k = 0; k < horizon; ++k) {
    int a = 0;
    if (name == "closer") {
      a = closer_action(model, s.pose);
    } else if (name == "static") {
      a = 0;
    } else if (name == "circle") {
      a = circle_action(model, s.pose);
    } else if (name == "random") {
      if (!rng) throw ParameterError("random baseline needs a generator");
      a = pick(*rng);
    } else {
      throw ParameterError("unknown baseline '" + name + "'");
    }
    out.push_back(a);
    s = model.step(s, a);
  }
  return out;
}

LocalState single_start(Pipeline& p) {
  TargetPlan& t = p.target(0);
  const int pose = p.scenario().single.start_pose >= 0 ? p.scenario().single.start_pose : t.ws.boundary.front();
  if (pose >= t.ws.size()) throw ScenarioError("/single/start_pose", "pose index out of range");
  return {pose, p.grid().project(t.prior)};
}

PathReport run_single(Pipeline& p) {
  TargetPlan& t = p.target(0);
  const LocalState start = single_start(p);
  const DpConfig cfg = p.dp();
  Timer timer(p.times, "single");
  std::vector<int> actions;
  LocalState s = start;
  for (int k = baseline_horizon(cfg.gamma); k > 0; --k) {
    const int a = t.policy->action(s);
    actions.push_back(a);
    s = t.model->step(s, a);
  }
  PathReport r = account(*t.model, start, actions, cfg);
  r.policy = "optimal";
  return r;
}

PathReport run_baseline(Pipeline& p, const std::string& name) {
  TargetPlan& t = p.target(0);
  const LocalState start = single_start(p);
  const DpConfig cfg = p.dp();
  const int h = baseline_horizon(cfg.gamma);
  Timer timer(p.times, "baseline");
  if (name != "random") {
    PathReport r = account(*t.model, start, baseline_actions(*t.model, start, name, h, nullptr), cfg);
    r.policy = name;
    return r;
  }
  const int runs = std::max(1, p.scenario().single.baseline_runs);
  PathReport mean;
  for (int k = 0; k < runs; ++k) {
    Rng rng = substream(p.scenario().seed, "baseline-random", static_cast<std::uint64_t>(k));
    PathReport r = account(*t.model, start, baseline_actions(*t.model, start, name, h, &rng), cfg);
    if (k == 0) {
      mean.states = r.states;
      mean.actions = r.actions;
      mean.steps = r.steps;
    }
    mean.reward += r.reward / runs;
    mean.uncertainty_reduction += r.uncertainty_reduction / runs;
    mean.distance += r.distance / runs;
    mean.observations += r.observations;
  }
  mean.observations = static_cast<int>(std::lround(static_cast<double>(mean.observations) / runs));
  mean.policy = name;
  return mean;
}

std::vector<SweepRow> rho_sweep(const Scenario& s, int threads) {
  std::vector<SweepRow> rows;
  for (double rho : s.rho_sweep) {
    Scenario copy = s;
    copy.dp.rho = rho;
    Pipeline p(std::move(copy), threads);
    rows.push_back({rho, run_single(p)});
  }
  return rows;
}

ClusterRun run_cluster(Pipeline& p) {
  const Scenario& sc = p.scenario();
  if (p.num_targets() > sc.m_max)
    throw ClusterSizeError("scenario has " + std::to_string(p.num_targets()) + " targets, cluster limit is " +
                           std::to_string(sc.m_max));
  std::vector<int> ids(static_cast<std::size_t>(p.num_targets()));
  for (int i = 0; i < p.num_targets(); ++i) ids[static_cast<std::size_t>(i)] = i;
  const auto& plan = p.cluster(ids);

  const Vector depot = sc.fleet.depot.size() == sc.dim ? sc.fleet.depot : Vector(Vector::Zero(sc.dim));
  std::size_t best = 0;
  for (std::size_t k = 1; k < plan.entries.size(); ++k)
    if ((plan.entries[k].position - depot).norm() < (plan.entries[best].position - depot).norm()) best = k;
  const ClusterEntry& e = plan.entries.at(best);

  ClusterRun run;
  run.tour = plan.policy.tours[static_cast<std::size_t>(e.target)][static_cast<std::size_t>(e.entry)];
  run.states = static_cast<long long>(plan.policy.states.size());
  run.state_bound = cluster_state_bound(plan.cluster);
  run.path.policy = "cluster";
  run.path.reward = run.tour.reward;
  run.path.uncertainty_reduction = run.tour.uncertainty_reduction;
  run.path.distance = run.tour.length;
  run.path.steps = run.tour.steps;
  run.path.observations = run.tour.observation_count();

  std::vector<Pose> views;
  for (const auto& stop : run.tour.stops)
    for (int k = 0; k < stop.observations; ++k) {
      run.observed_target.push_back(stop.global);
      views.push_back(p.target(stop.global).ws.poses[static_cast<std::size_t>(stop.pose)]);
    }

  Timer timer(p.times, "monte_carlo");
  const std::size_t n = run.observed_target.size();
  const int runs = std::max(1, sc.sim.monte_carlo);
  std::vector<double> sum(n + 1, 0.0), sq(n + 1, 0.0);
  for (int k = 0; k < runs; ++k) {
    Rng rng = substream(sc.seed, "truth", static_cast<std::uint64_t>(k));
    std::vector<Vector> truth, est;
    std::vector<Matrix> cov;
    for (int i = 0; i < p.num_targets(); ++i) {
      const TargetPlan& t = p.target(i);
      truth.push_back(draw(t.mean, t.prior, rng));
      est.push_back(t.mean);
      cov.push_back(t.prior);
    }
    auto total_error = [&] {
      double e = 0.0;
      for (std::size_t i = 0; i < truth.size(); ++i) e += (est[i] - truth[i]).norm();
      return e;
    };
    auto record = [&](std::size_t j) {
      const double e = total_error();
      sum[j] += e;
      sq[j] += e * e;
    };
    record(0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto tid = static_cast<std::size_t>(run.observed_target[j]);
      Observation obs = p.sensor().simulate(truth[tid], p.target(static_cast<int>(tid)).mean, views[j], rng,
                                            sc.sim.quantize);
      if (sc.sim.noiseless) obs.value = truth[tid];
      kalman_update(est[tid], cov[tid], obs);
      record(j + 1);
    }
  }
  for (std::size_t j = 0; j <= n; ++j) {
    const double m = sum[j] / runs;
    run.error_mean.push_back(m);
    run.error_std.push_back(std::sqrt(std::max(0.0, sq[j] / runs - m * m)));
  }
  return run;
}

FleetRun run_fleet(Pipeline& p, std::ostream* trace) {
  const Scenario& sc = p.scenario();
  FleetRun run;
  std::vector<Vector> means;
  for (int i = 0; i < p.num_targets(); ++i) means.push_back(p.target(i).mean);
  run.partition = partition_targets(means, sc.m_max);

  for (const auto& ids : run.partition) {
    const auto& plan = p.cluster(ids);
    FleetCluster fc;
    fc.targets = ids;
    for (const auto& e : plan.entries) {
      Route r;
      r.entry = e.position;
      r.tour = plan.policy.tours[static_cast<std::size_t>(e.target)][static_cast<std::size_t>(e.entry)];
      for (const auto& stop : r.tour.stops)
        r.views.push_back(p.target(stop.global).ws.poses[static_cast<std::size_t>(stop.pose)]);
      fc.routes.push_back(std::move(r));
    }
    run.clusters.push_back(std::move(fc));
  }
  run.graph = build_graph(run.clusters, sc.fleet.depot);

  FleetConfig cfg;
  cfg.depot = sc.fleet.depot;
  cfg.starts = sc.fleet.starts;
  if (cfg.starts.empty()) cfg.starts.assign(static_cast<std::size_t>(sc.fleet.robots), sc.fleet.depot);
  cfg.comm_range = sc.fleet.comm_range;
  cfg.step = sc.fleet.step;
  cfg.ticks_per_round = sc.fleet.ticks_per_round;
  cfg.rounds_per_tick = sc.fleet.rounds_per_tick;
  cfg.stall_ticks = sc.fleet.stall_ticks;
  cfg.noiseless = sc.sim.noiseless;
  cfg.quantize = sc.sim.quantize;

  std::vector<TargetTruth> truths;
  Rng rng = substream(sc.seed, "truth");
  for (int i = 0; i < p.num_targets(); ++i) {
    const TargetPlan& t = p.target(i);
    truths.push_back({draw(t.mean, t.prior, rng), t.mean, t.prior});
  }
  Timer timer(p.times, "fleet");
  run.result = simulate_fleet(run.clusters, run.graph, p.sensor(), truths, cfg, sc.seed, trace);
  run.tolerance = p.grid().tolerance();
  return run;
}

json report_json(const PathReport& r) {
  json j;
  j["policy"] = r.policy;
  j["reward"] = r.reward;
  j["uncertainty_reduction"] = r.uncertainty_reduction;
  j["distance"] = r.distance;
  j["steps"] = r.steps;
  j["observations"] = r.observations;
  j["states"] = json::array();
  for (const auto& s : r.states) j["states"].push_back({s.pose, s.cov});
  j["actions"] = r.actions;
  return j;
}

json report_json(const ClusterRun& r) {
  json j = report_json(r.path);
  j["tour"] = tour_to_json(r.tour);
  j["cluster_states"] = r.states;
  j["state_bound"] = r.state_bound;
  j["observed_target"] = r.observed_target;
  j["error_mean"] = r.error_mean;
  j["error_std"] = r.error_std;
  return j;
}

json report_json(const FleetRun& r) {
  const FleetResult& f = r.result;
  json j;
  j["partition"] = r.partition;
  j["ticks"] = f.ticks;
  j["rounds"] = f.rounds;
  j["step"] = f.step;
  j["sensed_count"] = f.sensed_count;
  j["exclusive"] = f.exclusive();
  j["robots"] = json::array();
  for (const auto& rb : f.robots)
    j["robots"].push_back({{"id", rb.id}, {"history", rb.history}, {"distance", rb.distance}, {"mode", mode_name(rb.mode)}});
  j["events"] = json::array();
  for (const auto& e : f.events) j["events"].push_back({e.tick, e.robot, e.cluster, e.event});
  j["targets"] = json::array();
  for (std::size_t i = 0; i < f.estimates.size(); ++i) {
    const double tr = f.covariances[i].trace();
    j["targets"].push_back({{"estimate", to_json(f.estimates[i])},
                            {"error_trace", f.error_trace[i]},
                            {"cov_trace", tr},
                            {"within_tolerance", symmetric_eigen(f.covariances[i]).values.maxCoeff() <= r.tolerance}});
  }
  return j;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "rho,reward,uncertainty_reduction,distance\n";
  for (const auto& r : rows)
    out << fmt(r.rho) << ',' << fmt(r.path.reward) << ',' << fmt(r.path.uncertainty_reduction) << ','
        << fmt(r.path.distance) << '\n';
}

void write_error_csv(std::ostream& out, const ClusterRun& run) {
  out << "observations,target,error_mean,error_std\n";
  for (std::size_t k = 0; k < run.error_mean.size(); ++k) {
    out << k << ',';
    if (k > 0) out << run.observed_target[k - 1];
    out << ',' << fmt(run.error_mean[k]) << ',' << fmt(run.error_std[k]) << '\n';
  }
}

namespace {

std::string cluster_cell(int c) {
  if (c == kDepot) return "depot";
  if (c == kNone) return "";
  return std::to_string(c);
}

}  // namespace

void write_timeline_csv(std::ostream& out, const FleetResult& r) {
  out << "tick,robot,cluster,event\n";
  for (const auto& e : r.events) out << e.tick << ',' << e.robot << ',' << cluster_cell(e.cluster) << ',' << e.event << '\n';
}

void write_trajectory_csv(std::ostream& out, const FleetResult& r) {
  out << "tick";
  const std::size_t robots = r.positions.empty() ? 0 : r.positions[0].size();
  const Eigen::Index dim = robots ? r.positions[0][0].size() : 0;
  for (std::size_t k = 0; k < robots; ++k)
    for (Eigen::Index d = 0; d < dim; ++d) out << ",r" << k << "_x" << d;
  out << '\n';
  for (std::size_t t = 0; t < r.positions.size(); ++t) {
    out << t;
    for (const auto& p : r.positions[t])
      for (Eigen::Index d = 0; d < dim; ++d) out << ',' << fmt(p(d));
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const FleetRun& run) {
  out << "target,cluster,sensed,error_trace,cov_trace,within_tolerance\n";
  const FleetResult& f = run.result;
  for (std::size_t c = 0; c < run.partition.size(); ++c)
    for (int id : run.partition[c]) {
      const auto i = static_cast<std::size_t>(id);
      out << id << ',' << c << ',' << f.sensed_count[c] << ',' << fmt(f.error_trace[i]) << ','
          << fmt(f.covariances[i].trace()) << ','
          << (symmetric_eigen(f.covariances[i]).values.maxCoeff() <= run.tolerance ? 1 : 0) << '\n';
    }
}

}  // namespace hase
