#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"
#include "hase/serialize.hpp"

#include <doctest.h>

#include <sstream>

using namespace hase;

namespace {

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("baselines share the reward accounting") {
  Pipeline p(parse_scenario(test::toy_line_doc()));
  const PathReport opt = run_single(p);
  for (const char* name : {"closer", "static", "circle", "random"}) {
    const PathReport b = run_baseline(p, name);
    CHECK(b.steps == baseline_horizon(p.dp().gamma));
    CHECK(b.reward <= opt.reward + 1e-9);
  }
  CHECK(run_baseline(p, "static").distance == 0.0);
  CHECK_THROWS_AS(run_baseline(p, "spiral"), ParameterError);
}

TEST_CASE("random baseline is reproducible") {
  Pipeline a(parse_scenario(test::toy_line_doc()));
  Pipeline b(parse_scenario(test::toy_line_doc()));
  const PathReport x = run_baseline(a, "random"), y = run_baseline(b, "random");
  CHECK(x.reward == y.reward);
  CHECK(x.actions == y.actions);
}

TEST_CASE("circle keeps its radius") {
  Pipeline p(load_scenario(test::scenario_path("desk_single.json")));
  const PathReport r = run_baseline(p, "circle");
  const TargetPlan& t = p.target(0);
  const double r0 = (t.ws.position(r.states.front().pose) - t.mean).norm();
  for (const auto& s : r.states) CHECK((t.ws.position(s.pose) - t.mean).norm() == doctest::Approx(r0));
}

TEST_CASE("policy documents round-trip and refuse a different grid") {
  Pipeline p(parse_scenario(test::toy_line_doc()));
  const TargetPlan& t = p.target(0);
  const LocalPolicy q = policy_from_json(policy_to_json(*t.policy, t.ws, p.grid()), t.ws, p.grid());
  CHECK(q.actions == t.policy->actions);
  CHECK(q.values == t.policy->values);
  nlohmann::json other = test::toy_line_doc();
  other["seed"] = 4;
  Pipeline p2(parse_scenario(other));
  CHECK_THROWS_AS(policy_from_json(policy_to_json(*t.policy, t.ws, p.grid()), t.ws, p2.grid()), ConfigurationError);
}

TEST_CASE("cluster cache hit returns the same tours as a recompute") {
  Pipeline a(parse_scenario(test::toy_cluster_doc(2)));
  const auto& first = a.cluster({0, 1});
  const auto& again = a.cluster({0, 1});
  CHECK(&first == &again);
  CHECK(a.cluster_solves() == 1);
  Pipeline b(parse_scenario(test::toy_cluster_doc(2)));
  const auto& fresh = b.cluster({0, 1});
  CHECK(tour_to_json(fresh.policy.tours[0][0]) == tour_to_json(first.policy.tours[0][0]));
}

TEST_CASE("one-target cluster run equals the single-target run") {
  nlohmann::json doc = test::toy_line_doc();
  doc["fleet"] = {{"depot", {-2.0, 1.0}}};
  doc["sim"] = {{"monte_carlo", 5}};
  Pipeline p(parse_scenario(doc));
  const ClusterRun c = run_cluster(p);
  const LocalState start{c.tour.stops.front().pose, p.grid().project(p.target(0).prior)};
  const Rollout r = rollout(*p.target(0).policy, *p.target(0).model, start);
  CHECK(c.path.reward == doctest::Approx(r.total(p.dp().gamma)));
}

TEST_CASE("CSV schemas and row counts") {
  Pipeline p(load_scenario(test::scenario_path("desk_cluster.json")));
  const ClusterRun c = run_cluster(p);
  std::ostringstream err;
  write_error_csv(err, c);
  CHECK(err.str().rfind("observations,target,error_mean,error_std\n", 0) == 0);
  CHECK(count_lines(err.str()) == 1 + c.path.observations + 1);

  std::ostringstream sweep;
  write_sweep_csv(sweep, {{0.5, c.path}});
  CHECK(sweep.str().rfind("rho,reward,uncertainty_reduction,distance\n", 0) == 0);

  Pipeline f(load_scenario(test::scenario_path("desk_fleet.json")));
  const FleetRun run = run_fleet(f);
  std::ostringstream traj, timeline;
  write_trajectory_csv(traj, run.result);
  CHECK(count_lines(traj.str()) == 1 + run.result.ticks);
  write_timeline_csv(timeline, run.result);
  CHECK(count_lines(timeline.str()) == 1 + static_cast<int>(run.result.events.size()));
}

TEST_CASE("cluster error series starts at the prior and ends lower") {
  Pipeline p(load_scenario(test::scenario_path("desk_cluster.json")));
  const ClusterRun c = run_cluster(p);
  REQUIRE(c.error_mean.size() == c.observed_target.size() + 1);
  CHECK(c.error_mean.back() < c.error_mean.front());
}
