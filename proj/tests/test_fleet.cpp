#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace hase;

namespace {

Scenario desk(int robots) {
  Scenario s = load_scenario(test::scenario_path("desk_fleet.json"));
  s.fleet.robots = robots;
  return s;
}

}  // namespace

TEST_CASE("median bisection partitions every target once") {
  Rng rng(5);
  std::vector<Vector> means;
  for (int i = 0; i < 37; ++i) means.push_back(10.0 * standard_normal(2, rng));
  const auto parts = partition_targets(means, 5);
  std::set<int> seen;
  for (const auto& part : parts) {
    CHECK(part.size() <= 5);
    CHECK(!part.empty());
    for (int i : part) CHECK(seen.insert(i).second);
  }
  CHECK(seen.size() == 37);
  CHECK(partition_targets(means, 100).size() == 1);
}

TEST_CASE("a single robot tours every cluster") {
  Pipeline p(desk(1));
  const FleetRun run = run_fleet(p);
  CHECK(run.result.exclusive());
  CHECK(run.result.robots[0].history.size() == run.clusters.size());
  CHECK(run.result.robots[0].mode == Mode::done);
  CHECK((run.result.robots[0].position - p.scenario().fleet.depot).norm() < 1e-9);
  CHECK(run.result.robots[0].distance > 0.0);
}

TEST_CASE("three robots share the clusters exclusively") {
  Pipeline p(desk(3));
  std::ostringstream trace;
  const FleetRun run = run_fleet(p, &trace);
  CHECK(run.partition.size() == 4);
  CHECK(run.result.exclusive());
  std::size_t visits = 0;
  for (const auto& r : run.result.robots) visits += r.history.size();
  CHECK(visits == run.clusters.size());
  std::istringstream in(trace.str());
  std::size_t ticks = 0, obs = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("mode")) ++ticks;
    else ++obs;
  }
  CHECK(ticks == static_cast<std::size_t>(run.result.ticks) * run.result.robots.size());
  CHECK(obs == run.result.observations.size());
}

TEST_CASE("a short communication range still finishes when robots start together") {
  Scenario s = desk(2);
  s.fleet.comm_range = 1.0;
  Pipeline p(s);
  const FleetRun run = run_fleet(p);
  for (const auto& r : run.result.robots) CHECK(r.mode == Mode::done);
}

TEST_CASE("fleet configuration is validated") {
  FleetConfig cfg;
  cfg.depot = Vector::Zero(2);
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.starts.push_back(Vector::Zero(2));
  cfg.comm_range = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
