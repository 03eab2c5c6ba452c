#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"

#include <doctest.h>

#include <cmath>

using namespace hase;

TEST_CASE("a one-target cluster follows the local rollout") {
  Pipeline p(parse_scenario(test::toy_cluster_doc(1)));
  const auto& plan = p.cluster({0});
  const TargetPlan& t = p.target(0);
  const DpConfig cfg = p.dp();
  for (std::size_t e = 0; e < plan.cluster.entries[0].size(); ++e) {
    const Rollout r = rollout(*t.policy, *t.model, plan.cluster.entries[0][e]);
    const Tour& tour = plan.policy.tours[0][e];
    CHECK(tour.reward == doctest::Approx(r.total(cfg.gamma)).epsilon(1e-9));
    CHECK(tour.steps == r.steps());
  }
}

TEST_CASE("state keys are distinct and the state count is bounded") {
  Pipeline p(parse_scenario(test::toy_cluster_doc(3)));
  const auto& plan = p.cluster({0, 1, 2});
  CHECK(static_cast<long long>(plan.policy.states.size()) <= cluster_state_bound(plan.cluster));
  CHECK(plan.policy.index.size() == plan.policy.states.size());
  for (std::size_t i = 0; i < plan.policy.states.size(); ++i)
    CHECK(plan.policy.find(plan.policy.states[i]) == static_cast<int>(i));
}

TEST_CASE("switching clears the departed target's bit") {
  Pipeline p(parse_scenario(test::toy_cluster_doc(2)));
  const Cluster& c = p.cluster({0, 1}).cluster;
  const ClusterState s{3u, 0, 0, 0};
  const ClusterState n = transition(c, s, 1);
  CHECK(n.visited == 2u);
  CHECK(n.current == 1);
  CHECK(n.depth == 0);
  CHECK(cluster_reward(c, s, 1, p.dp()) <= 0.0);
  const ClusterState stay = transition(c, s, 0);
  CHECK(stay.visited == 3u);
  CHECK(stay.depth == std::min(1, c.horizon(0, 0)));
}

TEST_CASE("tours visit each target at most once and end where they stop") {
  Pipeline p(parse_scenario(test::toy_cluster_doc(3)));
  const auto& plan = p.cluster({0, 1, 2});
  for (const auto& per_target : plan.policy.tours)
    for (const Tour& t : per_target) {
      std::vector<int> order;
      for (const auto& s : t.stops)
        if (order.empty() || order.back() != s.target) order.push_back(s.target);
      std::vector<int> sorted = order;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
      CHECK((t.at(t.length) - t.end()).norm() < 1e-9);
      CHECK((t.at(0.0) - t.start()).norm() < 1e-9);
    }
  CHECK(!plan.entries.empty());
}

TEST_CASE("oversized clusters are rejected") {
  nlohmann::json doc = test::toy_cluster_doc(3);
  doc["cluster"]["m_max"] = 2;
  Pipeline p(parse_scenario(doc));
  CHECK_THROWS_AS(p.cluster({0, 1, 2}), ClusterSizeError);
}
