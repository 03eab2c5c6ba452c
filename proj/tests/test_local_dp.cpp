#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hase;

namespace {

Pipeline toy(double rho = 0.05) {
  nlohmann::json doc = test::toy_line_doc();
  doc["dp"]["rho"] = rho;
  return Pipeline(parse_scenario(doc));
}

}  // namespace

TEST_CASE("observation never raises the trace") {
  Pipeline p = toy();
  const TargetPlan& t = p.target(0);
  for (int pose = 0; pose < t.model->num_poses(); ++pose)
    for (int c = 0; c < t.model->num_covs(); ++c) {
      const int n = t.model->observed(pose, c);
      CHECK(p.grid().trace(n) <= p.grid().trace(c));
      if (n != c) CHECK(p.grid().trace(n) < p.grid().trace(c));
    }
  CHECK(t.model->observed(0, 0) == 0);
}

TEST_CASE("value iteration matches finite-horizon backward induction") {
  Pipeline p = toy();
  const TargetPlan& t = p.target(0);
  const LocalModel& m = *t.model;
  const DpConfig cfg = p.dp();
  std::vector<double> v(static_cast<std::size_t>(m.num_states()), 0.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> next(v.size());
    for (int s = 0; s < m.num_states(); ++s) {
      double best = -1e300;
      for (int a = 0; a < m.num_actions(); ++a)
        best = std::max(best, m.reward(m.state(s), a, cfg.rho) + cfg.gamma * v[static_cast<std::size_t>(m.index(m.step(m.state(s), a)))]);
      next[static_cast<std::size_t>(s)] = best;
    }
    v = next;
  }
  for (int s = 0; s < m.num_states(); ++s) CHECK(t.policy->values[static_cast<std::size_t>(s)] == doctest::Approx(v[static_cast<std::size_t>(s)]).epsilon(1e-6));
}

TEST_CASE("threaded sweeps give identical tables") {
  Pipeline p = toy();
  const TargetPlan& t = p.target(0);
  DpConfig cfg = p.dp();
  cfg.threads = 3;
  const LocalPolicy q = solve(*t.model, cfg);
  CHECK(q.values == t.policy->values);
  CHECK(q.actions == t.policy->actions);
}

TEST_CASE("rollouts reach a fixed point") {
  Pipeline p = toy();
  const TargetPlan& t = p.target(0);
  for (int s = 0; s < t.model->num_states(); ++s) {
    const Rollout r = rollout(*t.policy, *t.model, t.model->state(s));
    CHECK(r.converged);
    CHECK(r.states.size() == r.actions.size() + 1);
    const LocalState& last = r.states.back();
    CHECK(t.model->step(last, t.policy->action(last)) == last);
  }
}

TEST_CASE("with rho = 1 the robot never moves") {
  Pipeline p = toy(1.0);
  const PathReport r = run_single(p);
  CHECK(r.distance == 0.0);
}

TEST_CASE("non-convergence is reported") {
  Pipeline p = toy();
  DpConfig cfg = p.dp();
  cfg.max_sweeps = 1;
  CHECK_THROWS_AS(solve(*p.target(0).model, cfg), NonConvergedError);
}

TEST_CASE("invalid discount is rejected") {
  DpConfig cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
