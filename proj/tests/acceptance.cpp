// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
// limits are fixed below; nothing here is tuned at run time.

#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"
#include "hase/sensing.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

using namespace hase;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool run(int id, const char* name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = o.pass && secs < limit_s;
  std::printf("%s [%2d] %s: %s (%.2f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
  return pass;
}

// 1
Outcome trace_monotonicity() {
  constexpr double kMargin = 1e-12;
  Rng rng = substream(101, "criterion-1");
  double worst = 1e300;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 2;
    const Matrix a = test::random_spd(n, rng, 1e-2, 1e2);
    const Matrix b = test::random_spd(n, rng, 1e-2, 1e2);
    worst = std::min(worst, a.trace() - fuse(a, b).trace());
  }
  return {worst > kMargin, fmt("smallest trace drop %.3e over 1000 pairs", worst)};
}

// 2
Outcome information_gain_spd() {
  Rng rng = substream(102, "criterion-2");
  double worst = 1e300;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 2;
    const Matrix c = test::random_spd(n, rng, 1e-3, 1e3);
    const Matrix i = Matrix::Identity(n, n);
    const Matrix m = i - (i + c).inverse();
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m)).eigenvalues().minCoeff());
  }
  return {worst > 0.0, fmt("smallest eigenvalue %.3e over 1000 matrices", worst)};
}

GridParams reference_grid(int dim) {
  GridParams p;
  p.dim = dim;
  p.lambda_max = 1.0;
  p.n_lambda = 6;
  p.n_alpha = 3;
  p.n_dirs_max = 98;
  p.kappa_lambda = 9.0;
  p.kappa_alpha = 3.0;
  return p;
}

// 3
Outcome grid_cardinality() {
  long long expected = 0;
  for (int i = 1; i <= 6; ++i) expected += static_cast<long long>(std::ceil(std::exp(9.0 * (i - 6) / 6.0) * 98.0));
  expected = 1 + 3 * expected;
  std::string detail;
  bool ok = true;
  for (int dim : {2, 3}) {
    const CovGrid g = CovGrid::assemble(reference_grid(dim), substream_seed(103, "grid", static_cast<std::uint64_t>(dim)));
    ok = ok && g.size() == expected;
    detail += fmt("n=%d |C|=%d ", dim, g.size());
  }
  return {ok, detail + fmt("expected %lld", expected)};
}

// Staged oracle over every member's generating triple.
int oracle_project(const CovGrid& g, const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sigma));
  const Vector ev = es.eigenvalues();
  const double top = ev(ev.size() - 1);
  if (top < g.tolerance()) return 0;
  const Vector u = es.eigenvectors().col(ev.size() - 1);
  const double ratio = std::max(0.0, ev(0)) / top;
  const EigenGrid& e = g.eigen();
  int best = -1;
  double k1 = 0, k2 = 0, k3 = 0;
  GridTriple bt;
  for (int i = 1; i < g.size(); ++i) {
    const GridTriple t = *g.triple(i);
    const double c1 = std::abs(e.lambdas[static_cast<std::size_t>(t.lambda)] - top);
    const double c2 = -std::abs(e.dirs[static_cast<std::size_t>(t.lambda)][static_cast<std::size_t>(t.dir)].dot(u));
    const double c3 = std::abs(e.alphas[static_cast<std::size_t>(t.alpha)] - ratio);
    bool better = best < 0;
    if (!better) {
      if (c1 != k1) better = c1 < k1;
      else if (t.lambda != bt.lambda) better = t.lambda < bt.lambda;
      else if (c2 != k2) better = c2 < k2;
      else if (t.dir != bt.dir) better = t.dir < bt.dir;
      else if (c3 != k3) better = c3 < k3;
      else better = t.alpha < bt.alpha;
    }
    if (better) {
      best = i;
      k1 = c1;
      k2 = c2;
      k3 = c3;
      bt = t;
    }
  }
  return best;
}

// 4
Outcome projection_idempotence() {
  constexpr double kRoundoff = 1e-12;
  int members = 0, self = 0, random_ok = 0, random_total = 0;
  for (int dim : {2, 3}) {
    const CovGrid g = CovGrid::assemble(reference_grid(dim), substream_seed(104, "grid", static_cast<std::uint64_t>(dim)));
    for (int i = 0; i < g.size(); ++i) {
      ++members;
      const int j = g.project(g.member(i));
      const auto t = g.triple(i);
      // An alpha = 1 member is lambda I whatever its direction label.
      const bool isotropic = t && g.eigen().alphas[static_cast<std::size_t>(t->alpha)] == 1.0;
      if (j == i || (isotropic && g.triple(j)->lambda == t->lambda && g.triple(j)->alpha == t->alpha &&
                     (g.member(j) - g.member(i)).cwiseAbs().maxCoeff() <= kRoundoff * g.member(i).cwiseAbs().maxCoeff()))
        ++self;
    }
    Rng rng = substream(104, "criterion-4", static_cast<std::uint64_t>(dim));
    for (int k = 0; k < 500; ++k) {
      const Matrix s = test::random_spd(dim, rng, 0.3 * g.tolerance(), 1.5);
      ++random_total;
      random_ok += g.project(s) == oracle_project(g, s);
    }
  }
  return {self == members && random_ok == random_total,
          fmt("%d/%d members fixed, %d/%d random matrices match the oracle", self, members, random_ok, random_total)};
}

// 5
Outcome local_dp_optimality() {
  constexpr double kValueTol = 1e-3;
  constexpr int kHorizon = 50;
  constexpr double kTie = 1e-9;
  Pipeline p(load_scenario(test::scenario_path("toy_line.json")));
  const GridParams& gp = p.grid().params();
  if (gp.n_lambda != 3 || gp.n_alpha != 2 || gp.n_dirs_max != 4 || p.target(0).ws.size() != 5 || p.dp().gamma != 0.9)
    return {false, "toy scenario does not have the required shape"};
  const TargetPlan& t = p.target(0);
  const LocalModel& m = *t.model;
  const DpConfig cfg = p.dp();
  const auto n = static_cast<std::size_t>(m.num_states());
  std::vector<double> v(n, 0.0);
  auto q = [&](const std::vector<double>& val, int s, int a) {
    return m.reward(m.state(s), a, cfg.rho) + cfg.gamma * val[static_cast<std::size_t>(m.index(m.step(m.state(s), a)))];
  };
  for (int k = 0; k < kHorizon; ++k) {
    std::vector<double> next(n);
    for (int s = 0; s < m.num_states(); ++s) {
      double best = -1e300;
      for (int a = 0; a < m.num_actions(); ++a) best = std::max(best, q(v, s, a));
      next[static_cast<std::size_t>(s)] = best;
    }
    v.swap(next);
  }
  double err = 0.0;
  int mismatched = 0;
  for (int s = 0; s < m.num_states(); ++s) {
    err = std::max(err, std::abs(v[static_cast<std::size_t>(s)] - t.policy->values[static_cast<std::size_t>(s)]));
    double best = -1e300;
    for (int a = 0; a < m.num_actions(); ++a) best = std::max(best, q(v, s, a));
    int pick = 0;
    while (q(v, s, pick) < best - kTie * std::max(1.0, std::abs(best))) ++pick;
    mismatched += pick != t.policy->actions[static_cast<std::size_t>(s)];
  }
  return {err <= kValueTol && mismatched == 0,
          fmt("%d states, max value gap %.2e, %d policy mismatches", m.num_states(), err, mismatched)};
}

// 6
Outcome rollout_fixed_points() {
  int rollouts = 0, failures = 0;
  for (const char* name : {"toy_line.json", "desk_single.json", "desk_cluster.json"}) {
    Pipeline p(load_scenario(test::scenario_path(name)));
    for (int i = 0; i < p.num_targets(); ++i) {
      TargetPlan& t = p.target(i);
      for (const LocalState& e : entry_points(t.ws, t.prior, p.grid())) {
        ++rollouts;
        try {
          const Rollout r = rollout(*t.policy, *t.model, e, t.model->num_states());
          failures += !r.converged;
        } catch (const OptimalityViolation&) {
          ++failures;
        }
      }
    }
  }
  return {failures == 0 && rollouts > 0, fmt("%d entry rollouts, %d without a fixed point", rollouts, failures)};
}

// 7
Outcome baseline_ordering() {
  Pipeline p(load_scenario(test::scenario_path("desk_single.json")));
  const double opt = run_single(p).reward;
  std::map<std::string, double> r;
  for (const char* b : {"closer", "static", "circle", "random"}) r[b] = run_baseline(p, b).reward;
  bool ok = true;
  for (const auto& [name, value] : r) ok = ok && opt >= value;
  const double strong = std::min(r["closer"], r["random"]);
  ok = ok && r["static"] < strong && r["circle"] < strong;
  return {ok, fmt("optimal %.4f, closer %.4f, random %.4f, circle %.4f, static %.4f", opt, r["closer"], r["random"],
                  r["circle"], r["static"])};
}

// 8
Outcome rho_tradeoff() {
  constexpr double kTies = 1e-9;
  const Scenario s = load_scenario(test::scenario_path("desk_single.json"));
  if (s.rho_sweep.size() != 5) return {false, "sweep must have five points"};
  const auto rows = rho_sweep(s, 1);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt("rho %.2f: dist %.3f ur %.3f; ", rows[i].rho, rows[i].path.distance, rows[i].path.uncertainty_reduction);
    if (i == 0) continue;
    ok = ok && rows[i].path.distance <= rows[i - 1].path.distance + kTies;
    ok = ok && rows[i].path.uncertainty_reduction <= rows[i - 1].path.uncertainty_reduction + kTies;
  }
  return {ok, detail};
}

double exhaustive(const Cluster& c, const DpConfig& cfg, const ClusterState& s, int depth,
                  std::map<std::pair<std::uint64_t, int>, double>& memo) {
  if (depth == 0) return 0.0;
  const auto key = std::make_pair(s.key(), depth);
  if (const auto it = memo.find(key); it != memo.end()) return it->second;
  double best = -1e300;
  for (int a = 0; a < c.size(); ++a)
    best = std::max(best, cluster_reward(c, s, a, cfg) + cfg.gamma * exhaustive(c, cfg, transition(c, s, a), depth - 1, memo));
  memo.emplace(key, best);
  return best;
}

// 9
Outcome cluster_brute_force() {
  constexpr double kTol = 1e-6;
  constexpr int kDepth = 20;
  double worst = 0.0;
  int starts = 0;
  for (int m : {2, 3}) {
    Pipeline p(parse_scenario(test::toy_cluster_doc(m)));
    std::vector<int> ids;
    for (int i = 0; i < m; ++i) ids.push_back(i);
    const auto& plan = p.cluster(ids);
    std::map<std::pair<std::uint64_t, int>, double> memo;
    for (int i = 0; i < m; ++i)
      for (std::size_t j = 0; j < plan.cluster.entries[static_cast<std::size_t>(i)].size(); ++j) {
        const ClusterState s0{(1u << m) - 1u, i, static_cast<int>(j), 0};
        const double oracle = exhaustive(plan.cluster, p.dp(), s0, kDepth, memo);
        worst = std::max(worst, std::abs(oracle - plan.policy.tours[static_cast<std::size_t>(i)][j].reward));
        ++starts;
      }
  }
  return {worst <= kTol, fmt("%d start states, max |tour - exhaustive| %.2e", starts, worst)};
}

std::vector<std::string> fleet_traces;

// 10
Outcome fleet_exclusivity() {
  const Scenario base = load_scenario(test::scenario_path("desk_fleet.json"));
  int ok_runs = 0, clusters = 0;
  double worst_error = 0.0, tolerance = 0.0;
  std::string first_failure;
  fleet_traces.clear();
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Scenario s = base;
    reseed(s, seed);
    Pipeline p(s);
    std::ostringstream trace;
    try {
      const FleetRun run = run_fleet(p, &trace);
      double err = 0.0;
      for (double e : run.result.error_trace) err = std::max(err, e);
      bool done = true;
      for (const auto& r : run.result.robots) done = done && r.mode == Mode::done;
      worst_error = std::max(worst_error, err);
      tolerance = run.tolerance;
      clusters = static_cast<int>(run.partition.size());
      const bool ok = run.result.exclusive() && done && err <= run.tolerance && run.partition.size() == 4 &&
                      run.result.robots.size() == 3 && s.targets.size() == 20;
      ok_runs += ok;
      if (!ok && first_failure.empty()) first_failure = fmt(" first failure: seed %llu", static_cast<unsigned long long>(seed));
    } catch (const StallError& e) {
      if (first_failure.empty()) first_failure = std::string(" stall: ") + e.what();
    }
    fleet_traces.push_back(trace.str());
  }
  return {ok_runs == 25, fmt("%d/25 runs exclusive and terminated, %d clusters, worst error %.2e <= tolerance %.2e",
                             ok_runs, clusters, worst_error, tolerance) + first_failure};
}

// 11
Outcome hundred_target_fleet() {
  Pipeline p(load_scenario(test::scenario_path("fleet_100.json")));
  std::ostringstream trace;
  const FleetRun run = run_fleet(p, &trace);
  std::istringstream in(trace.str());
  std::size_t tick_records = 0, obs_records = 0;
  for (std::string line; std::getline(in, line);) (nlohmann::json::parse(line).contains("mode") ? tick_records : obs_records)++;
  bool done = true;
  for (const auto& r : run.result.robots) done = done && r.mode == Mode::done;
  const bool full = tick_records == static_cast<std::size_t>(run.result.ticks) * run.result.robots.size() &&
                    obs_records == run.result.observations.size() && obs_records > 0;
  const bool ok = done && run.result.exclusive() && full && p.num_targets() == 100 && run.result.robots.size() == 8 &&
                  p.scenario().m_max == 8;
  return {ok, fmt("%d targets, %zu clusters, %zu robots, %lld ticks, %zu trace records", p.num_targets(),
                  run.partition.size(), run.result.robots.size(), run.result.ticks, tick_records + obs_records)};
}

// 12
Outcome stereo_appendix() {
  constexpr double kJacobianRel = 1e-6;
  constexpr double kCoeffTol = 1e-8;
  constexpr int kSamples = 600;
  constexpr double kSigma = 0.5;
  Rng rng = substream(112, "criterion-12");
  std::uniform_real_distribution<double> px(-300.0, 300.0), disp(5.0, 120.0);

  StereoRig rig;
  rig.baseline = 0.12;
  double worst_j = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double xr = px(rng), y = px(rng);
    const Pixels p(xr + disp(rng), xr, y);
    const Matrix3 j = stereo_jacobian(rig, p);
    Eigen::Matrix<long double, 3, 3> fd;
    constexpr long double h = 1e-5L;
    for (int c = 0; c < 3; ++c) {
      Eigen::Matrix<long double, 3, 1> hi = p.cast<long double>(), lo = hi;
      hi(c) += h;
      lo(c) -= h;
      fd.col(c) = (triangulate_pixels<long double>(rig.baseline, rig.focal, hi(0), hi(1), hi(2)) -
                   triangulate_pixels<long double>(rig.baseline, rig.focal, lo(0), lo(1), lo(2))) / (2 * h);
    }
    worst_j = std::max(worst_j, static_cast<double>((fd - j.cast<long double>()).norm() / j.cast<long double>().norm()));
  }

  Eigen::Matrix<double, 6, 3> c = Eigen::Matrix<double, 6, 3>::Zero();
  c.row(0) << 1.5, -0.8, 0.4;
  c.row(1) << 0.0, 0.0, 1.002;
  c.row(2) << 0.501, -0.499, 0.0;
  c.row(3) << 0.5, 0.5, 0.0;
  c.row(4) << 2e-5, -1e-5, 3e-6;
  c.row(5) << 0.03, 0.03, 0.0;
  auto sample = [&](double sigma) {
    std::vector<PixelPair> out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (int k = 0; k < kSamples; ++k) {
      const double xr = px(rng), y = px(rng);
      const Pixels raw(xr + disp(rng), xr, y);
      Pixels truth = (pixel_features(raw) * c).transpose();
      if (sigma > 0.0) truth += Pixels(noise(rng), noise(rng), noise(rng));
      out.push_back({raw, truth});
    }
    return out;
  };
  const double coeff_err = (fit_corrector(sample(0.0)).coeffs - c).cwiseAbs().maxCoeff();

  const std::vector<PixelPair> training = sample(kSigma);
  const PixelCorrector fit = fit_corrector(training);
  auto residual_mean = [&](const std::vector<PixelPair>& set, bool corrected) {
    Vector3 mean = Vector3::Zero();
    for (const auto& s : set) mean += (s.truth - (corrected ? correct(fit, s.raw) : s.raw)) / static_cast<double>(set.size());
    return mean.cwiseAbs().maxCoeff();
  };
  const double bound = 3.0 * kSigma / std::sqrt(static_cast<double>(kSamples));
  const double raw_mean = residual_mean(training, false);
  const double fitted_mean = residual_mean(training, true);
  const double held_out = residual_mean(sample(kSigma), true);
  return {worst_j < kJacobianRel && coeff_err < kCoeffTol && fitted_mean < bound && raw_mean > bound,
          fmt("jacobian rel err %.2e, coefficient err %.2e, residual mean %.2e (raw %.3f, held-out %.3f) vs %.3f",
              worst_j, coeff_err, fitted_mean, raw_mean, held_out, bound)};
}

// 13
Outcome determinism() {
  if (fleet_traces.size() != 25) return {false, "criterion 10 traces are missing"};
  const std::vector<std::string> first = fleet_traces;
  fleet_exclusivity();
  int same = 0;
  std::size_t bytes = 0;
  for (std::size_t k = 0; k < first.size(); ++k) {
    same += first[k] == fleet_traces[k] && !first[k].empty();
    bytes += first[k].size();
  }
  return {same == 25, fmt("%d/25 traces byte-identical (%zu bytes)", same, bytes)};
}

}  // namespace

int main() {
  int failed = 0;
  failed += !run(1, "trace monotonicity", 1, trace_monotonicity);
  failed += !run(2, "information gain is SPD", 1, information_gain_spd);
  failed += !run(3, "grid cardinality", 30, grid_cardinality);
  failed += !run(4, "projection idempotence", 30, projection_idempotence);
  failed += !run(5, "local DP optimality", 10, local_dp_optimality);
  failed += !run(6, "rollouts reach fixed points", 60, rollout_fixed_points);
  failed += !run(7, "baseline ordering", 60, baseline_ordering);
  failed += !run(8, "rho tradeoff", 300, rho_tradeoff);
  failed += !run(9, "cluster DP exhaustive search", 60, cluster_brute_force);
  failed += !run(10, "fleet exclusivity and termination", 300, fleet_exclusivity);
  failed += !run(11, "hundred-target fleet", 600, hundred_target_fleet);
  failed += !run(12, "stereo Jacobian and pixel corrector", 10, stereo_appendix);
  failed += !run(13, "trace determinism", 300, determinism);
  std::printf("%d of 13 criteria failed\n", failed);
  return failed ? 1 : 0;
}
