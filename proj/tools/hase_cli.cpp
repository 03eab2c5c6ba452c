// hase: command-line front end for the planning pipeline.

#include "hase/error.hpp"
#include "hase/pipeline.hpp"
#include "hase/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hase;

namespace {

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 1;
  bool print_config = false;
  int target = 0;
  std::string policy;
  std::string kind;
  std::string input;
  std::string output;
};

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }
  ~Outputs() {
    if (!committed_)
      for (const auto& p : written_) fs::remove(p);
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    written_.push_back(p);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigurationError("cannot write " + p.string());
    return f;
  }
  void json_file(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

Scenario load(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  if (o.seed) reseed(s, *o.seed);
  return s;
}

void write_timings(Outputs& out, const Pipeline& p) {
  json j = json::object();
  for (const auto& [stage, secs] : p.times.seconds) j[stage] = secs;
  out.json_file("timings.json", j);
}

json sizes(Pipeline& p) {
  const TargetPlan& t = p.target(0);
  return {{"grid", p.grid().size()}, {"poses", t.ws.size()}, {"actions", t.ws.num_actions},
          {"local_states", t.model->num_states()}};
}

int grid_build(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  out.json_file("grid.json", grid_to_json(p.grid()));
  write_timings(out, p);
  out.commit();
  std::cout << "grid: " << p.grid().size() << " members, tolerance " << p.grid().tolerance() << '\n';
  return 0;
}

int plan_local(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  const TargetPlan& t = p.target(o.target);
  out.json_file("local_policy.json", policy_to_json(*t.policy, t.ws, p.grid()));
  write_timings(out, p);
  out.commit();
  std::cout << "local policy: " << t.model->num_states() << " states, " << t.policy->sweeps << " sweeps\n";
  return 0;
}

int plan_cluster(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  std::vector<Vector> means;
  for (int i = 0; i < p.num_targets(); ++i) means.push_back(p.scenario().targets[static_cast<std::size_t>(i)].mean);
  const auto parts = partition_targets(means, p.scenario().m_max);
  json all = json::array();
  for (std::size_t c = 0; c < parts.size(); ++c) {
    const auto& plan = p.cluster(parts[c]);
    all.push_back(cluster_policy_to_json(plan.policy, plan.cluster, static_cast<int>(c)));
  }
  out.json_file("cluster_policies.json", all);
  write_timings(out, p);
  out.commit();
  std::cout << "cluster policies: " << parts.size() << " clusters, " << p.local_solves() << " local solves\n";
  return 0;
}

int run_single_cmd(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  json j = report_json(run_single(p));
  j["sizes"] = sizes(p);
  out.json_file("report.json", j);
  write_timings(out, p);
  out.commit();
  std::cout << "reward " << j["reward"].get<double>() << ", distance " << j["distance"].get<double>() << '\n';
  return 0;
}

int run_baseline_cmd(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  json j = report_json(run_baseline(p, o.policy));
  j["sizes"] = sizes(p);
  out.json_file("report.json", j);
  write_timings(out, p);
  out.commit();
  std::cout << o.policy << ": reward " << j["reward"].get<double>() << '\n';
  return 0;
}

int run_cluster_cmd(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  json j = report_json(run_cluster(p));
  j["sizes"] = sizes(p);
  out.json_file("report.json", j);
  write_timings(out, p);
  out.commit();
  std::cout << "tour reward " << j["reward"].get<double>() << ", " << j["observations"].get<int>()
            << " observations\n";
  return 0;
}

int run_fleet_cmd(const Options& o) {
  Pipeline p(load(o), o.threads);
  Outputs out(o.out);
  std::ofstream trace = out.open("trace.jsonl");
  FleetRun run;
  try {
    run = run_fleet(p, &trace);
  } catch (const StallError& e) {
    trace.close();
    std::ofstream(fs::path(o.out) / "stall.txt") << e.dump();  // kept for diagnosis
    throw;
  }
  trace.close();
  json j = report_json(run);
  j["sizes"] = sizes(p);
  out.json_file("report.json", j);
  {
    std::ofstream f = out.open("assignment-timeline.csv");
    write_timeline_csv(f, run.result);
  }
  {
    std::ofstream f = out.open("summary.csv");
    write_summary_csv(f, run);
  }
  write_timings(out, p);
  out.commit();
  std::cout << run.partition.size() << " clusters, " << run.result.ticks << " ticks, exclusive "
            << (run.result.exclusive() ? "yes" : "no") << '\n';
  return 0;
}

int sweep_rho_cmd(const Options& o) {
  const Scenario s = load(o);
  Outputs out(o.out);
  const auto rows = rho_sweep(s, o.threads);
  json j = json::array();
  for (const auto& r : rows) {
    json row = report_json(r.path);
    row["rho"] = r.rho;
    j.push_back(row);
  }
  out.json_file("sweep.json", j);
  {
    std::ofstream f = out.open("rho-sweep.csv");
    write_sweep_csv(f, rows);
  }
  out.commit();
  return 0;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigurationError("cannot read " + path);
  return json::parse(f);
}

// Rebuilds CSV series from run artefacts.
int emit_cmd(const Options& o) {
  std::ofstream out(o.output, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + o.output);
  if (o.kind == "rho-sweep") {
    std::vector<SweepRow> rows;
    for (const auto& r : read_json(o.input)) {
      SweepRow row;
      row.rho = r.at("rho").get<double>();
      row.path.reward = r.at("reward").get<double>();
      row.path.uncertainty_reduction = r.at("uncertainty_reduction").get<double>();
      row.path.distance = r.at("distance").get<double>();
      rows.push_back(row);
    }
    write_sweep_csv(out, rows);
  } else if (o.kind == "error-vs-observations") {
    const json j = read_json(o.input);
    ClusterRun run;
    run.observed_target = j.at("observed_target").get<std::vector<int>>();
    run.error_mean = j.at("error_mean").get<std::vector<double>>();
    run.error_std = j.at("error_std").get<std::vector<double>>();
    write_error_csv(out, run);
  } else if (o.kind == "assignment-timeline") {
    FleetResult r;
    for (const auto& e : read_json(o.input).at("events"))
      r.events.push_back({e[0].get<long long>(), e[1].get<int>(), e[2].get<int>(), e[3].get<std::string>()});
    write_timeline_csv(out, r);
  } else if (o.kind == "trajectory-polyline") {
    std::ifstream in(o.input);
    if (!in) throw ConfigurationError("cannot read " + o.input);
    FleetResult r;
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      if (!rec.contains("mode")) continue;
      const auto tick = rec.at("tick").get<std::size_t>();
      const auto robot = rec.at("robot").get<std::size_t>();
      if (r.positions.size() <= tick) r.positions.resize(tick + 1);
      if (r.positions[tick].size() <= robot) r.positions[tick].resize(robot + 1);
      r.positions[tick][robot] = vector_from_json(rec.at("position"));
    }
    write_trajectory_csv(out, r);
  } else {
    throw CLI::ValidationError("--kind", "unknown kind '" + o.kind + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active state estimation planner"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the root seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--print-config", o.print_config, "Print the complete configuration and exit");
  };

  std::function<int(const Options&)> action;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, int (*fn)(const Options&)) {
    CLI::App* sub = parent->add_subcommand(name, help);
    common(sub);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };

  CLI::App* grid = app.add_subcommand("grid", "Covariance grid")->require_subcommand(1);
  leaf(grid, "build", "Build and store the covariance grid", grid_build);

  CLI::App* plan = app.add_subcommand("plan", "Policy synthesis")->require_subcommand(1);
  leaf(plan, "local", "Solve one target's local policy", plan_local)
      ->add_option("--target", o.target, "Target index");
  leaf(plan, "cluster", "Partition and solve every cluster", plan_cluster);

  CLI::App* run = app.add_subcommand("run", "Simulations")->require_subcommand(1);
  leaf(run, "single", "Optimal policy on the first target", run_single_cmd);
  leaf(run, "cluster", "One robot touring one cluster", run_cluster_cmd);
  leaf(run, "fleet", "Decentralized fleet over every cluster", run_fleet_cmd);
  leaf(run, "baseline", "Scripted single-target policy", run_baseline_cmd)
      ->add_option("--policy", o.policy, "closer, static, circle or random")
      ->required()
      ->check(CLI::IsMember({"closer", "static", "circle", "random"}));

  CLI::App* sweep = app.add_subcommand("sweep", "Parameter sweeps")->require_subcommand(1);
  leaf(sweep, "rho", "Single-target runs over the configured rho values", sweep_rho_cmd);

  CLI::App* emit = app.add_subcommand("emit", "CSV series from run artefacts");
  emit->add_option("--kind", o.kind, "rho-sweep, error-vs-observations, assignment-timeline, trajectory-polyline")
      ->required();
  emit->add_option("--input", o.input, "sweep.json, report.json or trace.jsonl")->required()->check(CLI::ExistingFile);
  emit->add_option("--output", o.output, "CSV path")->required();
  emit->callback([&] { action = emit_cmd; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (o.print_config) {
      std::cout << scenario_to_json(load(o)).dump(2) << '\n';
      return 0;
    }
    return action(o);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const NonConvergedError& e) {
    std::cerr << "not converged: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const StallError& e) {
    std::cerr << "stalled: " << e.what() << '\n';
    return 4;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
