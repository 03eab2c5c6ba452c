#include "hase/serialize.hpp"

#include "hase/error.hpp"
#include "hase/rng.hpp"

#include <cstdio>

namespace hase {

using nlohmann::json;

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vector_from_json(j[static_cast<std::size_t>(r)]).transpose();
  return m;
}

json grid_to_json(const CovGrid& grid) {
  const auto& p = grid.params();
  json j;
  j["kind"] = "covariance_grid";
  j["params"] = {{"dim", p.dim},
                 {"lambda_max", p.lambda_max},
                 {"n_lambda", p.n_lambda},
                 {"n_alpha", p.n_alpha},
                 {"n_dirs_max", p.n_dirs_max},
                 {"kappa_lambda", p.kappa_lambda},
                 {"kappa_alpha", p.kappa_alpha},
                 {"charge_iters", p.charge_iters},
                 {"charge_step", p.charge_step}};
  j["seed"] = grid.seed();
  j["lambdas"] = grid.eigen().lambdas;
  j["alphas"] = grid.eigen().alphas;
  j["directions"] = json::array();
  for (const auto& set : grid.eigen().dirs) {
    json s = json::array();
    for (const auto& u : set) s.push_back(to_json(u));
    j["directions"].push_back(s);
  }
  j["tolerance"] = grid.tolerance();
  j["zero_index"] = CovGrid::zero_index();
  j["members"] = json::array();
  for (const auto& m : grid.members()) j["members"].push_back(to_json(m));
  return j;
}

CovGrid grid_from_json(const json& j) {
  try {
    if (j.at("kind") != "covariance_grid") throw ConfigurationError("document is not a covariance grid");
    const json& pj = j.at("params");
    GridParams p;
    p.dim = pj.at("dim").get<int>();
    p.lambda_max = pj.at("lambda_max").get<double>();
    p.n_lambda = pj.at("n_lambda").get<int>();
    p.n_alpha = pj.at("n_alpha").get<int>();
    p.n_dirs_max = pj.at("n_dirs_max").get<int>();
    p.kappa_lambda = pj.at("kappa_lambda").get<double>();
    p.kappa_alpha = pj.at("kappa_alpha").get<double>();
    p.charge_iters = pj.at("charge_iters").get<int>();
    p.charge_step = pj.at("charge_step").get<double>();
    EigenGrid e;
    e.lambdas = j.at("lambdas").get<std::vector<double>>();
    e.alphas = j.at("alphas").get<std::vector<double>>();
    for (const auto& set : j.at("directions")) {
      std::vector<Vector> dirs;
      for (const auto& u : set) dirs.push_back(vector_from_json(u));
      e.dirs.push_back(std::move(dirs));
    }
    return CovGrid::from_parts(p, j.at("seed").get<std::uint64_t>(), std::move(e));
  } catch (const json::exception& ex) {
    throw ConfigurationError(std::string("malformed grid document: ") + ex.what());
  }
}

std::string grid_hash(const CovGrid& grid) {
  json j = grid_to_json(grid);
  j.erase("members");  // derived from the rest
  return hex64(fnv1a(j.dump()));
}

json workspace_to_json(const Workspace& ws) {
  json j;
  j["kind"] = "workspace";
  j["poses"] = json::array();
  for (const auto& p : ws.poses) j["poses"].push_back({{"position", to_json(p.position)}, {"yaw", p.yaw}, {"pitch", p.pitch}});
  j["num_actions"] = ws.num_actions;
  j["stationary"] = ws.has_stationary;
  j["transition"] = ws.transition;
  j["travel"] = ws.travel;
  j["boundary"] = ws.boundary;
  return j;
}

std::string workspace_hash(const Workspace& ws) { return hex64(fnv1a(workspace_to_json(ws).dump())); }

json policy_to_json(const LocalPolicy& policy, const Workspace& ws, const CovGrid& grid) {
  json j;
  j["kind"] = "local_policy";
  j["workspace_hash"] = workspace_hash(ws);
  j["grid_hash"] = grid_hash(grid);
  j["config"] = {{"gamma", policy.config.gamma},
                 {"rho", policy.config.rho},
                 {"vi_tolerance", policy.config.vi_tolerance},
                 {"max_sweeps", policy.config.max_sweeps}};
  j["target_mean"] = to_json(policy.target_mean);
  j["num_poses"] = policy.num_poses;
  j["num_covs"] = policy.num_covs;
  j["sweeps"] = policy.sweeps;
  j["values"] = policy.values;
  j["actions"] = policy.actions;
  return j;
}

LocalPolicy policy_from_json(const json& j, const Workspace& ws, const CovGrid& grid) {
  try {
    if (j.at("kind") != "local_policy") throw ConfigurationError("document is not a local policy");
    if (j.at("workspace_hash").get<std::string>() != workspace_hash(ws))
      throw ConfigurationError("policy was solved for a different workspace");
    if (j.at("grid_hash").get<std::string>() != grid_hash(grid))
      throw ConfigurationError("policy was solved for a different grid");
    LocalPolicy p;
    p.config.gamma = j.at("config").at("gamma").get<double>();
    p.config.rho = j.at("config").at("rho").get<double>();
    p.config.vi_tolerance = j.at("config").at("vi_tolerance").get<double>();
    p.config.max_sweeps = j.at("config").at("max_sweeps").get<int>();
    p.target_mean = vector_from_json(j.at("target_mean"));
    p.num_poses = j.at("num_poses").get<int>();
    p.num_covs = j.at("num_covs").get<int>();
    p.sweeps = j.at("sweeps").get<int>();
    p.values = j.at("values").get<std::vector<double>>();
    p.actions = j.at("actions").get<std::vector<int>>();
    if (static_cast<int>(p.values.size()) != p.num_states() || p.actions.size() != p.values.size())
      throw ConfigurationError("policy tables have the wrong size");
    return p;
  } catch (const json::exception& ex) {
    throw ConfigurationError(std::string("malformed policy document: ") + ex.what());
  }
}

json tour_to_json(const Tour& t) {
  json j;
  j["target"] = t.target;
  j["entry"] = t.entry;
  j["length"] = t.length;
  j["reward"] = t.reward;
  j["steps"] = t.steps;
  j["stops"] = json::array();
  for (std::size_t k = 0; k < t.stops.size(); ++k) {
    const auto& s = t.stops[k];
    j["stops"].push_back({{"position", to_json(s.position)},
                          {"arc", t.arc[k]},
                          {"target", s.global},
                          {"pose", s.pose},
                          {"dwell", s.observations}});
  }
  return j;
}

json cluster_policy_to_json(const ClusterPolicy& policy, const Cluster& cluster, int cluster_id) {
  json j;
  j["kind"] = "cluster_policy";
  j["cluster"] = cluster_id;
  j["targets"] = json::array();
  for (const auto& t : cluster.targets) j["targets"].push_back(t.id);
  j["states"] = policy.states.size();
  j["sweeps"] = policy.sweeps;
  j["entries"] = json::array();
  for (std::size_t i = 0; i < policy.tours.size(); ++i)
    for (std::size_t e = 0; e < policy.tours[i].size(); ++e) {
      json ej = tour_to_json(policy.tours[i][e]);
      ej["value"] = policy.value({(1u << cluster.size()) - 1u, static_cast<int>(i), static_cast<int>(e), 0});
      j["entries"].push_back(ej);
    }
  return j;
}

}  // namespace hase
