#pragma once

// JSON documents for grids, local policies and cluster policies. Hashes are
// FNV-1a over a canonical dump and guard against pairing a policy with the
// wrong state space.

#include "hase/cluster_dp.hpp"
#include "hase/covgrid.hpp"
#include "hase/local_dp.hpp"
#include "hase/workspace.hpp"

#include <json.hpp>

#include <string>

namespace hase {

std::string hex64(std::uint64_t h);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const CovGrid& grid);
CovGrid grid_from_json(const nlohmann::json& j);
std::string grid_hash(const CovGrid& grid);

nlohmann::json workspace_to_json(const Workspace& ws);
std::string workspace_hash(const Workspace& ws);

nlohmann::json policy_to_json(const LocalPolicy& policy, const Workspace& ws, const CovGrid& grid);
/// Throws ConfigurationError when the stored hashes do not match `ws` and `grid`.
LocalPolicy policy_from_json(const nlohmann::json& j, const Workspace& ws, const CovGrid& grid);

nlohmann::json tour_to_json(const Tour& t);
nlohmann::json cluster_policy_to_json(const ClusterPolicy& policy, const Cluster& cluster, int cluster_id);

}  // namespace hase
