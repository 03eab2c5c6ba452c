#pragma once

#include "hase/linalg.hpp"
#include "hase/rng.hpp"
#include "hase/scenario.hpp"

#include <Eigen/QR>

#include <json.hpp>

#include <random>
#include <string>

namespace hase::test {

inline std::string scenario_path(const std::string& name) { return std::string(HASE_SCENARIO_DIR) + "/" + name; }

/// Random SPD matrix with eigenvalues log-uniform in [lo, hi] and a random basis.
inline Matrix random_spd(int n, Rng& rng, double lo, double hi) {
  const Matrix g = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return std::normal_distribution<double>()(rng); });
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Vector spec(n);
  for (int i = 0; i < n; ++i) spec(i) = std::exp(u(rng));
  return symmetrize(q * spec.asDiagonal() * q.transpose());
}

/// Five poses on a line, coarse grid: small enough for exhaustive checks.
inline nlohmann::json toy_line_doc() {
  return nlohmann::json::parse(R"({
    "version": 1, "seed": 3, "dim": 2,
    "targets": [{"mean": [0.0, 0.0]}],
    "prior_scale": 1.0,
    "workspace": {"type": "line", "offsets": [-2.0, -1.0, 0.0, 1.0, 2.0], "standoff": 1.0, "neighbors": 2},
    "sensor": {"type": "range_bearing", "radial_var0": 0.02, "radial_var2": 0.02,
               "tangential_var0": 0.01, "tangential_var2": 0.01},
    "grid": {"lambda_max": 1.0, "n_lambda": 3, "n_alpha": 2, "n_dirs_max": 4, "charge_iters": 300},
    "dp": {"gamma": 0.9, "rho": 0.05}
  })");
}

/// Toy cluster of `m` targets spaced along x, each with the toy line workspace.
inline nlohmann::json toy_cluster_doc(int m) {
  nlohmann::json doc = toy_line_doc();
  doc["targets"] = nlohmann::json::array();
  const double xs[] = {0.0, 7.0, 3.0, 10.0};
  const double ys[] = {0.0, 1.0, 5.0, -2.0};
  for (int i = 0; i < m; ++i) doc["targets"].push_back({{"mean", {xs[i], ys[i]}}});
  doc["cluster"] = {{"m_max", 8}};
  return doc;
}

}  // namespace hase::test
