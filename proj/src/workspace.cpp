#include "hase/workspace.hpp"

#include "hase/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hase {

void Workspace::validate() const {
  if (poses.empty()) throw ConfigurationError("workspace has no poses");
  if (num_actions < 1) throw ConfigurationError("workspace has no actions");
  const std::size_t cells = poses.size() * static_cast<std::size_t>(num_actions);
  if (transition.size() != cells || travel.size() != cells)
    throw ConfigurationError("workspace transition table is not total");
  for (std::size_t i = 0; i < cells; ++i) {
    if (transition[i] < 0 || transition[i] >= size()) throw ConfigurationError("workspace transition out of range");
    if (travel[i] < 0.0) throw ConfigurationError("workspace travel cost is negative");
  }
  if (has_stationary)
    for (int p = 0; p < size(); ++p)
      if (next(p, 0) != p || cost(p, 0) != 0.0) throw ConfigurationError("stationary action must not move");
  if (boundary.empty()) throw ConfigurationError("workspace boundary is empty");
}

Workspace make_workspace(std::vector<Pose> poses, const ActionModel& actions) {
  if (poses.empty()) throw ConfigurationError("workspace has no poses");
  const int n = static_cast<int>(poses.size());
  const int others = n - 1;
  const int goto_count = actions.neighbors <= 0 ? others : std::min(actions.neighbors, others);

  Workspace ws;
  ws.poses = std::move(poses);
  ws.has_stationary = actions.stationary;
  ws.num_actions = goto_count + (actions.stationary ? 1 : 0);
  if (ws.num_actions < 1) throw ConfigurationError("workspace has no actions");
  ws.transition.resize(static_cast<std::size_t>(n * ws.num_actions));
  ws.travel.resize(ws.transition.size());

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) dist[static_cast<std::size_t>(q)] = (ws.position(q) - ws.position(p)).norm();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (a == p || b == p) return a == p && b != p;
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
    int a = 0;
    if (actions.stationary) {
      ws.transition[static_cast<std::size_t>(p * ws.num_actions)] = p;
      ws.travel[static_cast<std::size_t>(p * ws.num_actions)] = 0.0;
      a = 1;
    }
    for (int k = 1; k <= goto_count; ++k, ++a) {
      const int q = order[static_cast<std::size_t>(k)];
      ws.transition[static_cast<std::size_t>(p * ws.num_actions + a)] = q;
      ws.travel[static_cast<std::size_t>(p * ws.num_actions + a)] = dist[static_cast<std::size_t>(q)];
    }
  }

  std::vector<Vector> pos;
  pos.reserve(ws.poses.size());
  for (const auto& pose : ws.poses) pos.push_back(pose.position);
  ws.boundary = hull_boundary(pos);
  ws.validate();
  return ws;
}

namespace {

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

double scale_of(const std::vector<Vector>& pts) {
  double s = 0.0;
  for (const auto& p : pts)
    for (const auto& q : pts) s = std::max(s, (p - q).cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}

// Two extreme points along the principal axis of a collinear set.
std::vector<int> collinear_ends(const std::vector<Vector>& pts) {
  std::size_t a = 0, b = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = (pts[i] - pts[j]).norm();
      if (d > best) {
        best = d;
        a = i;
        b = j;
      }
    }
  if (pts.size() == 1 || best <= 0.0) return {0};
  std::vector<int> out{static_cast<int>(a), static_cast<int>(b)};
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> boundary_2d(const std::vector<Eigen::Vector2d>& pts, double tol) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    if (pts[a].y() != pts[b].y()) return pts[a].y() < pts[b].y();
    return a < b;
  });
  std::vector<std::size_t> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx[i]]) <= tol) --k;
    hull[k++] = idx[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx[i]]) <= tol) --k;
    hull[k++] = idx[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);

  std::vector<int> out;
  if (hull.size() < 3) return out;  // caller handles degenerate sets
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t e = 0; e < hull.size(); ++e) {
      const auto& a = pts[hull[e]];
      const auto& b = pts[hull[(e + 1) % hull.size()]];
      const Eigen::Vector2d ab = b - a;
      const double t = std::clamp((pts[p] - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      if ((a + t * ab - pts[p]).norm() <= tol) {
        out.push_back(static_cast<int>(p));
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<int> hull_boundary(const std::vector<Vector>& positions) {
  if (positions.empty()) return {};
  const Eigen::Index d = positions.front().size();
  const double scale = scale_of(positions);
  const double tol = 1e-9 * scale;
  if (positions.size() <= 2 || scale <= 1e-300) return collinear_ends(positions);

  // Affine dimension of the point set.
  Matrix centered(d, static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    centered.col(static_cast<Eigen::Index>(i)) = positions[i] - positions.front();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * std::max(sv(0), 1e-300)) ++rank;

  if (rank <= 1) return collinear_ends(positions);
  if (rank == 2) {
    const Matrix basis = svd.matrixU().leftCols(2);
    std::vector<Eigen::Vector2d> flat;
    for (const auto& p : positions) flat.emplace_back(basis.transpose() * (p - positions.front()));
    auto out = boundary_2d(flat, tol * scale);
    return out.empty() ? collinear_ends(positions) : out;
  }
  if (d != 3) throw ConfigurationError("hull_boundary: only planar or 3-D workspaces are supported");

  const std::size_t n = positions.size();
  std::vector<char> on(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const Vector3 a = positions[i], b = positions[j], c = positions[k];
        Vector3 normal = (b - a).cross(c - a);
        const double len = normal.norm();
        if (len <= tol * scale) continue;
        normal /= len;
        bool pos = false, neg = false;
        for (std::size_t q = 0; q < n && !(pos && neg); ++q) {
          const double s = normal.dot(Vector3(positions[q]) - a);
          if (s > tol) pos = true;
          if (s < -tol) neg = true;
        }
        if (pos && neg) continue;
        for (std::size_t q = 0; q < n; ++q)
          if (std::abs(normal.dot(Vector3(positions[q]) - a)) <= tol) on[q] = 1;
      }
  std::vector<int> out;
  for (std::size_t q = 0; q < n; ++q)
    if (on[q]) out.push_back(static_cast<int>(q));
  return out;
}

std::vector<Pose> polar_poses(const Vector& target, double r_min, double r_max, int n_radii, double step_deg,
                              double sector_start_deg, double sector_end_deg) {
  if (target.size() < 2) throw ParameterError("polar workspace needs a target of dimension >= 2");
  if (n_radii < 1 || !(r_min > 0.0) || r_max < r_min) throw ParameterError("polar workspace: invalid radii");
  if (!(step_deg > 0.0)) throw ParameterError("polar workspace: angular step must be positive");
  const double span = sector_end_deg - sector_start_deg;
  if (!(span > 0.0)) throw ParameterError("polar workspace: empty sector");
  const bool full = span >= 360.0 - 1e-9;
  const int n_angles = full ? static_cast<int>(std::ceil(360.0 / step_deg - 1e-9))
                            : static_cast<int>(std::floor(span / step_deg + 1e-9)) + 1;
  std::vector<Pose> out;
  for (int r = 0; r < n_radii; ++r) {
    const double radius = n_radii == 1 ? r_min : r_min + (r_max - r_min) * r / (n_radii - 1);
    for (int a = 0; a < n_angles; ++a) {
      const double theta = (sector_start_deg + a * step_deg) * std::numbers::pi / 180.0;
      Vector p = target;
      p(0) += radius * std::cos(theta);
      p(1) += radius * std::sin(theta);
      out.push_back(Pose::looking_at(p, target));
    }
  }
  return out;
}

std::vector<Pose> shell_poses(const Vector& target, int dim, double r_min, double r_max, int n_shells,
                              int total_views, bool upper_half, Rng& rng) {
  if (dim != 2 && dim != 3) throw ParameterError("shell workspace: dim must be 2 or 3");
  if (target.size() != dim) throw ParameterError("shell workspace: target dimension must equal dim");
  if (n_shells < 1 || total_views < n_shells || !(r_min > 0.0) || r_max < r_min)
    throw ParameterError("shell workspace: invalid shell parameters");

  std::vector<double> radii, weight;
  for (int s = 0; s < n_shells; ++s) {
    const double r = n_shells == 1 ? r_min : r_min + (r_max - r_min) * s / (n_shells - 1);
    radii.push_back(r);
    weight.push_back(dim == 3 ? r * r : r);
  }
  // Largest-remainder split, at least one view per shell.
  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  const int spare = total_views - n_shells;
  std::vector<int> counts(static_cast<std::size_t>(n_shells), 1);
  std::vector<std::pair<double, int>> rem;
  int used = 0;
  for (int s = 0; s < n_shells; ++s) {
    const double exact = spare * weight[static_cast<std::size_t>(s)] / wsum;
    const int base = static_cast<int>(std::floor(exact));
    counts[static_cast<std::size_t>(s)] += base;
    used += base;
    rem.emplace_back(-(exact - base), s);
  }
  std::sort(rem.begin(), rem.end());
  for (int i = 0; i < spare - used; ++i) ++counts[static_cast<std::size_t>(rem[static_cast<std::size_t>(i)].second)];

  std::vector<Pose> out;
  std::uniform_real_distribution<double> angle(0.0, upper_half ? std::numbers::pi : 2.0 * std::numbers::pi);
  for (int s = 0; s < n_shells; ++s) {
    for (int v = 0; v < counts[static_cast<std::size_t>(s)]; ++v) {
      Vector dir(dim);
      if (dim == 2) {
        const double t = angle(rng);
        dir << std::cos(t), std::sin(t);
      } else {
        do dir = standard_normal(3, rng);
        while (dir.norm() < 1e-9);
        dir.normalize();
        if (upper_half && dir(2) < 0.0) dir(2) = -dir(2);
      }
      out.push_back(Pose::looking_at(target + radii[static_cast<std::size_t>(s)] * dir, target));
    }
  }
  return out;
}

std::vector<Pose> line_poses(const Vector& target, const std::vector<double>& offsets, double standoff) {
  if (target.size() < 2) throw ParameterError("line workspace needs a target of dimension >= 2");
  std::vector<Pose> out;
  for (double o : offsets) {
    Vector p = target;
    p(0) += o;
    p(1) += standoff;
    out.push_back(Pose::looking_at(p, target));
  }
  return out;
}

std::vector<Pose> offset_poses(const Vector& target, const std::vector<Vector>& offsets) {
  std::vector<Pose> out;
  for (const auto& o : offsets) {
    if (o.size() != target.size()) throw ParameterError("explicit workspace offset has wrong dimension");
    out.push_back(Pose::looking_at(target + o, target));
  }
  return out;
}

}  // namespace hase
