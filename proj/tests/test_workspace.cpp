#include "support.hpp"

#include "hase/error.hpp"
#include "hase/workspace.hpp"

#include <doctest.h>

#include <algorithm>

using namespace hase;

namespace {

Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("polar grids") {
  const Vector t = v2(1.0, 2.0);
  CHECK(polar_poses(t, 1.0, 3.0, 3, 45.0).size() == 24);
  CHECK(polar_poses(t, 1.0, 1.0, 1, 15.0, 0.0, 90.0).size() == 7);
  for (const auto& p : polar_poses(t, 2.0, 2.0, 1, 30.0)) {
    CHECK((p.position - t).norm() == doctest::Approx(2.0));
    CHECK(Pose::looking_at(p.position, t).yaw == doctest::Approx(p.yaw));
  }
}

TEST_CASE("shell views are split across shells and keep their radius") {
  Rng rng(4);
  const Vector t = Vector::Zero(3);
  const auto poses = shell_poses(t, 3, 20.0, 40.0, 6, 177, true, rng);
  CHECK(poses.size() == 177);
  for (const auto& p : poses) {
    const double r = (p.position - t).norm();
    CHECK(r >= 20.0 - 1e-9);
    CHECK(r <= 40.0 + 1e-9);
    CHECK(p.position(2) >= 0.0);
  }
}

TEST_CASE("hull boundary") {
  std::vector<Vector> square{v2(0, 0), v2(1, 0), v2(2, 0), v2(2, 2), v2(0, 2), v2(1, 1)};
  auto b = hull_boundary(square);
  std::sort(b.begin(), b.end());
  CHECK(b == std::vector<int>{0, 1, 2, 3, 4});

  std::vector<Vector> line{v2(0, 0), v2(1, 1), v2(3, 3), v2(2, 2)};
  b = hull_boundary(line);
  std::sort(b.begin(), b.end());
  CHECK(b == std::vector<int>{0, 2});
}

TEST_CASE("goto actions and travel costs") {
  const Vector t = Vector::Zero(2);
  ActionModel am;
  am.neighbors = 2;
  const Workspace ws = make_workspace(line_poses(t, {-2, -1, 0, 1, 2}, 1.0), am);
  CHECK(ws.num_actions == 3);
  for (int p = 0; p < ws.size(); ++p) {
    CHECK(ws.next(p, 0) == p);
    CHECK(ws.cost(p, 0) == 0.0);
    for (int a = 1; a < ws.num_actions; ++a)
      CHECK(ws.cost(p, a) == doctest::Approx((ws.position(p) - ws.position(ws.next(p, a))).norm()));
  }
  CHECK(ws.next(2, 1) == 1);  // equal distances: lower pose index first
  CHECK(ws.next(2, 2) == 3);
  auto b = ws.boundary;
  std::sort(b.begin(), b.end());
  CHECK(b == std::vector<int>{0, 4});

  am.neighbors = 0;
  am.stationary = false;
  const Workspace all = make_workspace(line_poses(t, {-2, -1, 0, 1, 2}, 1.0), am);
  CHECK(all.num_actions == 4);
}
