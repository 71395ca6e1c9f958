#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/geometry.hpp"
#include "surf/mesh.hpp"
#include "surf/triangulator.hpp"

using namespace surf;

namespace {

DomainOutline rectangle(double w, double h, BoundaryTag left = BoundaryTag::Wall) {
  DomainOutline o;
  o.outer = {Segment::line({0, 0}, {w, 0}, BoundaryTag::Wall), Segment::line({w, 0}, {w, h}, BoundaryTag::Outlet),
             Segment::line({w, h}, {0, h}, BoundaryTag::Wall), Segment::line({0, h}, {0, 0}, left)};
  return o;
}

// Smallest interior angle, recomputed from coordinates with the law of cosines.
double min_angle_deg(const Mesh& m) {
  double best = 180.0;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = m.coords[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
      const Vec2 b = m.coords[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])];
      const Vec2 c = m.coords[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 2) % 3)])];
      const double ab = dist(a, b), ac = dist(a, c), bc = dist(b, c);
      const double cosv = std::clamp((ab * ab + ac * ac - bc * bc) / (2 * ab * ac), -1.0, 1.0);
      best = std::min(best, std::acos(cosv) * 180.0 / std::numbers::pi);
    }
  }
  return best;
}

std::map<std::pair<int, int>, int> edge_use(const Mesh& m) {
  std::map<std::pair<int, int>, int> use;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++use[{a, b}];
    }
  }
  return use;
}

void check_mesh_invariants(const Mesh& m) {
  REQUIRE(m.num_nodes() > 0);
  for (const auto& t : m.triangles) {
    CHECK(orient(m.coords[static_cast<std::size_t>(t[0])], m.coords[static_cast<std::size_t>(t[1])],
                 m.coords[static_cast<std::size_t>(t[2])]) > 0);
  }
  CHECK(min_angle_deg(m) >= 20.0 - 1e-9);
  const auto use = edge_use(m);
  std::set<std::pair<int, int>> boundary;
  for (const auto& [e, n] : use) {
    CHECK(n <= 2);
    if (n == 1) boundary.insert(e);
  }
  std::set<std::pair<int, int>> tagged;
  for (const auto& e : m.boundary_edges) tagged.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
  CHECK(tagged == boundary);
  std::set<int> on_boundary;
  for (const auto& [a, b] : boundary) {
    on_boundary.insert(a);
    on_boundary.insert(b);
  }
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const bool b = on_boundary.count(static_cast<int>(i)) > 0;
    CHECK((m.node_type[i] != NodeType::Fluid) == b);
  }
}

}  // namespace

TEST_CASE("unit square at 0.5 m") {
  const Mesh m = triangulate(rectangle(1000, 1000), 0.5);
  check_mesh_invariants(m);
  CHECK(m.num_nodes() >= 4);
  CHECK(m.num_nodes() <= 40);
  // Euler characteristic of a disk.
  const auto edges = static_cast<long>(edge_use(m).size());
  CHECK(static_cast<long>(m.num_nodes()) - edges + static_cast<long>(m.num_triangles()) == 1);
  for (Vec2 corner : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) {
    CHECK(std::any_of(m.coords.begin(), m.coords.end(), [&](Vec2 p) { return dist(p, corner) < 1e-12; }));
  }
  CHECK(mesh_quality(m).area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("refinement factor") {
  const auto o = rectangle(1000, 1000);
  const Mesh a = refine_resolution(o, 1.0, 0.5), b = triangulate(o, 0.5);
  CHECK(a.coords == b.coords);
  CHECK(a.triangles == b.triangles);
  const Mesh fine = refine_resolution(o, 2.0, 0.1);
  check_mesh_invariants(fine);
  CHECK(mesh_quality(fine).max_edge <= 1.5 * 0.05 + 1e-12);
}

TEST_CASE("quality report on single triangles") {
  Mesh eq;
  eq.coords = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  eq.triangles = {{0, 1, 2}};
  eq.node_type.assign(3, NodeType::Wall);
  eq.node_object.assign(3, 0);
  CHECK(mesh_quality(eq).min_angle_deg == doctest::Approx(60.0));
  Mesh right = eq;
  right.coords = {{0, 0}, {1, 0}, {0, 1}};
  CHECK(mesh_quality(right).min_angle_deg == doctest::Approx(45.0));
  CHECK(mesh_quality(right).max_angle_deg == doctest::Approx(90.0));
  CHECK(mesh_quality(right).area == doctest::Approx(0.5));
}

TEST_CASE("degenerate input") {
  DomainOutline flat;
  flat.outer = {Segment::line({0, 0}, {1000, 0}, BoundaryTag::Wall),
                Segment::line({1000, 0}, {0, 0}, BoundaryTag::Wall)};
  CHECK_THROWS_AS(triangulate(flat, 0.1), MeshResolutionError);
  CHECK_THROWS_AS(triangulate(rectangle(1000, 1000), 0.0), MeshResolutionError);
  MeshOptions tight;
  tight.max_nodes = 50;
  CHECK_THROWS_AS(triangulate(rectangle(1000, 1000), 0.01, tight), MeshResolutionError);
}

TEST_CASE("design point meshes: typing, holes, determinism") {
  const auto pts = sample_design_points(DatasetVariant::Full, 3, 21);
  for (const auto& dp : pts) {
    const auto o = build_outline(dp);
    const Mesh m = triangulate(o, kDefaultCoarseEdge);
    check_mesh_invariants(m);
    // Every outline segment endpoint is a mesh node (outline in mm, mesh in m).
    for (const auto& s : o.outer) {
      const Vec2 p = 1e-3 * s.a;
      CHECK(std::any_of(m.coords.begin(), m.coords.end(), [&](Vec2 q) { return dist(p, q) < 1e-9; }));
    }
    for (const auto& e : m.boundary_edges) {
      if (e.tag == BoundaryTag::ObjectWall) {
        CHECK(e.object_index >= 1);
        CHECK(m.node_type[static_cast<std::size_t>(e.a)] == NodeType::ObjectWall);
      } else {
        CHECK(e.object_index == 0);
      }
    }
    // No triangle centroid inside an obstacle.
    for (const auto& t : m.triangles) {
      const Vec2 c = (1e3 / 3.0) * (m.coords[static_cast<std::size_t>(t[0])] + m.coords[static_cast<std::size_t>(t[1])] +
                                    m.coords[static_cast<std::size_t>(t[2])]);
      for (const auto& h : o.holes) CHECK_FALSE(point_in_polygon(c, h.polyline));
    }
    const Mesh again = triangulate(o, kDefaultCoarseEdge);
    CHECK(again.coords == m.coords);
    CHECK(again.triangles == m.triangles);
    CHECK(again.node_type == m.node_type);
  }
}

TEST_CASE("graded solver mesh is finer near walls") {
  const auto o = rectangle(1000, 400, BoundaryTag::Inlet1);
  MeshOptions g;
  g.wall_grading = true;
  const Mesh plain = triangulate(o, 0.05), graded = triangulate(o, 0.05, g);
  check_mesh_invariants(graded);
  CHECK(graded.num_nodes() > plain.num_nodes());
}

TEST_CASE("rotation keeps topology") {
  const Mesh m = triangulate(rectangle(1000, 500), 0.1);
  const Mesh r = rotate_mesh(m, 37.0);
  CHECK(r.triangles == m.triangles);
  CHECK(r.node_type == m.node_type);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) CHECK(norm(r.coords[i]) == doctest::Approx(norm(m.coords[i])));
}

TEST_CASE("text listing") {
  const Mesh m = triangulate(rectangle(1000, 1000), 0.5);
  std::ostringstream out;
  write_mesh_text(out, m);
  CHECK(out.str().find(std::to_string(m.num_nodes())) != std::string::npos);
}

TEST_CASE("raw triangulator on a square with a square hole") {
  Pslg g;
  g.points = {{0, 0}, {4, 0}, {4, 4}, {0, 4}, {1, 1}, {3, 1}, {3, 3}, {1, 3}};
  for (int k = 0; k < 4; ++k) {
    g.segments.push_back({k, (k + 1) % 4, 1});
    g.segments.push_back({4 + k, 4 + (k + 1) % 4, 2});
  }
  RefineOptions opt;
  const auto t = triangulate_pslg(g, opt);
  double area = 0;
  for (const auto& tri : t.triangles) {
    const double a = 0.5 * orient(t.points[static_cast<std::size_t>(tri[0])], t.points[static_cast<std::size_t>(tri[1])],
                                  t.points[static_cast<std::size_t>(tri[2])]);
    CHECK(a > 0);
    area += a;
  }
  CHECK(area == doctest::Approx(12.0));
}
