#include "surf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <memory>
#include <set>
#include <utility>

#include "surf/errors.hpp"
#include "surf/triangulator.hpp"

namespace surf {

std::string_view node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Fluid: return "Fluid";
    case NodeType::Wall: return "Wall";
    case NodeType::Inlet1: return "Inlet1";
    case NodeType::Inlet2: return "Inlet2";
    case NodeType::Inlet3: return "Inlet3";
    case NodeType::Outlet: return "Outlet";
    case NodeType::ObjectWall: return "ObjectWall";
  }
  return "?";
}

NodeType node_type_of(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Inlet1: return NodeType::Inlet1;
    case BoundaryTag::Inlet2: return NodeType::Inlet2;
    case BoundaryTag::Inlet3: return NodeType::Inlet3;
    case BoundaryTag::Outlet: return NodeType::Outlet;
    case BoundaryTag::Wall: return NodeType::Wall;
    case BoundaryTag::ObjectWall: return NodeType::ObjectWall;
  }
  return NodeType::Wall;
}

namespace {

constexpr double kMm = 1e-3;

int encode(BoundaryTag tag, int object) { return static_cast<int>(tag) + 8 * object; }
BoundaryTag tag_of(int marker) { return static_cast<BoundaryTag>(marker % 8); }
int object_of(int marker) { return marker / 8; }

bool is_wall(BoundaryTag t) { return t == BoundaryTag::Wall || t == BoundaryTag::ObjectWall; }

// Buckets wall segments so "within one target length of a wall" is cheap.
class WallIndex {
 public:
  WallIndex(std::vector<std::pair<Vec2, Vec2>> segs, double reach) : segs_(std::move(segs)), reach_(reach) {
    if (segs_.empty()) return;
    lo_ = {1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    for (const auto& [a, b] : segs_) {
      lo_ = {std::min({lo_.x, a.x, b.x}), std::min({lo_.y, a.y, b.y})};
      hi = {std::max({hi.x, a.x, b.x}), std::max({hi.y, a.y, b.y})};
    }
    lo_ -= Vec2{reach_, reach_};
    hi += Vec2{reach_, reach_};
    cell_ = reach_;
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo_.x) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo_.y) / cell_)));
    cells_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      const auto& [a, b] = segs_[k];
      const int x0 = cx(std::min(a.x, b.x) - reach_), x1 = cx(std::max(a.x, b.x) + reach_);
      const int y0 = cy(std::min(a.y, b.y) - reach_), y1 = cy(std::max(a.y, b.y) + reach_);
      for (int j = y0; j <= y1; ++j) {
        for (int i = x0; i <= x1; ++i) cells_[idx(i, j)].push_back(static_cast<int>(k));
      }
    }
  }

  bool near(Vec2 p) const {
    if (segs_.empty()) return false;
    const int i = cx(p.x), j = cy(p.y);
    for (int k : cells_[idx(i, j)]) {
      if (point_segment_distance(p, segs_[static_cast<std::size_t>(k)].first,
                                 segs_[static_cast<std::size_t>(k)].second) < reach_) {
        return true;
      }
    }
    return false;
  }

 private:
  std::vector<std::pair<Vec2, Vec2>> segs_;
  double reach_;
  Vec2 lo_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;

  int cx(double x) const { return std::clamp(static_cast<int>((x - lo_.x) / cell_), 0, nx_ - 1); }
  int cy(double y) const { return std::clamp(static_cast<int>((y - lo_.y) / cell_), 0, ny_ - 1); }
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
};

// Hole polyline resampled to `spacing`, keeping sharp corners (trailing
// edges) as vertices.
std::vector<Vec2> resample_hole(const std::vector<Vec2>& poly, double spacing) {
  const std::size_t n = poly.size();
  std::vector<std::size_t> corners;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d0 = poly[i] - poly[(i + n - 1) % n];
    const Vec2 d1 = poly[(i + 1) % n] - poly[i];
    const double turn = std::abs(std::atan2(cross(d0, d1), dot(d0, d1)));
    if (turn > deg2rad(20.0)) corners.push_back(i);
  }
  if (corners.empty()) corners.push_back(0);

  std::vector<Vec2> out;
  for (std::size_t c = 0; c < corners.size(); ++c) {
    const std::size_t from = corners[c];
    const std::size_t to = corners[(c + 1) % corners.size()];
    std::vector<Vec2> chain{poly[from]};
    for (std::size_t i = (from + 1) % n;; i = (i + 1) % n) {
      chain.push_back(poly[i]);
      if (i == to) break;
    }
    std::vector<double> s(chain.size(), 0.0);
    for (std::size_t i = 1; i < chain.size(); ++i) s[i] = s[i - 1] + dist(chain[i - 1], chain[i]);
    const double len = s.back();
    const int pieces = std::max(corners.size() == 1 ? 16 : 2,
                                static_cast<int>(std::ceil(len / spacing - 1e-9)));
    std::size_t seg = 1;
    for (int k = 0; k < pieces; ++k) {
      const double target = len * k / pieces;
      while (seg + 1 < s.size() && s[seg] < target) ++seg;
      const double span = s[seg] - s[seg - 1];
      const double t = span > 0 ? (target - s[seg - 1]) / span : 0.0;
      out.push_back(chain[seg - 1] + std::clamp(t, 0.0, 1.0) * (chain[seg] - chain[seg - 1]));
    }
  }
  return out;
}

}  // namespace

Mesh triangulate(const DomainOutline& outline, double target_edge_len, const MeshOptions& options) {
  if (!(target_edge_len > 0.0) || !std::isfinite(target_edge_len)) {
    throw MeshResolutionError("target edge length must be positive");
  }
  const double h = target_edge_len;
  Pslg pslg;
  std::vector<std::pair<Vec2, Vec2>> walls;

  auto close_loop = [&](std::size_t first, const std::vector<int>& markers) {
    const std::size_t count = pslg.points.size() - first;
    for (std::size_t i = 0; i < count; ++i) {
      const int a = static_cast<int>(first + i);
      const int b = static_cast<int>(first + (i + 1) % count);
      pslg.segments.push_back({a, b, markers[i]});
      if (is_wall(tag_of(markers[i]))) {
        walls.emplace_back(pslg.points[static_cast<std::size_t>(a)],
                           pslg.points[static_cast<std::size_t>(b)]);
      }
    }
  };

  std::vector<int> markers;
  for (const auto& seg : outline.outer) {
    const double len = seg.length() * kMm;
    const double spacing = options.wall_grading && is_wall(seg.tag) ? h / 2 : h;
    const bool side_inlet = seg.tag == BoundaryTag::Inlet2 || seg.tag == BoundaryTag::Inlet3;
    const int pieces =
        std::max(side_inlet ? 4 : 1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
    for (int k = 0; k < pieces; ++k) {
      const Vec2 p = k == 0 ? seg.a : seg.at(static_cast<double>(k) / pieces);
      pslg.points.push_back(kMm * p);
      markers.push_back(encode(seg.tag, 0));
    }
  }
  if (pslg.points.size() < 3) throw MeshResolutionError("outline has fewer than three vertices");
  {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : pslg.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double diag2 = (xmax - xmin) * (xmax - xmin) + (ymax - ymin) * (ymax - ymin);
    if (!(std::abs(signed_area(pslg.points)) > 1e-9 * diag2)) {
      throw MeshResolutionError("outline encloses zero area");
    }
  }
  close_loop(0, markers);

  for (const auto& hole : outline.holes) {
    std::vector<Vec2> poly;
    poly.reserve(hole.polyline.size());
    for (const auto& p : hole.polyline) poly.push_back(kMm * p);
    double perimeter = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) perimeter += dist(poly[i], poly[(i + 1) % poly.size()]);
    const double spacing = std::min(options.wall_grading ? h / 2 : h, perimeter / 16);
    const auto pts = resample_hole(poly, spacing);
    const std::size_t first = pslg.points.size();
    pslg.points.insert(pslg.points.end(), pts.begin(), pts.end());
    close_loop(first, std::vector<int>(pts.size(), encode(BoundaryTag::ObjectWall, hole.object_index)));
  }

  RefineOptions ro;
  ro.min_angle_deg = options.min_angle_deg;
  ro.max_vertices = options.max_nodes;
  const double limit = options.max_edge_factor * h;
  if (options.wall_grading) {
    auto index = std::make_shared<WallIndex>(walls, h);
    ro.max_edge = [index, limit](Vec2 p) { return index->near(p) ? 0.5 * limit : limit; };
  } else {
    ro.max_edge = [limit](Vec2) { return limit; };
  }
  const Triangulation tri = triangulate_pslg(pslg, ro);
  if (tri.triangles.empty()) throw MeshResolutionError("triangulation produced no elements");

  Mesh mesh;
  mesh.coords = tri.points;
  mesh.triangles = tri.triangles;
  const std::size_t n = mesh.coords.size();
  mesh.node_type.assign(n, NodeType::Fluid);
  mesh.node_object.assign(n, 0);
  std::vector<int> first_marker(n, -1);
  std::vector<char> mixed(n, 0);
  for (const auto& s : tri.segments) {
    mesh.boundary_edges.push_back({s.a, s.b, tag_of(s.marker), object_of(s.marker)});
    for (int v : {s.a, s.b}) {
      auto& m = first_marker[static_cast<std::size_t>(v)];
      if (m == -1) m = s.marker;
      else if (m != s.marker) mixed[static_cast<std::size_t>(v)] = 1;
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (first_marker[v] == -1) continue;
    if (mixed[v]) {
      mesh.node_type[v] = NodeType::Wall;
      continue;
    }
    mesh.node_type[v] = node_type_of(tag_of(first_marker[v]));
    mesh.node_object[v] = object_of(first_marker[v]);
  }
  return mesh;
}

Mesh refine_resolution(const DomainOutline& outline, double factor, double base_target,
                       const MeshOptions& options) {
  if (!(factor > 0.0)) throw MeshResolutionError("resolution factor must be positive");
  return triangulate(outline, base_target / factor, options);
}

MeshQuality mesh_quality(const Mesh& mesh) {
  MeshQuality q;
  q.nodes = mesh.num_nodes();
  q.triangles = mesh.num_triangles();
  if (mesh.triangles.empty()) return q;
  q.min_angle_deg = 180.0;
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles) {
    const Vec2 p[3] = {mesh.coords[static_cast<std::size_t>(t[0])],
                       mesh.coords[static_cast<std::size_t>(t[1])],
                       mesh.coords[static_cast<std::size_t>(t[2])]};
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = p[(k + 1) % 3] - p[k], w = p[(k + 2) % 3] - p[k];
      const double ang = rad2deg(std::atan2(std::abs(cross(u, w)), dot(u, w)));
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      q.max_angle_deg = std::max(q.max_angle_deg, ang);
      const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
    q.area += 0.5 * orient(p[0], p[1], p[2]);
  }
  q.edges = edges.size();
  q.min_edge = 1e300;
  double sum = 0.0;
  for (const auto& [a, b] : edges) {
    const double l = dist(mesh.coords[static_cast<std::size_t>(a)], mesh.coords[static_cast<std::size_t>(b)]);
    q.min_edge = std::min(q.min_edge, l);
    q.max_edge = std::max(q.max_edge, l);
    sum += l;
  }
  q.mean_edge = sum / static_cast<double>(edges.size());
  return q;
}

Mesh rotate_mesh(const Mesh& mesh, double theta_deg) {
  Mesh out = mesh;
  const double t = deg2rad(theta_deg);
  for (auto& p : out.coords) p = rotate(p, t);
  return out;
}

double mean_edge_length(const Mesh& mesh) { return mesh_quality(mesh).mean_edge; }

void write_mesh_text(std::ostream& out, const Mesh& mesh) {
  out << "# surf mesh, meters\n" << std::setprecision(17);
  out << "nodes " << mesh.num_nodes() << "\n";
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    out << mesh.coords[i].x << " " << mesh.coords[i].y << " " << node_type_name(mesh.node_type[i])
        << " " << mesh.node_object[i] << "\n";
  }
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "boundary_edges " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) {
    out << e.a << " " << e.b << " " << tag_name(e.tag) << " " << e.object_index << "\n";
  }
}

}  // namespace surf
