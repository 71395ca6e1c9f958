#include "surf/interp.hpp"

#include <algorithm>
#include <cmath>

namespace surf {

namespace {

struct Bary {
  std::array<double, 3> w;
  double distance;  // 0 when inside
};

Bary barycentric(const Mesh& m, int t, Vec2 p) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  const Vec2 a = m.coords[static_cast<std::size_t>(tri[0])];
  const Vec2 b = m.coords[static_cast<std::size_t>(tri[1])];
  const Vec2 c = m.coords[static_cast<std::size_t>(tri[2])];
  Bary r;
  // Exact hits on a vertex return that node's value bit for bit.
  const Vec2 v[3] = {a, b, c};
  for (std::size_t k = 0; k < 3; ++k) {
    if (p == v[k]) {
      r.w = {0.0, 0.0, 0.0};
      r.w[k] = 1.0;
      r.distance = 0.0;
      return r;
    }
  }
  const double det = orient(a, b, c);
  r.w = {orient(b, c, p) / det, orient(c, a, p) / det, 0.0};
  r.w[2] = 1.0 - r.w[0] - r.w[1];
  if (r.w[0] >= 0 && r.w[1] >= 0 && r.w[2] >= 0) {
    r.distance = 0.0;
  } else {
    r.distance = std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                           point_segment_distance(p, c, a)});
  }
  return r;
}

// Weights of the point of triangle t closest to p.
std::array<double, 3> clamp_to_triangle(const Mesh& m, int t, Vec2 p) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  const Vec2 v[3] = {m.coords[static_cast<std::size_t>(tri[0])], m.coords[static_cast<std::size_t>(tri[1])],
                     m.coords[static_cast<std::size_t>(tri[2])]};
  double best = 1e300;
  std::array<double, 3> w{};
  for (int k = 0; k < 3; ++k) {
    const Vec2 a = v[k], b = v[(k + 1) % 3];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double s = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    const double d = dist(p, a + s * ab);
    if (d < best) {
      best = d;
      w = {0.0, 0.0, 0.0};
      w[static_cast<std::size_t>(k)] = 1.0 - s;
      w[static_cast<std::size_t>((k + 1) % 3)] = s;
    }
  }
  return w;
}

}  // namespace

Locator::Locator(const Mesh& mesh) : mesh_(mesh) {
  if (mesh.coords.empty()) return;
  Vec2 hi{-1e300, -1e300};
  lo_ = {1e300, 1e300};
  for (const auto& p : mesh.coords) {
    lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const double w = std::max(hi.x - lo_.x, 1e-12), h = std::max(hi.y - lo_.y, 1e-12);
  // About two triangles per cell.
  const double count = std::max<double>(1.0, static_cast<double>(mesh.triangles.size()) / 2.0);
  cell_ = std::sqrt(w * h / count);
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  tri_cells_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  node_cells_.resize(tri_cells_.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int v : mesh.triangles[t]) {
      const Vec2 p = mesh.coords[static_cast<std::size_t>(v)];
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    for (int j = cy(y0 - kInsideTolerance); j <= cy(y1 + kInsideTolerance); ++j) {
      for (int i = cx(x0 - kInsideTolerance); i <= cx(x1 + kInsideTolerance); ++i) {
        tri_cells_[idx(i, j)].push_back(static_cast<int>(t));
      }
    }
  }
  for (std::size_t v = 0; v < mesh.coords.size(); ++v) {
    node_cells_[idx(cx(mesh.coords[v].x), cy(mesh.coords[v].y))].push_back(static_cast<int>(v));
  }
}

int Locator::cx(double x) const { return std::clamp(static_cast<int>(std::floor((x - lo_.x) / cell_)), 0, nx_ - 1); }
int Locator::cy(double y) const { return std::clamp(static_cast<int>(std::floor((y - lo_.y) / cell_)), 0, ny_ - 1); }
std::size_t Locator::idx(int i, int j) const {
  return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
}

PointLocation Locator::locate(Vec2 p) const {
  PointLocation loc;
  if (tri_cells_.empty()) return loc;
  const double x_hi = lo_.x + nx_ * cell_, y_hi = lo_.y + ny_ * cell_;
  if (p.x < lo_.x - kInsideTolerance || p.y < lo_.y - kInsideTolerance ||
      p.x > x_hi + kInsideTolerance || p.y > y_hi + kInsideTolerance) {
    return loc;
  }
  int best = -1;
  Bary best_b{};
  double best_min_w = -1e300;
  for (int t : tri_cells_[idx(cx(p.x), cy(p.y))]) {
    const Bary b = barycentric(mesh_, t, p);
    const double min_w = std::min({b.w[0], b.w[1], b.w[2]});
    const bool better = best == -1 || b.distance < best_b.distance ||
                        (b.distance == best_b.distance && min_w > best_min_w);
    if (better) {
      best = t;
      best_b = b;
      best_min_w = min_w;
    }
  }
  if (best == -1 || best_b.distance > kInsideTolerance) return loc;
  loc.triangle = best;
  if (best_min_w >= -1e-12) {
    loc.weights = best_b.w;
  } else {
    loc.weights = clamp_to_triangle(mesh_, best, p);
  }
  return loc;
}

int Locator::nearest_node(Vec2 p) const {
  if (node_cells_.empty()) return -1;
  const int ci = cx(p.x), cj = cy(p.y);
  int best = -1;
  double best_d = 1e300;
  const int max_ring = std::max(nx_, ny_);
  for (int r = 0; r <= max_ring; ++r) {
    for (int j = cj - r; j <= cj + r; ++j) {
      if (j < 0 || j >= ny_) continue;
      for (int i = ci - r; i <= ci + r; ++i) {
        if (i < 0 || i >= nx_) continue;
        if (std::max(std::abs(i - ci), std::abs(j - cj)) != r) continue;
        for (int v : node_cells_[idx(i, j)]) {
          const double d = dist(p, mesh_.coords[static_cast<std::size_t>(v)]);
          if (d < best_d || (d == best_d && v < best)) {
            best_d = d;
            best = v;
          }
        }
      }
    }
    // Anything in ring r+1 is at least r cells of distance away from p's cell.
    if (best != -1 && best_d <= r * cell_) break;
  }
  return best;
}

double interpolate_node(std::span<const double> values, const PointLocation& loc, const Locator& source,
                        Vec2 point) {
  if (loc.inside()) {
    const auto& tri = source.mesh().triangles[static_cast<std::size_t>(loc.triangle)];
    return loc.weights[0] * values[static_cast<std::size_t>(tri[0])] +
           loc.weights[1] * values[static_cast<std::size_t>(tri[1])] +
           loc.weights[2] * values[static_cast<std::size_t>(tri[2])];
  }
  const int n = source.nearest_node(point);
  return n >= 0 ? values[static_cast<std::size_t>(n)] : 0.0;
}

std::vector<double> Transfer::apply(std::span<const double> values) const {
  std::vector<double> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out[i] = e.weights[0] * values[static_cast<std::size_t>(e.nodes[0])] +
             e.weights[1] * values[static_cast<std::size_t>(e.nodes[1])] +
             e.weights[2] * values[static_cast<std::size_t>(e.nodes[2])];
  }
  return out;
}

FieldState Transfer::apply(const FieldState& s) const {
  FieldState out;
  out.u = apply(s.u);
  out.v = apply(s.v);
  out.p = apply(s.p);
  out.T = apply(s.T);
  return out;
}

Transfer build_transfer(const Mesh& source, const Mesh& target) {
  const Locator loc(source);
  Transfer tr;
  tr.entries.resize(target.num_nodes());
  for (std::size_t i = 0; i < target.num_nodes(); ++i) {
    const Vec2 p = target.coords[i];
    const PointLocation l = loc.locate(p);
    auto& e = tr.entries[i];
    if (l.inside()) {
      e.nodes = source.triangles[static_cast<std::size_t>(l.triangle)];
      e.weights = l.weights;
    } else {
      const int n = loc.nearest_node(p);
      e.nodes = {n, n, n};
      e.weights = {1.0, 0.0, 0.0};
      ++tr.fallback_count;
    }
  }
  return tr;
}

SimulationRecord downsample(const SimulationRecord& record, const Mesh& fine, const Mesh& coarse) {
  const Transfer tr = build_transfer(fine, coarse);
  SimulationRecord out;
  out.dt = record.dt;
  out.props = record.props;
  out.reports = record.reports;
  out.states.reserve(record.states.size());
  for (const auto& s : record.states) out.states.push_back(tr.apply(s));
  return out;
}

}  // namespace surf
