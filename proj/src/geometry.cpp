#include "surf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "surf/errors.hpp"

namespace surf {

std::string_view tag_name(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Inlet1: return "Inlet1";
    case BoundaryTag::Inlet2: return "Inlet2";
    case BoundaryTag::Inlet3: return "Inlet3";
    case BoundaryTag::Outlet: return "Outlet";
    case BoundaryTag::Wall: return "Wall";
    case BoundaryTag::ObjectWall: return "ObjectWall";
  }
  return "?";
}

Segment Segment::line(Vec2 a, Vec2 b, BoundaryTag tag) {
  Segment s;
  s.kind = Kind::Line;
  s.a = a;
  s.b = b;
  s.tag = tag;
  return s;
}

Segment Segment::arc(Vec2 center, double radius, double start_angle, double sweep,
                     BoundaryTag tag) {
  Segment s;
  s.kind = Kind::Arc;
  s.center = center;
  s.radius = radius;
  s.start_angle = start_angle;
  s.sweep = sweep;
  s.tag = tag;
  s.a = s.at(0.0);
  s.b = s.at(1.0);
  return s;
}

double Segment::length() const {
  return kind == Kind::Line ? dist(a, b) : std::abs(sweep) * radius;
}

Vec2 Segment::at(double s) const {
  if (kind == Kind::Line) return a + s * (b - a);
  const double t = start_angle + s * sweep;
  return center + radius * Vec2{std::cos(t), std::sin(t)};
}

AirfoilFamily airfoil_family(int family) {
  // Four-digit-series profiles ordered by increasing camber, then thickness.
  static constexpr AirfoilFamily kFamilies[10] = {
      {0.00, 0.0, 0.12}, {0.00, 0.0, 0.15}, {0.01, 0.4, 0.12}, {0.02, 0.4, 0.12},
      {0.02, 0.4, 0.15}, {0.04, 0.4, 0.12}, {0.04, 0.4, 0.15}, {0.04, 0.4, 0.18},
      {0.06, 0.4, 0.12}, {0.06, 0.4, 0.15},
  };
  if (family < 0 || family > 9) {
    throw FeasibilityError("airfoil family " + std::to_string(family) + " outside 0..9");
  }
  return kFamilies[family];
}

std::vector<Vec2> airfoil_profile(int family, double chord, double angle_deg, int n_points) {
  if (n_points < 16) throw FeasibilityError("airfoil profile needs at least 16 points");
  const auto f = airfoil_family(family);
  const int half = (n_points + 1) / 2;

  auto surface = [&](double x, bool upper) {
    const double t = f.thickness;
    const double yt = 5.0 * t *
                      (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x +
                       0.2843 * x * x * x - 0.1036 * x * x * x * x);
    double yc = 0.0;
    double slope = 0.0;
    if (f.camber > 0.0) {
      const double m = f.camber;
      const double p = f.position;
      if (x < p) {
        yc = m / (p * p) * (2 * p * x - x * x);
        slope = 2 * m / (p * p) * (p - x);
      } else {
        yc = m / ((1 - p) * (1 - p)) * ((1 - 2 * p) + 2 * p * x - x * x);
        slope = 2 * m / ((1 - p) * (1 - p)) * (p - x);
      }
    }
    const double th = std::atan(slope);
    const double sign = upper ? 1.0 : -1.0;
    return Vec2{x - sign * yt * std::sin(th), yc + sign * yt * std::cos(th)};
  };

  std::vector<Vec2> unit;
  unit.reserve(static_cast<std::size_t>(2 * half));
  for (int k = half; k >= 0; --k) {
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * k / half));
    unit.push_back(surface(x, true));
  }
  for (int k = 1; k < half; ++k) {
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * k / half));
    unit.push_back(surface(x, false));
  }
  // The closed-trailing-edge thickness law ends at exactly zero, so the
  // first point is the shared trailing edge.
  unit.front().y = (unit.front().y + surface(1.0, false).y) * 0.5;

  double xmin = 1e300, xmax = -1e300;
  for (const auto& p : unit) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  const double scale = chord / (xmax - xmin);
  const double rot = -deg2rad(angle_deg);  // positive angle of attack lifts the nose
  std::vector<Vec2> out;
  out.reserve(unit.size());
  for (const auto& p : unit) {
    out.push_back(rotate(Vec2{(p.x - 0.25) * scale, p.y * scale}, rot));
  }
  return out;
}

namespace {

struct Box {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  void add(Vec2 p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
};

Box bounds(const std::vector<Vec2>& pts) {
  Box b;
  for (const auto& p : pts) b.add(p);
  return b;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  // Orientations within rounding of zero count as collinear, otherwise
  // rotated collinear runs produce spurious crossings.
  const double scale = std::max(dist(p1, p2), dist(q1, q2)) + std::max({norm(p1), norm(p2), norm(q1), norm(q2)});
  const double tol = 1e-12 * scale * scale;
  auto sgn = [tol](double d) { return d > tol ? 1 : (d < -tol ? -1 : 0); };
  const int d1 = sgn(orient(q1, q2, p1));
  const int d2 = sgn(orient(q1, q2, p2));
  const int d3 = sgn(orient(p1, p2, q1));
  const int d4 = sgn(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  auto on = [](Vec2 a, Vec2 b, Vec2 c, int d) {
    return d == 0 && std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
  };
  return on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4);
}

double segment_distance(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

}  // namespace

std::vector<Vec2> shape_polyline(const ShapeSpec& shape, int n_points) {
  std::vector<Vec2> out;
  if (shape.kind == ShapeSpec::Kind::Cylinder) {
    out.reserve(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n_points;
      out.push_back(shape.radius * Vec2{std::cos(t), std::sin(t)});
    }
    return out;
  }
  out = airfoil_profile(shape.family, 2.0 * shape.radius, shape.angle, n_points);
  const Box b = bounds(out);
  const Vec2 c{0.5 * (b.xmin + b.xmax), 0.5 * (b.ymin + b.ymax)};
  for (auto& p : out) p -= c;
  return out;
}

double shape_extent(const ShapeSpec& shape) {
  if (shape.kind == ShapeSpec::Kind::Cylinder) return shape.radius;
  const Box b = bounds(shape_polyline(shape));
  return 0.5 * (b.ymax - b.ymin);
}

double object_y_position(double y_factor, double domain_height, double object_extent) {
  const double free = domain_height - 2.0 * object_extent - 2.0 * kMinObjectDistance;
  if (!(object_extent > 0.0) || !(domain_height > 0.0) || free <= 0.0) {
    throw FeasibilityError("object of extent " + std::to_string(object_extent) +
                           " mm does not fit a " + std::to_string(domain_height) +
                           " mm channel with 30 mm clearance");
  }
  return kMinObjectDistance + object_extent + y_factor * free;
}

std::optional<ShapeSpec> object_shape(const DesignPoint& dp, int i) {
  const std::string prefix = "Object" + std::to_string(i);
  if (!dp.has(prefix + "Type")) return std::nullopt;
  const auto& type = dp.label(prefix + "Type");
  ShapeSpec s;
  s.radius = dp.real(prefix + "Radius");
  if (type == "cylinder") {
    s.kind = ShapeSpec::Kind::Cylinder;
  } else if (type.rfind("airfoil", 0) == 0 && type.size() > 7) {
    s.kind = ShapeSpec::Kind::Airfoil;
    s.family = std::stoi(type.substr(7));
    s.angle = dp.real_or(prefix + "Angle", 0.0);
    airfoil_family(s.family);
  } else {
    throw FeasibilityError("unknown object type '" + type + "'");
  }
  if (!(s.radius > 0.0)) throw FeasibilityError(prefix + " radius must be positive");
  return s;
}

DomainOutline build_outline(const DesignPoint& dp) {
  if (auto v = validate_design_point(dp); !v.empty()) {
    std::string msg = "infeasible design point " + std::to_string(dp.index) + ":";
    for (const auto& s : v) msg += " " + s + ";";
    throw FeasibilityError(msg);
  }
  const double length = dp.real_or("DomainLength", 1600.0);
  const double height = dp.real_or("DomainHeight", 400.0);
  const double elbow = deg2rad(dp.real_or("DomainElbowAngle", 0.0));
  const double inner = dp.real_or("DomainElbowRadius", 0.0);
  const double x2 = dp.real("Inlet2xPos");
  const double x3 = dp.real("Inlet3xPos");
  const double half_w = kSideInletWidth / 2;

  DomainOutline out;
  auto& loop = out.outer;
  using T = BoundaryTag;
  loop.push_back(Segment::line({0, 0}, {x3 - half_w, 0}, T::Wall));
  loop.push_back(Segment::line({x3 - half_w, 0}, {x3 + half_w, 0}, T::Inlet3));
  if (elbow > 0.0) {
    if (!(inner > 0.0)) throw FeasibilityError("elbow angle needs a positive elbow radius");
    const double centerline = inner + height / 2;
    const double downstream = length - kElbowStart - centerline * elbow;
    if (downstream <= 0.0) throw FeasibilityError("elbow consumes the whole downstream channel");
    const Vec2 c{kElbowStart, height + inner};
    const double outer_r = inner + height;
    const Vec2 d{std::cos(elbow), std::sin(elbow)};
    const Vec2 n{-std::sin(elbow), std::cos(elbow)};
    loop.push_back(Segment::line({x3 + half_w, 0}, {kElbowStart, 0}, T::Wall));
    auto arc_out = Segment::arc(c, outer_r, -std::numbers::pi / 2, elbow, T::Wall);
    arc_out.a = {kElbowStart, 0};
    loop.push_back(arc_out);
    const Vec2 p1 = arc_out.b;
    const Vec2 p2 = p1 + downstream * d;
    const Vec2 p3 = p2 + height * n;
    loop.push_back(Segment::line(p1, p2, T::Wall));
    loop.push_back(Segment::line(p2, p3, T::Outlet));
    auto arc_in = Segment::arc(c, inner, -std::numbers::pi / 2 + elbow, -elbow, T::Wall);
    const Vec2 p4 = arc_in.a;
    arc_in.b = {kElbowStart, height};
    loop.push_back(Segment::line(p3, p4, T::Wall));
    loop.push_back(arc_in);
    loop.push_back(Segment::line({kElbowStart, height}, {x2 + half_w, height}, T::Wall));
  } else {
    loop.push_back(Segment::line({x3 + half_w, 0}, {length, 0}, T::Wall));
    loop.push_back(Segment::line({length, 0}, {length, height}, T::Outlet));
    loop.push_back(Segment::line({length, height}, {x2 + half_w, height}, T::Wall));
  }
  loop.push_back(Segment::line({x2 + half_w, height}, {x2 - half_w, height}, T::Inlet2));
  loop.push_back(Segment::line({x2 - half_w, height}, {0, height}, T::Wall));
  loop.push_back(Segment::line({0, height}, {0, 0}, T::Inlet1));

  const double a2 = deg2rad(dp.real("Inlet2Angle"));
  const double a3 = deg2rad(dp.real("Inlet3Angle"));
  out.inflow_direction = {Vec2{1.0, 0.0}, Vec2{std::cos(a2), -std::sin(a2)},
                          Vec2{std::cos(a3), std::sin(a3)}};

  for (int i = 1; i <= 2; ++i) {
    const auto shape = object_shape(dp, i);
    if (!shape) continue;
    const std::string prefix = "Object" + std::to_string(i);
    const double x = dp.real(prefix + "xPos");
    const double y = object_y_position(dp.real(prefix + "yFactor"), height, shape_extent(*shape));
    Hole h;
    h.object_index = i;
    h.polyline = shape_polyline(*shape);
    for (auto& p : h.polyline) p += Vec2{x, y};
    std::reverse(h.polyline.begin(), h.polyline.end());
    out.holes.push_back(std::move(h));
  }

  const double theta = dp.real_or("DomainOrientation", 0.0);
  return theta != 0.0 ? rotate_outline(out, theta) : out;
}

DomainOutline rotate_outline(const DomainOutline& outline, double theta_deg) {
  const double t = deg2rad(theta_deg);
  DomainOutline out = outline;
  for (auto& s : out.outer) {
    s.a = rotate(s.a, t);
    s.b = rotate(s.b, t);
    if (s.kind == Segment::Kind::Arc) {
      s.center = rotate(s.center, t);
      s.start_angle += t;
    }
  }
  for (auto& h : out.holes) {
    for (auto& p : h.polyline) p = rotate(p, t);
  }
  for (auto& d : out.inflow_direction) d = rotate(d, t);
  out.orientation = outline.orientation + theta_deg;
  return out;
}

OutlinePolygons outline_polygons(const DomainOutline& outline, double max_chord) {
  OutlinePolygons out;
  std::vector<Vec2> outer;
  for (const auto& s : outline.outer) {
    outer.push_back(s.a);
    if (s.kind == Segment::Kind::Arc) {
      const int pieces = std::max(1, static_cast<int>(std::ceil(s.length() / max_chord)));
      for (int k = 1; k < pieces; ++k) outer.push_back(s.at(static_cast<double>(k) / pieces));
    }
  }
  out.loops.push_back(std::move(outer));
  for (const auto& h : outline.holes) out.loops.push_back(h.polyline);
  return out;
}

double signed_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (std::size_t i = 0, n = loop.size(); i < n; ++i) a += cross(loop[i], loop[(i + 1) % n]);
  return 0.5 * a;
}

bool is_simple_polygon(const std::vector<Vec2>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = loop[i], b = loop[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a, b, loop[j], loop[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& loop) {
  bool inside = false;
  for (std::size_t i = 0, n = loop.size(), j = n - 1; i < n; j = i++) {
    const Vec2 a = loop[i], b = loop[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

double polyline_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double best = 1e300;
  for (std::size_t i = 0, n = a.size(); i < n; ++i) {
    for (std::size_t j = 0, m = b.size(); j < m; ++j) {
      best = std::min(best, segment_distance(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m]));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

void write_geometry_file(std::ostream& out, const DomainOutline& outline) {
  out << "# surf geometry v1, millimeters\n";
  out << std::setprecision(17);
  out << "orientation " << outline.orientation << "\n";
  for (int i = 0; i < 3; ++i) {
    out << "inflow Inlet" << i + 1 << " " << outline.inflow_direction[static_cast<std::size_t>(i)].x
        << " " << outline.inflow_direction[static_cast<std::size_t>(i)].y << "\n";
  }
  out << "outer " << outline.outer.size() << "\n";
  for (const auto& s : outline.outer) {
    if (s.kind == Segment::Kind::Line) {
      out << "line " << tag_name(s.tag) << " " << s.a.x << " " << s.a.y << " " << s.b.x << " "
          << s.b.y << "\n";
    } else {
      out << "arc " << tag_name(s.tag) << " " << s.center.x << " " << s.center.y << " "
          << s.radius << " " << s.start_angle << " " << s.sweep << "\n";
    }
  }
  for (const auto& h : outline.holes) {
    out << "hole " << h.object_index << " " << h.polyline.size() << "\n";
    for (const auto& p : h.polyline) out << p.x << " " << p.y << "\n";
  }
}

}  // namespace surf
