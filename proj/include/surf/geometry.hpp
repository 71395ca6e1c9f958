#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "surf/param_space.hpp"
#include "surf/vec2.hpp"

namespace surf {

// All outline coordinates are millimeters; the mesher converts to meters.
inline constexpr double kMinObjectDistance = 30.0;  // mm
inline constexpr double kSideInletWidth = 20.0;     // mm
inline constexpr double kElbowStart = 800.0;        // mm of centerline arclength

enum class BoundaryTag { Inlet1, Inlet2, Inlet3, Outlet, Wall, ObjectWall };

std::string_view tag_name(BoundaryTag tag);

struct Segment {
  enum class Kind { Line, Arc };
  Kind kind = Kind::Line;
  Vec2 a;  // start point
  Vec2 b;  // end point
  // Arc only: a = center + radius*(cos start, sin start), sweep is signed.
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;  // radians
  double sweep = 0.0;        // radians
  BoundaryTag tag = BoundaryTag::Wall;

  static Segment line(Vec2 a, Vec2 b, BoundaryTag tag);
  static Segment arc(Vec2 center, double radius, double start_angle, double sweep,
                     BoundaryTag tag);

  double length() const;
  // Point at parameter s in [0, 1] along the segment.
  Vec2 at(double s) const;
};

struct Hole {
  std::vector<Vec2> polyline;  // closed, clockwise, first point not repeated
  int object_index = 0;
};

struct DomainOutline {
  std::vector<Segment> outer;  // closed, counterclockwise
  std::vector<Hole> holes;
  double orientation = 0.0;  // degrees
  // Unit inflow direction for Inlet1..Inlet3, in the outline's frame.
  std::array<Vec2, 3> inflow_direction{};
};

struct ShapeSpec {
  enum class Kind { Cylinder, Airfoil };
  Kind kind = Kind::Cylinder;
  double radius = 0.0;  // mm; half-chord for airfoils
  int family = 0;       // airfoil only, 0..9
  double angle = 0.0;   // degrees of attack, airfoil only
};

// Object placement. `object_extent` is the distance from the object's
// center line to its top (radius for cylinders, half the rotated bounding
// box height for airfoils). Throws FeasibilityError if it cannot fit.
double object_y_position(double y_factor, double domain_height, double object_extent);

// Object `i` (1 or 2) of a design point, absent when the variant has no
// such object.
std::optional<ShapeSpec> object_shape(const DesignPoint& dp, int i);

// Closed polyline of a four-digit-series airfoil; chord = 2*radius is the
// caller's choice of `chord`. Quarter-chord point at the origin, leading
// edge toward -x before rotation, counterclockwise.
std::vector<Vec2> airfoil_profile(int family, double chord, double angle_deg, int n_points);

struct AirfoilFamily {
  double camber;     // max camber, fraction of chord
  double position;   // location of max camber, fraction of chord
  double thickness;  // max thickness, fraction of chord
};
AirfoilFamily airfoil_family(int family);

// Closed counterclockwise polyline of a shape, centered (bounding box
// center for airfoils) at the origin.
std::vector<Vec2> shape_polyline(const ShapeSpec& shape, int n_points = 256);
double shape_extent(const ShapeSpec& shape);  // center-to-top distance

DomainOutline build_outline(const DesignPoint& dp);
DomainOutline rotate_outline(const DomainOutline& outline, double theta_deg);

// Outline as closed polygons: `loops[0]` is the outer loop; arcs are
// sampled with chords no longer than `max_chord`.
struct OutlinePolygons {
  std::vector<std::vector<Vec2>> loops;
};
OutlinePolygons outline_polygons(const DomainOutline& outline, double max_chord);

double signed_area(const std::vector<Vec2>& loop);
bool is_simple_polygon(const std::vector<Vec2>& loop);
bool point_in_polygon(Vec2 p, const std::vector<Vec2>& loop);
double polyline_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

// Plain-text geometry listing for debugging and plotting.
void write_geometry_file(std::ostream& out, const DomainOutline& outline);

}  // namespace surf
