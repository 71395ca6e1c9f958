#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "surf/geometry.hpp"
#include "surf/vec2.hpp"

namespace surf {

enum class NodeType : std::int32_t {
  Fluid = 0,
  Wall = 1,
  Inlet1 = 2,
  Inlet2 = 3,
  Inlet3 = 4,
  Outlet = 5,
  ObjectWall = 6,
};
inline constexpr int kNodeTypeCount = 7;

std::string_view node_type_name(NodeType t);
NodeType node_type_of(BoundaryTag tag);

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::Wall;
  int object_index = 0;  // 1-based for ObjectWall edges, else 0
};

struct Mesh {
  std::vector<Vec2> coords;  // meters
  std::vector<std::array<int, 3>> triangles;
  std::vector<NodeType> node_type;
  std::vector<std::int32_t> node_object;  // 1-based object id on ObjectWall nodes, else 0
  std::vector<BoundaryEdge> boundary_edges;

  std::size_t num_nodes() const { return coords.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
};

struct MeshOptions {
  double min_angle_deg = 20.0;
  double max_edge_factor = 1.5;  // longest edge relative to the target length
  // Halve the target within one target length of walls and obstacles.
  bool wall_grading = false;
  std::size_t max_nodes = 1'000'000;
};

// Coarse training-mesh target edge length, calibrated on Full-variant
// outlines against the reference node counts.
inline constexpr double kDefaultCoarseEdge = 0.0205;  // m

Mesh triangulate(const DomainOutline& outline, double target_edge_len,
                 const MeshOptions& options = {});

// triangulate() with the target divided by `factor`.
Mesh refine_resolution(const DomainOutline& outline, double factor,
                       double base_target = kDefaultCoarseEdge, const MeshOptions& options = {});

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_angle_deg = 0.0;
  double min_edge = 0.0;
  double max_edge = 0.0;
  double mean_edge = 0.0;
  double area = 0.0;
  std::size_t nodes = 0;
  std::size_t triangles = 0;
  std::size_t edges = 0;
};

MeshQuality mesh_quality(const Mesh& mesh);

// Rigid rotation about the origin; topology and types untouched.
Mesh rotate_mesh(const Mesh& mesh, double theta_deg);

// Characteristic element size: mean edge length.
double mean_edge_length(const Mesh& mesh);

// Plain-text node/triangle listing.
void write_mesh_text(std::ostream& out, const Mesh& mesh);

}  // namespace surf
