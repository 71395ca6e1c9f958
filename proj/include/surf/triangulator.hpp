#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "surf/vec2.hpp"

namespace surf {

// Planar straight-line graph. The meshed region is whatever is enclosed an
// odd number of times by the segments, so holes need no seed points.
struct PslgSegment {
  int a = 0;
  int b = 0;
  int marker = 0;  // carried through to every subsegment
};

struct Pslg {
  std::vector<Vec2> points;
  std::vector<PslgSegment> segments;
};

struct RefineOptions {
  bool refine = true;
  double min_angle_deg = 20.0;
  // Longest admissible edge at a location; empty means unbounded.
  std::function<double(Vec2)> max_edge;
  std::size_t max_vertices = 2'000'000;
};

struct Triangulation {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<PslgSegment> segments;          // constrained subsegments
};

// Constrained Delaunay triangulation with Ruppert-style refinement. Throws
// MeshResolutionError when the vertex budget runs out.
Triangulation triangulate_pslg(const Pslg& pslg, const RefineOptions& options);

}  // namespace surf
