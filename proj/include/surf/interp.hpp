#pragma once

#include <array>
#include <span>
#include <vector>

#include "surf/mesh.hpp"
#include "surf/solver.hpp"

namespace surf {

inline constexpr double kInsideTolerance = 1e-9;  // m

struct PointLocation {
  int triangle = -1;  // -1: outside every triangle by more than the tolerance
  std::array<double, 3> weights{};

  bool inside() const { return triangle >= 0; }
};

// Uniform background grid over triangles and nodes. Read-only after
// construction, so concurrent queries are safe.
class Locator {
 public:
  explicit Locator(const Mesh& mesh);

  PointLocation locate(Vec2 p) const;
  int nearest_node(Vec2 p) const;
  const Mesh& mesh() const { return mesh_; }

 private:
  const Mesh& mesh_;
  Vec2 lo_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> tri_cells_;
  std::vector<std::vector<int>> node_cells_;

  int cx(double x) const;
  int cy(double y) const;
  std::size_t idx(int i, int j) const;
};

// Barycentric sum inside, value of the nearest source node outside.
double interpolate_node(std::span<const double> values, const PointLocation& loc,
                        const Locator& source, Vec2 point);

// Per-target-node weights, computed once and reused for every field/step.
struct Transfer {
  struct Entry {
    std::array<int, 3> nodes{};
    std::array<double, 3> weights{};
  };
  std::vector<Entry> entries;
  std::size_t fallback_count = 0;  // nodes served by nearest-neighbor lookup

  std::vector<double> apply(std::span<const double> values) const;
  FieldState apply(const FieldState& s) const;
};

Transfer build_transfer(const Mesh& source, const Mesh& target);

SimulationRecord downsample(const SimulationRecord& record, const Mesh& fine, const Mesh& coarse);

}  // namespace surf
