#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surf/mesh.hpp"
#include "surf/solver.hpp"

namespace surf {

inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 256;

enum class TensorKind { Fields, Prediction };

// Dense [steps][nodes][4] block of (u, v, p, T). Ground truth stores states
// 0..S (first_step 0); predictions store steps 1..H (first_step 1).
struct FieldTensor {
  TensorKind kind = TensorKind::Fields;
  std::size_t steps = 0;
  std::size_t nodes = 0;
  int first_step = 0;
  std::vector<double> data;

  static FieldTensor zeros(TensorKind kind, std::size_t steps, std::size_t nodes, int first_step);
  static FieldTensor from_states(const std::vector<FieldState>& states);

  double& at(std::size_t step, std::size_t node, int q) { return data[(step * nodes + node) * 4 + static_cast<std::size_t>(q)]; }
  double at(std::size_t step, std::size_t node, int q) const {
    return data[(step * nodes + node) * 4 + static_cast<std::size_t>(q)];
  }
  // Index of the last physical step held.
  int last_step() const { return first_step + static_cast<int>(steps) - 1; }
  FieldState state(std::size_t step) const;
  int horizon() const { return kind == TensorKind::Prediction ? static_cast<int>(steps) : 0; }
};

// Byte size of a fields.bin with the given dimensions.
std::size_t field_file_bytes(std::size_t steps, std::size_t nodes);
// Byte size of a mesh.bin.
std::size_t mesh_file_bytes(std::size_t nodes, std::size_t triangles, std::size_t boundary_edges);

void write_field_tensor(const std::filesystem::path& path, const FieldTensor& t);
FieldTensor read_field_tensor(const std::filesystem::path& path);

void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_mesh_file(const std::filesystem::path& path);

std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace surf
