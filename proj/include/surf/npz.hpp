#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surf/mesh.hpp"
#include "surf/tensor_io.hpp"

namespace surf {

// One array in NumPy's .npy v1.0 layout. dtype is the NumPy descr string,
// e.g. "<f8" or "<i4".
struct NpyArray {
  std::string name;
  std::string dtype;
  std::vector<std::size_t> shape;
  std::string bytes;  // raw little-endian payload, C order
};

NpyArray npy_f64(std::string name, std::vector<std::size_t> shape, const std::vector<double>& values);
NpyArray npy_i32(std::string name, std::vector<std::size_t> shape, const std::vector<std::int32_t>& values);

std::string npy_encode(const NpyArray& a);
// Uncompressed zip archive of "<name>.npy" members, as numpy.savez writes.
std::string npz_encode(const std::vector<NpyArray>& arrays);

// Parses a stored npz back into arrays (members must be uncompressed).
std::vector<NpyArray> npz_decode(const std::string& archive);

// sim.npz (pointcloud [T,N,2], VX, VY, PS, TEMP [T,N], node_type [N]) and
// triangles.npy [M,3] in `dir`.
void write_npz_export(const std::filesystem::path& dir, const Mesh& mesh, const FieldTensor& fields);

}  // namespace surf
