#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surf/mesh.hpp"
#include "surf/param_space.hpp"
#include "surf/solver.hpp"
#include "surf/tensor_io.hpp"

namespace surf {

// Generation metadata stored next to each datapoint.
struct DatapointMeta {
  double reynolds = 0.0;
  double clamp_factor = 1.0;
  int steps = 0;
  double dt = 0.0;
  double coarse_edge = 0.0;
  double resolution_factor = 1.0;
  std::size_t fine_nodes = 0;
  std::size_t fine_triangles = 0;
  double max_divergence = 0.0;
  double max_pressure_residual = 0.0;
  double max_momentum_residual = 0.0;
  double max_energy_residual = 0.0;
  FluidProperties props;
};

struct DatapointPackage {
  DesignPoint dp;
  Mesh mesh;  // coarse training mesh
  FieldTensor fields;
  DatapointMeta meta;
};

// Throws FormatError when the tensor does not match the mesh or holds
// non-finite values.
void validate_package(const DatapointPackage& pkg);

std::filesystem::path variant_dir(const std::filesystem::path& root, DatasetVariant v);
std::filesystem::path datapoint_dir(const std::filesystem::path& root, DatasetVariant v, int index);

struct WriteOptions {
  bool export_npz = false;
};

// Writes fields.bin, mesh.bin and meta.json (last, carrying checksums of
// the other two). Returns the datapoint directory.
std::filesystem::path write_datapoint(const DatapointPackage& pkg, const std::filesystem::path& root,
                                      const WriteOptions& opt = {});
DatapointPackage read_datapoint(const std::filesystem::path& dir);
Mesh read_datapoint_mesh(const std::filesystem::path& dir);

// True when meta.json exists and both binary files match its checksums.
bool datapoint_complete(const std::filesystem::path& dir);

struct Split {
  std::vector<int> train, val, test;
};

// Positions 0..n-1, seeded shuffle, 80/10/10 with |val| = |test| = floor(n/10).
Split split_dataset(int n, std::uint64_t seed);

// Split over arbitrary datapoint ids. Below ten ids, val and test get one
// id each (as long as ids remain) instead of throwing.
Split split_ids(std::span<const int> ids, std::uint64_t seed);

struct VariableStats {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct DatasetStats {
  VariableStats velocity, pressure, temperature;
  std::size_t samples = 0;  // node-steps pooled
};

DatasetStats compute_stats(std::span<const FieldTensor> tensors);

struct FailedDatapoint {
  int index = 0;
  std::string error;
};

struct Manifest {
  int format_version = kFormatVersion;
  DatasetVariant variant = DatasetVariant::Base;
  int requested = 0;  // design points in the list
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::vector<int> datapoints;  // completed, ascending
  Split split;
  DatasetStats stats;
  std::vector<FailedDatapoint> failed;
  std::map<std::string, std::string> config;
};

std::filesystem::path manifest_path(const std::filesystem::path& root, DatasetVariant v);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace surf
