#include "surf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "surf/errors.hpp"
#include "surf/npz.hpp"

namespace surf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
    else c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

void write_text_atomic(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << text;
    if (!out) throw IoError("short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json stats_json(const VariableStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }
VariableStats stats_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

json props_json(const FluidProperties& p) { return {{"rho", p.rho}, {"mu", p.mu}, {"k", p.k}, {"cp", p.cp}}; }
FluidProperties props_from(const json& j) {
  FluidProperties p;
  p.rho = j.at("rho").get<double>();
  p.mu = j.at("mu").get<double>();
  p.k = j.at("k").get<double>();
  p.cp = j.at("cp").get<double>();
  return p;
}

json meta_json(const DatapointMeta& m) {
  return {{"reynolds", m.reynolds},
          {"clamp_factor", m.clamp_factor},
          {"steps", m.steps},
          {"dt", m.dt},
          {"coarse_edge", m.coarse_edge},
          {"resolution_factor", m.resolution_factor},
          {"fine_nodes", m.fine_nodes},
          {"fine_triangles", m.fine_triangles},
          {"max_divergence", m.max_divergence},
          {"max_pressure_residual", m.max_pressure_residual},
          {"max_momentum_residual", m.max_momentum_residual},
          {"max_energy_residual", m.max_energy_residual},
          {"fluid", props_json(m.props)}};
}

DatapointMeta meta_from(const json& j) {
  DatapointMeta m;
  m.reynolds = j.at("reynolds").get<double>();
  m.clamp_factor = j.at("clamp_factor").get<double>();
  m.steps = j.at("steps").get<int>();
  m.dt = j.at("dt").get<double>();
  m.coarse_edge = j.at("coarse_edge").get<double>();
  m.resolution_factor = j.at("resolution_factor").get<double>();
  m.fine_nodes = j.at("fine_nodes").get<std::size_t>();
  m.fine_triangles = j.at("fine_triangles").get<std::size_t>();
  m.max_divergence = j.at("max_divergence").get<double>();
  m.max_pressure_residual = j.at("max_pressure_residual").get<double>();
  m.max_momentum_residual = j.at("max_momentum_residual").get<double>();
  m.max_energy_residual = j.at("max_energy_residual").get<double>();
  m.props = props_from(j.at("fluid"));
  return m;
}

json split_json(const Split& s) { return {{"train", s.train}, {"val", s.val}, {"test", s.test}}; }

json read_meta(const fs::path& dir) {
  const json j = read_json(dir / "meta.json");
  const int version = j.value("format_version", -1);
  if (version != kFormatVersion) {
    throw FormatError((dir / "meta.json").string() + ": format version " + std::to_string(version) + ", expected " +
                      std::to_string(kFormatVersion));
  }
  return j;
}

void check_file(const fs::path& dir, const json& files, const std::string& name) {
  const auto& f = files.at(name);
  const fs::path p = dir / name;
  std::error_code ec;
  const auto size = fs::file_size(p, ec);
  if (ec) throw IoError("missing " + p.string());
  if (size != f.at("bytes").get<std::uintmax_t>()) throw FormatError(p.string() + ": size differs from meta.json");
  if (file_crc32(p) != f.at("crc32").get<std::uint32_t>()) throw FormatError(p.string() + ": checksum mismatch");
}

}  // namespace

void validate_package(const DatapointPackage& pkg) {
  const auto& m = pkg.mesh;
  const std::size_t n = m.num_nodes();
  if (m.node_type.size() != n || m.node_object.size() != n) throw FormatError("mesh node arrays differ in length");
  if (pkg.fields.nodes != n) {
    throw FormatError("tensor has " + std::to_string(pkg.fields.nodes) + " nodes, mesh has " + std::to_string(n));
  }
  if (pkg.fields.data.size() != pkg.fields.steps * n * 4) throw FormatError("tensor payload does not match dims");
  if (pkg.meta.steps > 0 && pkg.fields.steps != static_cast<std::size_t>(pkg.meta.steps) + 1) {
    throw FormatError("tensor holds " + std::to_string(pkg.fields.steps) + " states for " +
                      std::to_string(pkg.meta.steps) + " steps");
  }
  for (double v : pkg.fields.data) {
    if (!std::isfinite(v)) throw FormatError("non-finite value in fields of datapoint " + std::to_string(pkg.dp.index));
  }
}

fs::path variant_dir(const fs::path& root, DatasetVariant v) { return root / std::string(variant_name(v)); }

fs::path datapoint_dir(const fs::path& root, DatasetVariant v, int index) {
  return variant_dir(root, v) / ("dp_" + std::to_string(index));
}

fs::path write_datapoint(const DatapointPackage& pkg, const fs::path& root, const WriteOptions& opt) {
  validate_package(pkg);
  const fs::path dir = datapoint_dir(root, pkg.dp.variant, pkg.dp.index);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  // A stale meta.json must not vouch for half-written binaries.
  fs::remove(dir / "meta.json", ec);

  write_field_tensor(dir / "fields.bin", pkg.fields);
  write_mesh_file(dir / "mesh.bin", pkg.mesh);
  if (opt.export_npz) write_npz_export(dir, pkg.mesh, pkg.fields);

  json files = json::object();
  for (const char* name : {"fields.bin", "mesh.bin"}) {
    files[name] = {{"bytes", fs::file_size(dir / name)}, {"crc32", file_crc32(dir / name)}};
  }
  const json j{{"format_version", kFormatVersion},
               {"design_point", json::parse(design_point_to_json(pkg.dp))},
               {"generation", meta_json(pkg.meta)},
               {"nodes", pkg.mesh.num_nodes()},
               {"triangles", pkg.mesh.num_triangles()},
               {"boundary_edges", pkg.mesh.boundary_edges.size()},
               {"states", pkg.fields.steps},
               {"files", files}};
  write_text_atomic(dir / "meta.json", j.dump(2) + "\n");
  return dir;
}

DatapointPackage read_datapoint(const fs::path& dir) {
  const json j = read_meta(dir);
  DatapointPackage pkg;
  try {
    check_file(dir, j.at("files"), "fields.bin");
    check_file(dir, j.at("files"), "mesh.bin");
    pkg.dp = design_point_from_json(j.at("design_point").dump());
    pkg.meta = meta_from(j.at("generation"));
  } catch (const json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  pkg.fields = read_field_tensor(dir / "fields.bin");
  pkg.mesh = read_mesh_file(dir / "mesh.bin");
  validate_package(pkg);
  return pkg;
}

Mesh read_datapoint_mesh(const fs::path& dir) { return read_mesh_file(dir / "mesh.bin"); }

bool datapoint_complete(const fs::path& dir) {
  try {
    const json j = read_meta(dir);
    check_file(dir, j.at("files"), "fields.bin");
    check_file(dir, j.at("files"), "mesh.bin");
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

Split split_dataset(int n, std::uint64_t seed) {
  if (n < 10) throw TooSmallError("split needs at least 10 datapoints, got " + std::to_string(n));
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  const int k = n / 10;
  Split s;
  s.train.assign(perm.begin(), perm.end() - 2 * k);
  s.val.assign(perm.end() - 2 * k, perm.end() - k);
  s.test.assign(perm.end() - k, perm.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

Split split_ids(std::span<const int> ids, std::uint64_t seed) {
  const int n = static_cast<int>(ids.size());
  Split pos;
  if (n >= 10) {
    pos = split_dataset(n, seed);
  } else {
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    const int test = n >= 2 ? 1 : 0, val = n >= 3 ? 1 : 0;
    pos.train.assign(perm.begin(), perm.end() - test - val);
    pos.val.assign(perm.end() - test - val, perm.end() - test);
    pos.test.assign(perm.end() - test, perm.end());
  }
  Split out;
  const auto map = [&](const std::vector<int>& from, std::vector<int>& to) {
    for (int p : from) to.push_back(ids[static_cast<std::size_t>(p)]);
    std::sort(to.begin(), to.end());
  };
  map(pos.train, out.train);
  map(pos.val, out.val);
  map(pos.test, out.test);
  return out;
}

DatasetStats compute_stats(std::span<const FieldTensor> tensors) {
  CompensatedSum su, sp, st;
  std::size_t count = 0;
  for (const auto& t : tensors) {
    for (std::size_t k = 0; k < t.steps * t.nodes; ++k) {
      su.add(t.data[4 * k]);
      su.add(t.data[4 * k + 1]);
      sp.add(t.data[4 * k + 2]);
      st.add(t.data[4 * k + 3]);
    }
    count += t.steps * t.nodes;
  }
  DatasetStats s;
  s.samples = count;
  if (count == 0) return s;
  const double n = static_cast<double>(count);
  s.velocity.mean = su.value() / (2.0 * n);
  s.pressure.mean = sp.value() / n;
  s.temperature.mean = st.value() / n;
  // Second pass on deviations; avoids the cancellation of E[x^2] - E[x]^2.
  CompensatedSum du, dp, dt;
  for (const auto& t : tensors) {
    for (std::size_t k = 0; k < t.steps * t.nodes; ++k) {
      const double a = t.data[4 * k] - s.velocity.mean, b = t.data[4 * k + 1] - s.velocity.mean;
      const double c = t.data[4 * k + 2] - s.pressure.mean, d = t.data[4 * k + 3] - s.temperature.mean;
      du.add(a * a);
      du.add(b * b);
      dp.add(c * c);
      dt.add(d * d);
    }
  }
  s.velocity.std = std::sqrt(du.value() / (2.0 * n));
  s.pressure.std = std::sqrt(dp.value() / n);
  s.temperature.std = std::sqrt(dt.value() / n);
  return s;
}

fs::path manifest_path(const fs::path& root, DatasetVariant v) { return variant_dir(root, v) / "manifest.json"; }

void write_manifest(const fs::path& path, const Manifest& m) {
  json failed = json::array();
  for (const auto& f : m.failed) failed.push_back({{"index", f.index}, {"error", f.error}});
  const json j{
      {"format_version", m.format_version},
      {"variant", std::string(variant_name(m.variant))},
      {"requested", m.requested},
      {"seed", m.seed},
      {"split_seed", m.split_seed},
      {"n", m.datapoints.size()},
      {"datapoints", m.datapoints},
      {"split", split_json(m.split)},
      {"stats",
       {{"velocity", stats_json(m.stats.velocity)},
        {"pressure", stats_json(m.stats.pressure)},
        {"temperature", stats_json(m.stats.temperature)},
        {"samples", m.stats.samples},
        {"computed_over", "train"}}},
      {"failed", failed},
      {"config", m.config},
      // Published full-variant statistics, kept for comparison only.
      {"reference_full_stats",
       {{"velocity", {{"mean", -1.0}, {"std", 9.0}}},
        {"pressure", {{"mean", 59.0}, {"std", 137.0}}},
        {"temperature", {{"mean", 340.0}, {"std", 129.0}}}}}};
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  write_text_atomic(path, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  Manifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw FormatError(path.string() + ": format version " + std::to_string(m.format_version) + ", expected " +
                        std::to_string(kFormatVersion));
    }
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.requested = j.at("requested").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.datapoints = j.at("datapoints").get<std::vector<int>>();
    const auto& sp = j.at("split");
    m.split.train = sp.at("train").get<std::vector<int>>();
    m.split.val = sp.at("val").get<std::vector<int>>();
    m.split.test = sp.at("test").get<std::vector<int>>();
    const auto& st = j.at("stats");
    m.stats.velocity = stats_from(st.at("velocity"));
    m.stats.pressure = stats_from(st.at("pressure"));
    m.stats.temperature = stats_from(st.at("temperature"));
    m.stats.samples = st.at("samples").get<std::size_t>();
    for (const auto& f : j.at("failed")) m.failed.push_back({f.at("index").get<int>(), f.at("error").get<std::string>()});
    m.config = j.at("config").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace surf
