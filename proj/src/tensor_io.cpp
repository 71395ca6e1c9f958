#include "surf/tensor_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "surf/config.hpp"
#include "surf/errors.hpp"

namespace surf {

namespace {

template <class T>
void put_le(std::string& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::string make_header(const std::string& magic, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string h = magic + "\n";
  for (const auto& [k, v] : kv) h += k + " " + v + "\n";
  if (h.size() > kHeaderBytes - 1) throw FormatError("header too long");
  h.append(kHeaderBytes - 1 - h.size(), ' ');
  h += '\n';
  return h;
}

std::map<std::string, std::string> parse_header(const std::string& raw, const std::string& magic,
                                                const std::filesystem::path& path) {
  std::istringstream in(raw);
  std::string line;
  std::getline(in, line);
  if (trim(line) != magic) throw FormatError(path.string() + ": not a " + magic + " file");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto sp = t.find(' ');
    if (sp == std::string::npos) kv[t] = "";
    else kv[t.substr(0, sp)] = trim(t.substr(sp + 1));
  }
  const auto need = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw FormatError(path.string() + ": header lacks '" + k + "'");
    return it->second;
  };
  const long long version = parse_int(need("version"), path.string() + " version");
  if (version != kFormatVersion) {
    throw FormatError(path.string() + ": format version " + std::to_string(version) + ", expected " +
                      std::to_string(kFormatVersion));
  }
  if (need("endianness") != "little") throw FormatError(path.string() + ": unsupported endianness");
  return kv;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

}  // namespace

FieldTensor FieldTensor::zeros(TensorKind kind, std::size_t steps, std::size_t nodes, int first_step) {
  FieldTensor t;
  t.kind = kind;
  t.steps = steps;
  t.nodes = nodes;
  t.first_step = first_step;
  t.data.assign(steps * nodes * 4, 0.0);
  return t;
}

FieldTensor FieldTensor::from_states(const std::vector<FieldState>& states) {
  const std::size_t n = states.empty() ? 0 : states.front().size();
  FieldTensor t = zeros(TensorKind::Fields, states.size(), n, 0);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      t.at(s, i, 0) = states[s].u[i];
      t.at(s, i, 1) = states[s].v[i];
      t.at(s, i, 2) = states[s].p[i];
      t.at(s, i, 3) = states[s].T[i];
    }
  }
  return t;
}

FieldState FieldTensor::state(std::size_t step) const {
  FieldState s;
  s.u.resize(nodes);
  s.v.resize(nodes);
  s.p.resize(nodes);
  s.T.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    s.u[i] = at(step, i, 0);
    s.v[i] = at(step, i, 1);
    s.p[i] = at(step, i, 2);
    s.T[i] = at(step, i, 3);
  }
  return s;
}

std::size_t field_file_bytes(std::size_t steps, std::size_t nodes) { return kHeaderBytes + steps * nodes * 4 * 8; }

std::size_t mesh_file_bytes(std::size_t nodes, std::size_t triangles, std::size_t boundary_edges) {
  return kHeaderBytes + nodes * (16 + 4 + 4) + triangles * 12 + boundary_edges * 16;
}

void write_field_tensor(const std::filesystem::path& path, const FieldTensor& t) {
  if (t.data.size() != t.steps * t.nodes * 4) throw FormatError("tensor data does not match its dims");
  std::string buf = make_header(
      "SURF-TENSOR", {{"version", std::to_string(kFormatVersion)},
                      {"kind", t.kind == TensorKind::Fields ? "fields" : "prediction"},
                      {"endianness", "little"},
                      {"dtype", "float64"},
                      {"dims", std::to_string(t.steps) + " " + std::to_string(t.nodes) + " 4"},
                      {"order", "u v p T"},
                      {"first_step", std::to_string(t.first_step)},
                      {"horizon", std::to_string(t.horizon())}});
  buf.reserve(field_file_bytes(t.steps, t.nodes));
  for (double v : t.data) put_le(buf, v);
  write_atomic(path, buf);
}

FieldTensor read_field_tensor(const std::filesystem::path& path) {
  const std::string raw = read_all(path);
  if (raw.size() < kHeaderBytes) throw FormatError(path.string() + ": truncated header");
  const auto kv = parse_header(raw.substr(0, kHeaderBytes), "SURF-TENSOR", path);
  if (kv.count("dtype") == 0 || kv.at("dtype") != "float64") throw FormatError(path.string() + ": dtype must be float64");
  const auto dims = split_ws(kv.at("dims"));
  if (dims.size() != 3 || dims[2] != "4") throw FormatError(path.string() + ": bad dims");
  FieldTensor t;
  const std::string kind = kv.count("kind") ? kv.at("kind") : "";
  if (kind == "fields") t.kind = TensorKind::Fields;
  else if (kind == "prediction") t.kind = TensorKind::Prediction;
  else throw FormatError(path.string() + ": unknown kind '" + kind + "'");
  t.steps = static_cast<std::size_t>(parse_int(dims[0], "dims"));
  t.nodes = static_cast<std::size_t>(parse_int(dims[1], "dims"));
  t.first_step = static_cast<int>(parse_int(kv.count("first_step") ? kv.at("first_step") : "0", "first_step"));
  if (raw.size() != field_file_bytes(t.steps, t.nodes)) {
    throw FormatError(path.string() + ": expected " + std::to_string(field_file_bytes(t.steps, t.nodes)) +
                      " bytes, found " + std::to_string(raw.size()));
  }
  t.data.resize(t.steps * t.nodes * 4);
  const char* p = raw.data() + kHeaderBytes;
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = get_le<double>(p + 8 * i);
  return t;
}

void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh) {
  const std::size_t n = mesh.num_nodes(), m = mesh.num_triangles(), k = mesh.boundary_edges.size();
  std::string buf = make_header(
      "SURF-MESH", {{"version", std::to_string(kFormatVersion)},
                    {"endianness", "little"},
                    {"nodes", std::to_string(n)},
                    {"triangles", std::to_string(m)},
                    {"boundary_edges", std::to_string(k)},
                    {"blocks", "coords:float64[N,2] node_type:int32[N] node_object:int32[N] "
                               "triangles:int32[M,3] boundary_edges:int32[K,4]"}});
  buf.reserve(mesh_file_bytes(n, m, k));
  for (const auto& p : mesh.coords) {
    put_le(buf, p.x);
    put_le(buf, p.y);
  }
  for (auto t : mesh.node_type) put_le(buf, static_cast<std::int32_t>(t));
  for (auto o : mesh.node_object) put_le(buf, static_cast<std::int32_t>(o));
  for (const auto& t : mesh.triangles) {
    for (int v : t) put_le(buf, static_cast<std::int32_t>(v));
  }
  for (const auto& e : mesh.boundary_edges) {
    put_le(buf, static_cast<std::int32_t>(e.a));
    put_le(buf, static_cast<std::int32_t>(e.b));
    put_le(buf, static_cast<std::int32_t>(e.tag));
    put_le(buf, static_cast<std::int32_t>(e.object_index));
  }
  write_atomic(path, buf);
}

Mesh read_mesh_file(const std::filesystem::path& path) {
  const std::string raw = read_all(path);
  if (raw.size() < kHeaderBytes) throw FormatError(path.string() + ": truncated header");
  const auto kv = parse_header(raw.substr(0, kHeaderBytes), "SURF-MESH", path);
  const auto get = [&](const char* key) {
    if (kv.count(key) == 0) throw FormatError(path.string() + ": header lacks '" + key + "'");
    return static_cast<std::size_t>(parse_int(kv.at(key), key));
  };
  const std::size_t n = get("nodes"), m = get("triangles"), k = get("boundary_edges");
  if (raw.size() != mesh_file_bytes(n, m, k)) throw FormatError(path.string() + ": size does not match header");
  Mesh mesh;
  const char* p = raw.data() + kHeaderBytes;
  mesh.coords.resize(n);
  for (auto& c : mesh.coords) {
    c.x = get_le<double>(p);
    c.y = get_le<double>(p + 8);
    p += 16;
  }
  mesh.node_type.resize(n);
  for (auto& t : mesh.node_type) {
    const auto v = get_le<std::int32_t>(p);
    if (v < 0 || v >= kNodeTypeCount) throw FormatError(path.string() + ": bad node type");
    t = static_cast<NodeType>(v);
    p += 4;
  }
  mesh.node_object.resize(n);
  for (auto& o : mesh.node_object) {
    o = get_le<std::int32_t>(p);
    p += 4;
  }
  mesh.triangles.resize(m);
  for (auto& t : mesh.triangles) {
    for (auto& v : t) {
      v = get_le<std::int32_t>(p);
      if (v < 0 || static_cast<std::size_t>(v) >= n) throw FormatError(path.string() + ": triangle index out of range");
      p += 4;
    }
  }
  mesh.boundary_edges.resize(k);
  for (auto& e : mesh.boundary_edges) {
    e.a = get_le<std::int32_t>(p);
    e.b = get_le<std::int32_t>(p + 4);
    e.tag = static_cast<BoundaryTag>(get_le<std::int32_t>(p + 8));
    e.object_index = get_le<std::int32_t>(p + 12);
    p += 16;
  }
  return mesh;
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  const std::string raw = read_all(path);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(raw.data()), static_cast<uInt>(raw.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace surf
