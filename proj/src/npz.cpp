#include "surf/npz.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "surf/errors.hpp"

namespace surf {

namespace {

static_assert(std::endian::native == std::endian::little, "npz export assumes a little-endian host");

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get16(const std::string& s, std::size_t at) {
  if (at + 2 > s.size()) throw FormatError("npz: truncated archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) | (static_cast<unsigned char>(s[at + 1]) << 8));
}

std::uint32_t get32(const std::string& s, std::size_t at) {
  if (at + 4 > s.size()) throw FormatError("npz: truncated archive");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]);
  return v;
}

std::uint32_t crc_of(const std::string& s) {
  uLong c = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(c, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

// 1980-01-01 00:00, so archives do not depend on the clock.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

NpyArray npy_f64(std::string name, std::vector<std::size_t> shape, const std::vector<double>& values) {
  if (element_count(shape) != values.size()) throw FormatError("npy: shape does not match data for " + name);
  NpyArray a{std::move(name), "<f8", std::move(shape), {}};
  a.bytes.resize(values.size() * 8);
  if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
  return a;
}

NpyArray npy_i32(std::string name, std::vector<std::size_t> shape, const std::vector<std::int32_t>& values) {
  if (element_count(shape) != values.size()) throw FormatError("npy: shape does not match data for " + name);
  NpyArray a{std::move(name), "<i4", std::move(shape), {}};
  a.bytes.resize(values.size() * 4);
  if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
  return a;
}

std::string npy_encode(const NpyArray& a) {
  std::string shape = "(";
  for (std::size_t i = 0; i < a.shape.size(); ++i) {
    shape += std::to_string(a.shape[i]);
    if (a.shape.size() == 1 || i + 1 < a.shape.size()) shape += ",";
    if (i + 1 < a.shape.size()) shape += " ";
  }
  shape += ")";
  std::string dict = "{'descr': '" + a.dtype + "', 'fortran_order': False, 'shape': " + shape + ", }";
  // magic(6) + version(2) + length(2) + dict + '\n' padded to 64
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  std::string out("\x93NUMPY\x01\x00", 8);
  put16(out, static_cast<std::uint16_t>(dict.size()));
  out += dict;
  out += a.bytes;
  return out;
}

std::string npz_encode(const std::vector<NpyArray>& arrays) {
  std::string out, central;
  for (const auto& a : arrays) {
    const std::string name = a.name + ".npy";
    const std::string body = npy_encode(a);
    if (body.size() > std::numeric_limits<std::uint32_t>::max() || out.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("npz: member " + name + " exceeds the 4 GiB zip limit");
    }
    const std::uint32_t crc = crc_of(body), size = static_cast<std::uint32_t>(body.size());
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out += name;
    out += body;

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(arrays.size()));
  put16(out, static_cast<std::uint16_t>(arrays.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<NpyArray> npz_decode(const std::string& archive) {
  std::vector<NpyArray> out;
  std::size_t at = 0;
  while (at + 4 <= archive.size() && get32(archive, at) == 0x04034b50) {
    if (get16(archive, at + 8) != 0) throw FormatError("npz: compressed members are not supported");
    const std::uint32_t crc = get32(archive, at + 14);
    const std::uint32_t size = get32(archive, at + 18);
    const std::uint16_t name_len = get16(archive, at + 26), extra_len = get16(archive, at + 28);
    std::string name = archive.substr(at + 30, name_len);
    const std::size_t data_at = at + 30 + name_len + extra_len;
    if (data_at + size > archive.size()) throw FormatError("npz: truncated member " + name);
    const std::string body = archive.substr(data_at, size);
    if (crc_of(body) != crc) throw FormatError("npz: checksum mismatch in " + name);
    at = data_at + size;

    if (body.size() < 10 || body.compare(0, 6, "\x93NUMPY") != 0) throw FormatError("npz: " + name + " is not npy");
    const std::size_t hlen = get16(body, 8);
    const std::string dict = body.substr(10, hlen);
    NpyArray a;
    a.name = name.size() > 4 ? name.substr(0, name.size() - 4) : name;
    const auto d0 = dict.find("'descr': '") + 10;
    a.dtype = dict.substr(d0, dict.find('\'', d0) - d0);
    const auto s0 = dict.find('(', dict.find("'shape'")) + 1;
    const std::string tuple = dict.substr(s0, dict.find(')', s0) - s0);
    std::size_t pos = 0;
    while (pos < tuple.size()) {
      const auto comma = tuple.find(',', pos);
      const std::string tok = tuple.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (tok.find_first_not_of(' ') != std::string::npos) a.shape.push_back(std::stoull(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    a.bytes = body.substr(10 + hlen);
    out.push_back(std::move(a));
  }
  return out;
}

void write_npz_export(const std::filesystem::path& dir, const Mesh& mesh, const FieldTensor& fields) {
  const std::size_t T = fields.steps, N = fields.nodes;
  std::vector<double> pos(T * N * 2), vx(T * N), vy(T * N), ps(T * N), temp(T * N);
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t k = s * N + i;
      pos[2 * k] = mesh.coords[i].x;
      pos[2 * k + 1] = mesh.coords[i].y;
      vx[k] = fields.at(s, i, 0);
      vy[k] = fields.at(s, i, 1);
      ps[k] = fields.at(s, i, 2);
      temp[k] = fields.at(s, i, 3);
    }
  }
  std::vector<std::int32_t> types(N), tris(mesh.num_triangles() * 3);
  for (std::size_t i = 0; i < N; ++i) types[i] = static_cast<std::int32_t>(mesh.node_type[i]);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    for (std::size_t k = 0; k < 3; ++k) tris[3 * t + k] = mesh.triangles[t][k];
  }
  const std::string sim = npz_encode({npy_f64("pointcloud", {T, N, 2}, pos), npy_f64("VX", {T, N}, vx),
                                      npy_f64("VY", {T, N}, vy), npy_f64("PS", {T, N}, ps),
                                      npy_f64("TEMP", {T, N}, temp), npy_i32("node_type", {N}, types)});
  const std::string tri = npy_encode(npy_i32("triangles", {mesh.num_triangles(), 3}, tris));
  for (const auto& [file, bytes] : {std::pair{"sim.npz", &sim}, std::pair{"triangles.npy", &tri}}) {
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / file).string());
    out.write(bytes->data(), static_cast<std::streamsize>(bytes->size()));
    if (!out) throw IoError("short write to " + (dir / file).string());
  }
}

}  // namespace surf
