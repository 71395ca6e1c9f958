#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/npz.hpp"

using namespace surf;
namespace fs = std::filesystem;

TEST_CASE("npy header layout") {
  const auto a = npy_f64("x", {2, 3}, {1, 2, 3, 4, 5, 6});
  const std::string s = npy_encode(a);
  CHECK(s.substr(0, 6) == "\x93NUMPY");
  CHECK(s[6] == 1);
  CHECK(s[7] == 0);
  const std::size_t hlen = static_cast<unsigned char>(s[8]) | (static_cast<unsigned char>(s[9]) << 8);
  CHECK((10 + hlen) % 64 == 0);
  const std::string header = s.substr(10, hlen);
  CHECK(header.find("'descr': '<f8'") != std::string::npos);
  CHECK(header.find("'fortran_order': False") != std::string::npos);
  CHECK(header.find("'shape': (2, 3)") != std::string::npos);
  CHECK(header.back() == '\n');
  CHECK(s.size() == 10 + hlen + 48);
  CHECK(npy_encode(npy_i32("n", {4}, {1, 2, 3, 4})).find("'shape': (4,)") != std::string::npos);
}

TEST_CASE("npz round trip") {
  std::vector<NpyArray> arrays = {npy_f64("VX", {2, 2}, {0.5, -1, 2, 3}), npy_i32("node_type", {3}, {0, 6, 1}),
                                  npy_f64("empty", {0, 2}, {})};
  const std::string zip = npz_encode(arrays);
  CHECK(zip.substr(0, 4) == std::string("PK\x03\x04", 4));
  CHECK(npz_encode(arrays) == zip);
  const auto back = npz_decode(zip);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == arrays[i].name);
    CHECK(back[i].dtype == arrays[i].dtype);
    CHECK(back[i].shape == arrays[i].shape);
    CHECK(back[i].bytes == arrays[i].bytes);
  }
  std::string bad = zip;
  bad[60] ^= 0x55;
  CHECK_THROWS_AS(npz_decode(bad), FormatError);
}

TEST_CASE("export writes both files") {
  const fs::path d = fs::temp_directory_path() / "surf_npz_export";
  fs::remove_all(d);
  fs::create_directories(d);
  Mesh m;
  m.coords = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.node_type = {NodeType::Wall, NodeType::Outlet, NodeType::Inlet1};
  m.node_object = {0, 0, 0};
  auto t = FieldTensor::zeros(TensorKind::Fields, 2, 3, 0);
  for (std::size_t k = 0; k < t.data.size(); ++k) t.data[k] = static_cast<double>(k);
  write_npz_export(d, m, t);
  REQUIRE(fs::exists(d / "sim.npz"));
  REQUIRE(fs::exists(d / "triangles.npy"));
  std::ifstream in(d / "sim.npz", std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  const auto arrays = npz_decode(s.str());
  std::map<std::string, NpyArray> by;
  for (const auto& a : arrays) by[a.name] = a;
  for (const char* k : {"pointcloud", "VX", "VY", "PS", "TEMP", "node_type"}) REQUIRE(by.count(k));
  CHECK(by["pointcloud"].shape == std::vector<std::size_t>{2, 3, 2});
  CHECK(by["TEMP"].shape == std::vector<std::size_t>{2, 3});
  CHECK(by["node_type"].dtype == "<i4");
  // TEMP[1][2] is element (step 1, node 2, q 3) = (1*3 + 2)*4 + 3 = 23
  double v = 0;
  std::memcpy(&v, by["TEMP"].bytes.data() + 5 * 8, 8);
  CHECK(v == 23.0);
}
