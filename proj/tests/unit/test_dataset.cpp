#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "surf/dataset.hpp"
#include "surf/errors.hpp"
#include "surf/geometry.hpp"

using namespace surf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("surf_dataset_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

DatapointPackage small_package(int steps) {
  DatapointPackage pkg;
  pkg.dp = sample_design_points(DatasetVariant::Base, 1, 12).front();
  pkg.mesh = triangulate(build_outline(pkg.dp), 0.08);
  std::vector<FieldState> states;
  Rng rng(2);
  for (int k = 0; k <= steps; ++k) {
    auto s = FieldState::uniform(pkg.mesh.num_nodes(), 300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.u[i] = rng.uniform(-3, 3);
      s.p[i] = rng.uniform(-50, 50);
      s.T[i] = 300 + rng.uniform01();
    }
    states.push_back(s);
  }
  pkg.fields = FieldTensor::from_states(states);
  pkg.meta.steps = steps;
  pkg.meta.dt = 0.01;
  pkg.meta.reynolds = 1234.5;
  pkg.meta.coarse_edge = 0.08;
  return pkg;
}

void check_partition(const Split& s, const std::vector<int>& all) {
  std::vector<int> joined;
  for (const auto* part : {&s.train, &s.val, &s.test}) joined.insert(joined.end(), part->begin(), part->end());
  std::sort(joined.begin(), joined.end());
  CHECK(joined == all);
}

}  // namespace

TEST_CASE("datapoint round trip and layout") {
  const auto root = scratch("rt");
  const auto pkg = small_package(4);
  const auto dir = write_datapoint(pkg, root);
  CHECK(dir == datapoint_dir(root, DatasetVariant::Base, pkg.dp.index));
  CHECK(dir.parent_path() == variant_dir(root, DatasetVariant::Base));
  CHECK(dir.filename().string().rfind("dp_", 0) == 0);
  for (const char* f : {"fields.bin", "mesh.bin", "meta.json"}) CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "sim.npz"));
  CHECK_FALSE(fs::exists(dir / "triangles.npy"));
  CHECK(fs::file_size(dir / "fields.bin") == field_file_bytes(5, pkg.mesh.num_nodes()));
  CHECK(datapoint_complete(dir));

  const auto back = read_datapoint(dir);
  CHECK(back.fields.data == pkg.fields.data);
  CHECK(back.mesh.coords == pkg.mesh.coords);
  CHECK(back.mesh.triangles == pkg.mesh.triangles);
  CHECK(back.mesh.node_type == pkg.mesh.node_type);
  CHECK(back.dp.values == pkg.dp.values);
  CHECK(back.meta.steps == 4);
  CHECK(back.meta.reynolds == 1234.5);
  CHECK(read_datapoint_mesh(dir).coords == pkg.mesh.coords);

  // Corruption of a payload byte flips the completeness check.
  {
    std::fstream f(dir / "fields.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(300);
    f.put('\x7f');
  }
  CHECK_FALSE(datapoint_complete(dir));
  CHECK_FALSE(datapoint_complete(root / "nowhere"));

  const auto with = write_datapoint(pkg, scratch("npz"), WriteOptions{true});
  CHECK(fs::exists(with / "sim.npz"));
  CHECK(fs::exists(with / "triangles.npy"));
}

TEST_CASE("package validation") {
  auto pkg = small_package(2);
  CHECK_NOTHROW(validate_package(pkg));
  auto bad = pkg;
  bad.fields.data[5] = std::nan("");
  CHECK_THROWS_AS(validate_package(bad), FormatError);
  bad = pkg;
  bad.fields = FieldTensor::zeros(TensorKind::Fields, 3, pkg.mesh.num_nodes() + 1, 0);
  CHECK_THROWS_AS(validate_package(bad), FormatError);
}

TEST_CASE("splits") {
  const auto big = split_dataset(1200, 42);
  CHECK(big.train.size() == 960);
  CHECK(big.val.size() == 120);
  CHECK(big.test.size() == 120);
  std::vector<int> all(1200);
  for (int i = 0; i < 1200; ++i) all[static_cast<std::size_t>(i)] = i;
  check_partition(big, all);

  const auto ten = split_dataset(10, 1);
  CHECK(ten.train.size() == 8);
  CHECK(ten.val.size() == 1);
  CHECK(ten.test.size() == 1);

  const auto again = split_dataset(1200, 42);
  CHECK(again.train == big.train);
  CHECK(again.test == big.test);
  CHECK(split_dataset(1200, 43).test != big.test);
  CHECK_THROWS_AS(split_dataset(9, 1), TooSmallError);

  for (int n = 10; n < 60; ++n) {
    const auto s = split_dataset(n, static_cast<std::uint64_t>(n));
    CHECK(s.val.size() == static_cast<std::size_t>(n / 10));
    CHECK(s.test.size() == static_cast<std::size_t>(n / 10));
    CHECK(s.train.size() + s.val.size() + s.test.size() == static_cast<std::size_t>(n));
  }

  const std::vector<int> ids = {3, 5, 9, 11, 12, 40, 41, 50};
  const auto small = split_ids(ids, 7);
  CHECK(small.val.size() == 1);
  CHECK(small.test.size() == 1);
  check_partition(small, ids);
  const std::vector<int> one = {4};
  CHECK(split_ids(one, 1).train == one);
}

TEST_CASE("statistics") {
  auto c = FieldTensor::zeros(TensorKind::Fields, 3, 5, 0);
  for (std::size_t k = 0; k < 15; ++k) {
    c.data[4 * k] = 2.0;
    c.data[4 * k + 1] = 2.0;
    c.data[4 * k + 2] = -4.0;
    c.data[4 * k + 3] = 310.0;
  }
  const auto s = compute_stats(std::span(&c, 1));
  CHECK(s.velocity.mean == 2.0);
  CHECK(s.velocity.std == 0.0);
  CHECK(s.pressure.mean == -4.0);
  CHECK(s.temperature.mean == 310.0);
  CHECK(s.temperature.std == 0.0);
  CHECK(s.samples == 15);

  // {0, 2} equally weighted: mean 1, sigma 1; velocity pools u and v.
  std::vector<FieldTensor> two(2, FieldTensor::zeros(TensorKind::Fields, 1, 2, 0));
  two[0].at(0, 0, 0) = 0;
  two[0].at(0, 0, 1) = 2;
  two[0].at(0, 1, 0) = 2;
  two[0].at(0, 1, 1) = 0;
  two[1] = two[0];
  for (auto& t : two) {
    t.at(0, 0, 2) = 0;
    t.at(0, 1, 2) = 2;
    t.at(0, 0, 3) = 0;
    t.at(0, 1, 3) = 2;
  }
  const auto p = compute_stats(two);
  CHECK(p.velocity.mean == doctest::Approx(1.0));
  CHECK(p.velocity.std == doctest::Approx(1.0));
  CHECK(p.pressure.mean == doctest::Approx(1.0));
  CHECK(p.pressure.std == doctest::Approx(1.0));
  CHECK(p.temperature.std == doctest::Approx(1.0));

  // Large offset: compensated two-pass keeps the spread.
  auto off = FieldTensor::zeros(TensorKind::Fields, 1, 4, 0);
  for (std::size_t i = 0; i < 4; ++i) off.at(0, i, 3) = 1e9 + static_cast<double>(i % 2) * 2.0;
  CHECK(compute_stats(std::span(&off, 1)).temperature.std == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("manifest round trip") {
  const auto root = scratch("manifest");
  Manifest m;
  m.variant = DatasetVariant::Rotated;
  m.requested = 12;
  m.seed = 77;
  m.split_seed = derive_seed(77, 0x5eed);
  m.datapoints = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11};
  m.split = split_ids(m.datapoints, m.split_seed);
  m.stats.velocity = {1.5, 2.5};
  m.stats.pressure = {-3.0, 40.0};
  m.stats.temperature = {320.0, 12.0};
  m.stats.samples = 99;
  m.failed = {{10, "pressure solve did not converge"}};
  m.config = {{"dt", "0.01"}, {"steps", "60"}};
  const auto path = manifest_path(root, m.variant);
  CHECK(path == variant_dir(root, m.variant) / "manifest.json");
  write_manifest(path, m);
  const auto r = read_manifest(path);
  CHECK(r.variant == m.variant);
  CHECK(r.requested == 12);
  CHECK(r.seed == 77);
  CHECK(r.split_seed == m.split_seed);
  CHECK(r.datapoints == m.datapoints);
  CHECK(r.split.train == m.split.train);
  CHECK(r.split.test == m.split.test);
  CHECK(r.stats.pressure.std == 40.0);
  CHECK(r.stats.samples == 99);
  REQUIRE(r.failed.size() == 1);
  CHECK(r.failed[0].index == 10);
  CHECK(r.config == m.config);

  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("reference_full_stats") != std::string::npos);
  CHECK(text.find("\"computed_over\": \"train\"") != std::string::npos);
}
