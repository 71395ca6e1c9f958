#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/param_space.hpp"

using namespace surf;

namespace {

const ParamRange& find(const std::vector<ParamRange>& rs, const std::string& name) {
  for (const auto& r : rs) {
    if (r.name == name) return r;
  }
  FAIL("missing parameter " << name);
  throw 0;
}

}  // namespace

TEST_CASE("published range rows") {
  const auto base = variant_ranges(DatasetVariant::Base);
  CHECK(find(base, "Object1Radius").lo == 45);
  CHECK(find(base, "Object1Radius").hi == 75);
  CHECK(find(base, "DomainOrientation").degenerate());
  CHECK(find(base, "DomainOrientation").lo == 0);
  CHECK(find(base, "DomainLength").lo == 1600);
  CHECK(find(base, "DomainHeight").lo == 400);

  const auto range = variant_ranges(DatasetVariant::Range);
  CHECK(find(range, "Inlet1v").lo == 0.5);
  CHECK(find(range, "Inlet1v").hi == 20);

  CHECK(find(variant_ranges(DatasetVariant::Topology), "Object1Type").labels.size() == 6);
  CHECK(find(variant_ranges(DatasetVariant::Full), "Object1Type").labels.size() == 11);
  CHECK(find(variant_ranges(DatasetVariant::Full), "DomainElbowRadius").lo == 200);
}

TEST_CASE("every parameter appears once per variant; mesh mirrors full") {
  for (auto v : kAllVariants) {
    std::set<std::string> names;
    for (const auto& r : variant_ranges(v)) {
      CHECK_MESSAGE(names.insert(r.name).second, r.name);
      if (r.kind == ParamKind::Continuous) CHECK(r.lo <= r.hi);
    }
  }
  const auto full = variant_ranges(DatasetVariant::Full), mesh = variant_ranges(DatasetVariant::Mesh);
  REQUIRE(full.size() == mesh.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(full[i].name == mesh[i].name);
    CHECK(full[i].lo == mesh[i].lo);
    CHECK(full[i].hi == mesh[i].hi);
    CHECK(full[i].labels == mesh[i].labels);
  }
  CHECK(mesh_resolution_factor(DatasetVariant::Mesh) == 2.0);
  CHECK(mesh_resolution_factor(DatasetVariant::Full) == 1.0);
}

TEST_CASE("lhs: single range [0, 8], n = 4 hits each quarter once") {
  const ParamRange r{"x", 0, 8, ParamKind::Continuous, {}, "-"};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = lhs_sample(std::span(&r, 1), 4, seed);
    std::vector<int> hits(4, 0);
    for (const auto& p : pts) {
      const double x = p.real("x");
      REQUIRE(x >= 0);
      REQUIRE(x < 8);
      ++hits[static_cast<std::size_t>(x / 2)];
    }
    CHECK(hits == std::vector<int>{1, 1, 1, 1});
  }
}

TEST_CASE("lhs stratification property over all variants") {
  for (auto v : kAllVariants) {
    const auto ranges = variant_ranges(v);
    for (int n : {2, 4, 16, 64}) {
      const auto pts = lhs_sample(ranges, n, 1234 + static_cast<std::uint64_t>(n), v);
      REQUIRE(pts.size() == static_cast<std::size_t>(n));
      for (const auto& r : ranges) {
        if (r.kind == ParamKind::Categorical) {
          std::map<std::string, int> counts;
          for (const auto& p : pts) ++counts[p.label(r.name)];
          const double ideal = static_cast<double>(n) / static_cast<double>(r.labels.size());
          for (const auto& l : r.labels) CHECK(std::abs(counts[l] - ideal) <= 1.0);
          continue;
        }
        if (r.degenerate()) {
          for (const auto& p : pts) CHECK(p.real(r.name) == r.lo);
          continue;
        }
        std::vector<int> hits(static_cast<std::size_t>(n), 0);
        for (const auto& p : pts) {
          const double x = p.real(r.name);
          CHECK(x >= r.lo);
          CHECK(x <= r.hi);
          ++hits[static_cast<std::size_t>(stratum_of(x, r.lo, r.hi, n))];
        }
        CHECK_MESSAGE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }),
                      variant_name(v) << " " << r.name << " n=" << n);
      }
    }
  }
}

TEST_CASE("lhs determinism and errors") {
  const auto ranges = variant_ranges(DatasetVariant::Full);
  const auto a = lhs_sample(ranges, 16, 99, DatasetVariant::Full);
  const auto b = lhs_sample(ranges, 16, 99, DatasetVariant::Full);
  std::ostringstream sa, sb;
  write_design_points(sa, a);
  write_design_points(sb, b);
  CHECK(sa.str() == sb.str());
  const auto c = lhs_sample(ranges, 16, 100, DatasetVariant::Full);
  std::ostringstream sc;
  write_design_points(sc, c);
  CHECK(sa.str() != sc.str());
  CHECK_THROWS_AS(lhs_sample(ranges, 0, 1), EmptyRequestError);

  const auto one = lhs_sample(ranges, 1, 5, DatasetVariant::Full);
  REQUIRE(one.size() == 1);
  for (const auto& r : ranges) {
    if (r.kind == ParamKind::Continuous) {
      CHECK(one[0].real(r.name) >= r.lo);
      CHECK(one[0].real(r.name) <= r.hi);
    }
  }
}

TEST_CASE("design point json round trip is exact") {
  const auto pts = sample_design_points(DatasetVariant::Full, 8, 3);
  std::ostringstream out;
  write_design_points(out, pts);
  std::istringstream in(out.str());
  const auto back = read_design_points(in);
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].values == pts[i].values);
    CHECK(back[i].rng_seed == pts[i].rng_seed);
    CHECK(back[i].index == pts[i].index);
    CHECK(back[i].variant == pts[i].variant);
  }
  CHECK_THROWS_AS(design_point_from_json("{\"variant\": 3}"), FormatError);
}

TEST_CASE("validation examples") {
  DesignPoint dp;
  for (const auto& r : variant_ranges(DatasetVariant::Base)) {
    if (r.kind == ParamKind::Categorical) dp.set(r.name, r.labels.front());
    else dp.set(r.name, 0.5 * (r.lo + r.hi));
  }
  dp.set("Object1Radius", 75.0);
  dp.set("Object1yFactor", 0.5);
  dp.set("Object1xPos", 300.0);
  CHECK(validate_design_point(dp).empty());
  // Opposite walls: equal x positions still fine.
  dp.set("Inlet2xPos", 300.0);
  dp.set("Inlet3xPos", 300.0);
  CHECK(validate_design_point(dp).empty());

  auto two = dp;
  two.variant = DatasetVariant::Topology;
  two.set("Object2Type", std::string("cylinder"));
  two.set("Object2Radius", 60.0);
  two.set("Object2xPos", 300.0);
  two.set("Object2yFactor", 0.5);
  two.set("Object2Angle", 0.0);
  two.set("Object2T", 500.0);
  const auto v = validate_design_point(two);
  CHECK(std::find(v.begin(), v.end(), std::string("object gap below 30 mm")) != v.end());
}

TEST_CASE("sampled design points are feasible and in range") {
  for (auto v : kAllVariants) {
    const auto ranges = variant_ranges(v);
    const auto pts = sample_design_points(v, 16, 11);
    REQUIRE(pts.size() == 16);
    for (const auto& dp : pts) {
      CHECK(dp.variant == v);
      CHECK(validate_design_point(dp).empty());
      for (const auto& r : ranges) {
        REQUIRE(dp.has(r.name));
        if (r.kind == ParamKind::Continuous) {
          CHECK(dp.real(r.name) >= r.lo);
          CHECK(dp.real(r.name) <= r.hi);
        } else {
          CHECK(std::find(r.labels.begin(), r.labels.end(), dp.label(r.name)) != r.labels.end());
        }
      }
    }
  }
}

TEST_CASE("shipped range file matches the built-in tables") {
  const std::filesystem::path file = std::filesystem::path(SURF_SOURCE_DIR) / "config" / "variants.cfg";
  for (auto v : kAllVariants) {
    const auto builtin = variant_ranges(v);
    const auto loaded = load_variant_ranges(file, v);
    REQUIRE(loaded.size() == builtin.size());
    for (std::size_t i = 0; i < builtin.size(); ++i) {
      CHECK(loaded[i].name == builtin[i].name);
      CHECK(loaded[i].lo == builtin[i].lo);
      CHECK(loaded[i].hi == builtin[i].hi);
      CHECK(loaded[i].kind == builtin[i].kind);
      CHECK(loaded[i].labels == builtin[i].labels);
    }
  }
}

TEST_CASE("rng helpers") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  auto p = r.permutation(50);
  std::sort(p.begin(), p.end());
  for (int i = 0; i < 50; ++i) CHECK(p[static_cast<std::size_t>(i)] == i);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
