#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/geometry.hpp"
#include "surf/plot.hpp"

using namespace surf;

namespace {

Mesh square_mesh() {
  DomainOutline o;
  o.outer = {Segment::line({0, 0}, {1000, 0}, BoundaryTag::Wall), Segment::line({1000, 0}, {1000, 500}, BoundaryTag::Outlet),
             Segment::line({1000, 500}, {0, 500}, BoundaryTag::Wall), Segment::line({0, 500}, {0, 0}, BoundaryTag::Inlet1)};
  return triangulate(o, 0.1);
}

std::set<std::array<unsigned char, 3>> colors(const Image& img) {
  std::set<std::array<unsigned char, 3>> out;
  for (std::size_t k = 0; k + 2 < img.rgb.size(); k += 3) out.insert({img.rgb[k], img.rgb[k + 1], img.rgb[k + 2]});
  return out;
}

}  // namespace

TEST_CASE("uniform field renders one color") {
  const Mesh m = square_mesh();
  auto f = FieldTensor::zeros(TensorKind::Fields, 3, m.num_nodes(), 0);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) f.at(0, i, 3) = 293.15;
  SnapshotOptions opt;
  opt.width = 120;
  const auto img = render_snapshot(m, f, 0, PlotField::Temperature, opt);
  CHECK(img.width == 120);
  CHECK(img.height == 60);  // floor(0.5 * 119) + 1
  const auto c = colors(img);
  // Every pixel lies in the domain, so only the mid ramp color appears.
  CHECK(c.size() == 1);
  CHECK(c.count({33, 145, 140}) == 1);
}

TEST_CASE("gradient spans the ramp and fixed ranges clamp") {
  const Mesh m = square_mesh();
  auto f = FieldTensor::zeros(TensorKind::Fields, 1, m.num_nodes(), 0);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) f.at(0, i, 2) = m.coords[i].x;
  const auto img = render_snapshot(m, f, 0, PlotField::Pressure, {});
  const auto c = colors(img);
  CHECK(c.count({68, 1, 84}) == 1);
  CHECK(c.count({253, 231, 37}) == 1);
  SnapshotOptions clamp;
  clamp.range = std::pair{5.0, 6.0};
  CHECK(colors(render_snapshot(m, f, 0, PlotField::Pressure, clamp)).size() == 1);
}

TEST_CASE("missing step and field names") {
  const Mesh m = square_mesh();
  const auto f = FieldTensor::zeros(TensorKind::Fields, 3, m.num_nodes(), 0);
  CHECK_THROWS_AS(render_snapshot(m, f, 3, PlotField::Temperature), HorizonError);
  CHECK_THROWS_AS(render_snapshot(m, f, -1, PlotField::Temperature), HorizonError);
  const auto short_f = FieldTensor::zeros(TensorKind::Fields, 3, 4, 0);
  CHECK_THROWS_AS(render_snapshot(m, short_f, 0, PlotField::Temperature), AlignmentError);
  for (auto p : {PlotField::VelocityMagnitude, PlotField::Pressure, PlotField::Temperature}) {
    CHECK(parse_plot_field(plot_field_name(p)) == p);
  }
  CHECK_THROWS_AS(parse_plot_field("vorticity"), ConfigError);
}

TEST_CASE("png and svg files") {
  const Mesh m = square_mesh();
  const auto f = FieldTensor::zeros(TensorKind::Fields, 21, m.num_nodes(), 0);
  const auto dir = std::filesystem::temp_directory_path() / "surf_plot_test";
  std::filesystem::create_directories(dir);
  for (int t : {0, 5, 10, 20}) {
    const auto p = dir / ("snap_" + std::to_string(t) + ".png");
    write_snapshot_png(p, m, f, t, PlotField::VelocityMagnitude);
    std::ifstream in(p, std::ios::binary);
    char sig[8] = {};
    in.read(sig, 8);
    CHECK(std::string(sig + 1, 3) == "PNG");
  }
  const auto svg = dir / "bars.svg";
  write_bar_svg(svg, "RMSE <T>", {{"persistence", 2.0}, {"extrapolation", 1.0}});
  std::ifstream in(svg);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("<svg") == 0);
  CHECK(ss.str().find("RMSE &lt;T&gt;") != std::string::npos);
  CHECK(ss.str().find("extrapolation") != std::string::npos);
  std::filesystem::remove_all(dir);
}
