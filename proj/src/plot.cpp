#include "surf/plot.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "surf/errors.hpp"

namespace surf {

namespace {

// Coarse viridis-like ramp, interpolated linearly.
constexpr std::array<std::array<double, 3>, 5> kRamp{{
    {68, 1, 84},
    {59, 82, 139},
    {33, 145, 140},
    {94, 201, 98},
    {253, 231, 37},
}};

std::array<unsigned char, 3> ramp(double s) {
  s = std::clamp(s, 0.0, 1.0) * (kRamp.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(s), kRamp.size() - 2);
  const double f = s - static_cast<double>(i);
  std::array<unsigned char, 3> c{};
  for (std::size_t k = 0; k < 3; ++k) {
    c[k] = static_cast<unsigned char>(std::lround(kRamp[i][k] + f * (kRamp[i + 1][k] - kRamp[i][k])));
  }
  return c;
}

double node_value(const FieldTensor& f, std::size_t step, std::size_t i, PlotField field) {
  switch (field) {
    case PlotField::VelocityMagnitude: return std::hypot(f.at(step, i, 0), f.at(step, i, 1));
    case PlotField::Pressure: return f.at(step, i, 2);
    case PlotField::Temperature: return f.at(step, i, 3);
  }
  return 0.0;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PlotField parse_plot_field(const std::string& name) {
  if (name == "velocity" || name == "v") return PlotField::VelocityMagnitude;
  if (name == "pressure" || name == "p") return PlotField::Pressure;
  if (name == "temperature" || name == "T" || name == "t") return PlotField::Temperature;
  throw ConfigError("unknown field '" + name + "' (velocity, pressure, temperature)");
}

std::string plot_field_name(PlotField f) {
  switch (f) {
    case PlotField::VelocityMagnitude: return "velocity";
    case PlotField::Pressure: return "pressure";
    case PlotField::Temperature: return "temperature";
  }
  return "?";
}

Image render_snapshot(const Mesh& mesh, const FieldTensor& fields, int step, PlotField field,
                      const SnapshotOptions& opt) {
  const int local = step - fields.first_step;
  if (local < 0 || local >= static_cast<int>(fields.steps)) {
    throw HorizonError("timestep " + std::to_string(step) + " not in record (steps " +
                       std::to_string(fields.first_step) + ".." + std::to_string(fields.last_step()) + ")");
  }
  if (fields.nodes != mesh.num_nodes()) throw AlignmentError("field and mesh node counts differ");
  const auto s = static_cast<std::size_t>(local);
  std::vector<double> values(mesh.num_nodes());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = node_value(fields, s, i, field);

  double lo = 0.0, hi = 0.0;
  if (opt.range) {
    std::tie(lo, hi) = *opt.range;
  } else if (!values.empty()) {
    const auto [a, b] = std::minmax_element(values.begin(), values.end());
    lo = *a;
    hi = *b;
  }

  Vec2 bmin{1e300, 1e300}, bmax{-1e300, -1e300};
  for (const auto& p : mesh.coords) {
    bmin = {std::min(bmin.x, p.x), std::min(bmin.y, p.y)};
    bmax = {std::max(bmax.x, p.x), std::max(bmax.y, p.y)};
  }
  Image img;
  img.width = std::max(16, opt.width);
  const double span_x = std::max(bmax.x - bmin.x, 1e-12), span_y = std::max(bmax.y - bmin.y, 1e-12);
  const double scale = (img.width - 1) / span_x;
  // Pixel centers 0..height-1 all fall inside the bounding box.
  img.height = std::max(1, static_cast<int>(std::floor(span_y * scale + 1e-9)) + 1);
  img.rgb.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3, 255);

  const auto to_px = [&](Vec2 p) { return Vec2{(p.x - bmin.x) * scale, (bmax.y - p.y) * scale}; };
  for (const auto& tri : mesh.triangles) {
    const Vec2 a = to_px(mesh.coords[static_cast<std::size_t>(tri[0])]);
    const Vec2 b = to_px(mesh.coords[static_cast<std::size_t>(tri[1])]);
    const Vec2 c = to_px(mesh.coords[static_cast<std::size_t>(tri[2])]);
    const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (det == 0.0) continue;
    const double va = values[static_cast<std::size_t>(tri[0])], vb = values[static_cast<std::size_t>(tri[1])],
                 vc = values[static_cast<std::size_t>(tri[2])];
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x, py = y;
        const double wa = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) / det;
        const double wb = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) / det;
        const double wc = 1.0 - wa - wb;
        const double eps = -1e-9;
        if (wa < eps || wb < eps || wc < eps) continue;
        const double v = wa * va + wb * vb + wc * vc;
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        const auto col = ramp(t);
        auto* px_out = &img.rgb[(static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) +
                                 static_cast<std::size_t>(x)) * 3];
        px_out[0] = col[0];
        px_out[1] = col[1];
        px_out[2] = col[2];
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    auto* row = const_cast<png_bytep>(&img.rgb[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) * 3]);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void write_snapshot_png(const std::filesystem::path& path, const Mesh& mesh, const FieldTensor& fields, int step,
                        PlotField field, const SnapshotOptions& opt) {
  write_png(path, render_snapshot(mesh, fields, step, field, opt));
}

void write_bar_svg(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::pair<std::string, double>>& bars) {
  const int bar_h = 22, left = 220, plot_w = 420, top = 40;
  const int height = top + static_cast<int>(bars.size()) * (bar_h + 6) + 20;
  double vmax = 0.0;
  for (const auto& [label, v] : bars) {
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  }
  if (vmax <= 0) vmax = 1.0;
  std::ostringstream svg;
  svg << std::setprecision(4);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + 90 << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"10\" y=\"22\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  int y = top;
  for (const auto& [label, v] : bars) {
    const double w = std::isfinite(v) ? std::max(0.0, v) / vmax * plot_w : 0.0;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 15 << "\" text-anchor=\"end\">" << xml_escape(label)
        << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << bar_h
        << "\" fill=\"#3b528b\"/>\n";
    svg << "<text x=\"" << left + w + 6 << "\" y=\"" << y + 15 << "\">" << v << "</text>\n";
    y += bar_h + 6;
  }
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg.str();
}

}  // namespace surf
