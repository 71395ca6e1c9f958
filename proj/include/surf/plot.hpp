#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surf/mesh.hpp"
#include "surf/tensor_io.hpp"

namespace surf {

enum class PlotField { VelocityMagnitude, Pressure, Temperature };

PlotField parse_plot_field(const std::string& name);
std::string plot_field_name(PlotField f);

struct SnapshotOptions {
  int width = 800;  // px; height follows the mesh aspect ratio
  std::optional<std::pair<double, double>> range;  // color limits, default min/max of the snapshot
};

// Per-pixel linear interpolation of one stored state onto an RGB PNG.
// Throws HorizonError when `step` is not in the tensor.
void write_snapshot_png(const std::filesystem::path& path, const Mesh& mesh, const FieldTensor& fields,
                        int step, PlotField field, const SnapshotOptions& opt = {});

// RGB pixel buffer behind write_snapshot_png, row-major from the top.
struct Image {
  int width = 0, height = 0;
  std::vector<unsigned char> rgb;
};
Image render_snapshot(const Mesh& mesh, const FieldTensor& fields, int step, PlotField field,
                      const SnapshotOptions& opt = {});
void write_png(const std::filesystem::path& path, const Image& img);

// Horizontal bar chart.
void write_bar_svg(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::pair<std::string, double>>& bars);

}  // namespace surf
