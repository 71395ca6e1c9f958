#include "surf/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "surf/config.hpp"
#include "surf/errors.hpp"
#include "surf/geometry.hpp"

namespace surf {

namespace {

ParamRange cont(std::string name, double lo, double hi, std::string unit) {
  return ParamRange{std::move(name), lo, hi, ParamKind::Continuous, {}, std::move(unit)};
}

ParamRange fixed(std::string name, double v, std::string unit) {
  return cont(std::move(name), v, v, std::move(unit));
}

ParamRange object_types(std::string name, int airfoils) {
  ParamRange r{std::move(name), 0.0, 0.0, ParamKind::Categorical, {"cylinder"}, "type"};
  for (int k = 0; k < airfoils; ++k) r.labels.push_back("airfoil" + std::to_string(k));
  return r;
}

void set_range(std::vector<ParamRange>& ranges, const ParamRange& r) {
  for (auto& existing : ranges) {
    if (existing.name == r.name) {
      existing = r;
      return;
    }
  }
  ranges.push_back(r);
}

std::vector<ParamRange> base_ranges() {
  return {
      fixed("DomainLength", 1600, "mm"),
      fixed("DomainHeight", 400, "mm"),
      fixed("DomainElbowAngle", 0, "deg"),
      fixed("DomainElbowRadius", 0, "mm"),
      fixed("DomainOrientation", 0, "deg"),
      cont("Inlet2xPos", 150, 450, "mm"),
      cont("Inlet2Angle", 20, 45, "deg"),
      cont("Inlet3xPos", 150, 450, "mm"),
      cont("Inlet3Angle", 20, 45, "deg"),
      object_types("Object1Type", 0),
      cont("Object1xPos", 150, 450, "mm"),
      cont("Object1yFactor", 0, 1, "-"),
      cont("Object1Radius", 45, 75, "mm"),
      cont("Inlet1v", 1, 10, "m/s"),
      fixed("Inlet1T", 300, "K"),
      cont("Inlet2vMean", 1, 10, "m/s"),
      fixed("Inlet2vAmplitude", 0, "m/s"),
      fixed("Inlet2vFrequency", 0, "Hz"),
      cont("Inlet2T", 290, 310, "K"),
      cont("Inlet3vMean", 1, 10, "m/s"),
      fixed("Inlet3vAmplitude", 0, "m/s"),
      fixed("Inlet3vFrequency", 0, "Hz"),
      cont("Inlet3T", 290, 310, "K"),
      cont("Object1T", 450, 800, "K"),
      cont("ThermalConductivity", 0.0258, 0.603, "W/(m*K)"),
      cont("HeatCapacity", 1.02, 3223, "J/(kg*K)"),
  };
}

void add_second_object(std::vector<ParamRange>& r, int airfoils, double angle, double t_lo,
                       double t_hi) {
  set_range(r, object_types("Object2Type", airfoils));
  set_range(r, cont("Object2xPos", 150, 450, "mm"));
  set_range(r, cont("Object2yFactor", 0, 1, "-"));
  set_range(r, cont("Object2Angle", -angle, angle, "deg"));
  set_range(r, cont("Object2Radius", 45, 75, "mm"));
  set_range(r, cont("Object2T", t_lo, t_hi, "K"));
}

void add_dynamics(std::vector<ParamRange>& r) {
  set_range(r, cont("Inlet2vAmplitude", 0, 10, "m/s"));
  set_range(r, cont("Inlet2vFrequency", 1, 5, "Hz"));
  set_range(r, cont("Inlet3vAmplitude", 0, 10, "m/s"));
  set_range(r, cont("Inlet3vFrequency", 1, 5, "Hz"));
}

void add_wide_ranges(std::vector<ParamRange>& r) {
  set_range(r, cont("Object1Radius", 30, 90, "mm"));
  set_range(r, cont("Inlet1v", 0.5, 20, "m/s"));
  set_range(r, cont("Object1T", 375, 1300, "K"));
  set_range(r, cont("ThermalConductivity", 0.013, 1.2, "W/(m*K)"));
  set_range(r, cont("HeatCapacity", 0.5, 6446, "J/(kg*K)"));
}

void add_elbow(std::vector<ParamRange>& r) {
  set_range(r, cont("DomainElbowAngle", 0, 90, "deg"));
  set_range(r, fixed("DomainElbowRadius", 200, "mm"));
  set_range(r, cont("Inlet2Angle", 20, 90, "deg"));
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(15) << v;
  return s.str();
}

}  // namespace

std::string_view variant_name(DatasetVariant v) {
  switch (v) {
    case DatasetVariant::Base: return "base";
    case DatasetVariant::Rotated: return "rotated";
    case DatasetVariant::Range: return "range";
    case DatasetVariant::Topology: return "topology";
    case DatasetVariant::Dynamic: return "dynamic";
    case DatasetVariant::Full: return "full";
    case DatasetVariant::Mesh: return "mesh";
  }
  return "unknown";
}

DatasetVariant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "topo") lower = "topology";
  for (auto v : kAllVariants) {
    if (variant_name(v) == lower) return v;
  }
  throw ConfigError("unknown dataset variant '" + std::string(name) + "'");
}

double mesh_resolution_factor(DatasetVariant v) { return v == DatasetVariant::Mesh ? 2.0 : 1.0; }

double DesignPoint::real(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("design point lacks parameter " + name);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  throw ConfigError("parameter " + name + " is categorical");
}

double DesignPoint::real_or(const std::string& name, double fallback) const {
  return has(name) ? real(name) : fallback;
}

const std::string& DesignPoint::label(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("design point lacks parameter " + name);
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("parameter " + name + " is continuous");
}

std::vector<ParamRange> variant_ranges(DatasetVariant variant) {
  auto r = base_ranges();
  switch (variant) {
    case DatasetVariant::Base:
      break;
    case DatasetVariant::Rotated:
      set_range(r, cont("DomainOrientation", 0, 360, "deg"));
      break;
    case DatasetVariant::Range:
      add_wide_ranges(r);
      break;
    case DatasetVariant::Topology:
      add_elbow(r);
      set_range(r, object_types("Object1Type", 5));
      set_range(r, cont("Object1Angle", -15, 15, "deg"));
      add_second_object(r, 5, 15, 450, 800);
      break;
    case DatasetVariant::Dynamic:
      add_dynamics(r);
      break;
    case DatasetVariant::Full:
    case DatasetVariant::Mesh:
      add_elbow(r);
      set_range(r, cont("DomainOrientation", 0, 360, "deg"));
      set_range(r, object_types("Object1Type", 10));
      set_range(r, cont("Object1Angle", -30, 30, "deg"));
      add_wide_ranges(r);
      add_dynamics(r);
      add_second_object(r, 10, 30, 375, 1300);
      break;
  }
  return r;
}

void write_variant_config(std::ostream& out) {
  out << "# Generation parameter ranges, one section per dataset variant.\n"
      << "# Continuous: `name = lo hi` (a single value means fixed).\n"
      << "# Categorical: `name = label label ...`.\n";
  for (auto v : kAllVariants) {
    out << "\n[" << variant_name(v) << "]\n";
    for (const auto& r : variant_ranges(v)) {
      std::string value;
      if (r.kind == ParamKind::Categorical) {
        for (std::size_t i = 0; i < r.labels.size(); ++i) value += (i ? " " : "") + r.labels[i];
      } else if (r.degenerate()) {
        value = format_number(r.lo);
      } else {
        value = format_number(r.lo) + " " + format_number(r.hi);
      }
      out << std::left << std::setw(20) << r.name << " = " << std::setw(40) << value << " # "
          << r.unit << "\n";
    }
  }
}

std::vector<ParamRange> load_variant_ranges(const std::filesystem::path& path,
                                            DatasetVariant variant) {
  const auto kv = load_key_value(path);
  const std::string section(variant_name(variant));
  auto it = kv.sections.find(section);
  if (it == kv.sections.end()) throw ConfigError(path.string() + ": no [" + section + "] section");
  const auto builtin = variant_ranges(variant);
  auto unit_of = [&](const std::string& name) {
    for (const auto& r : builtin) {
      if (r.name == name) return r.unit;
    }
    return std::string{};
  };
  std::vector<ParamRange> out;
  for (const auto& [name, raw] : it->second) {
    const auto tokens = split_ws(raw);
    if (tokens.empty()) throw ConfigError(path.string() + ": empty value for " + name);
    char* end = nullptr;
    std::strtod(tokens[0].c_str(), &end);
    const bool numeric = end && *end == '\0';
    if (!numeric) {
      out.push_back(ParamRange{name, 0.0, 0.0, ParamKind::Categorical, tokens, "type"});
      continue;
    }
    if (tokens.size() > 2) throw ConfigError(path.string() + ": too many bounds for " + name);
    const double lo = parse_double(tokens[0], name);
    const double hi = tokens.size() == 2 ? parse_double(tokens[1], name) : lo;
    if (lo > hi) throw ConfigError(path.string() + ": lo > hi for " + name);
    out.push_back(cont(name, lo, hi, unit_of(name)));
  }
  // Keep the built-in ordering so sampling streams line up with the defaults.
  std::stable_sort(out.begin(), out.end(), [&](const ParamRange& a, const ParamRange& b) {
    auto rank = [&](const std::string& n) {
      for (std::size_t i = 0; i < builtin.size(); ++i) {
        if (builtin[i].name == n) return i;
      }
      return builtin.size();
    };
    return rank(a.name) < rank(b.name);
  });
  return out;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int stratum_of(double value, double lo, double hi, int n) {
  if (hi <= lo) return 0;
  const int k = static_cast<int>(std::floor((value - lo) / (hi - lo) * n));
  return std::clamp(k, 0, n - 1);
}

namespace {

double draw_in_stratum(Rng& rng, double lo, double hi, int n, int k) {
  const double width = hi - lo;
  double v = lo + width * (k + rng.uniform01()) / n;
  // Rounding can push a draw from the top of stratum k into k + 1.
  while (stratum_of(v, lo, hi, n) > k) v = std::nextafter(v, lo);
  while (stratum_of(v, lo, hi, n) < k) v = std::nextafter(v, hi);
  return v;
}

}  // namespace

std::vector<DesignPoint> lhs_sample(std::span<const ParamRange> ranges, int n, std::uint64_t seed,
                                    DatasetVariant variant) {
  if (n <= 0) throw EmptyRequestError("Latin hypercube sample needs n >= 1");
  std::vector<DesignPoint> points(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& dp = points[static_cast<std::size_t>(i)];
    dp.variant = variant;
    dp.index = i;
    dp.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
  }
  Rng rng(seed);
  for (const auto& r : ranges) {
    if (r.kind == ParamKind::Categorical) {
      if (r.labels.empty()) throw ConfigError("categorical parameter " + r.name + " has no labels");
      const auto perm = rng.permutation(n);
      for (int i = 0; i < n; ++i) {
        const auto slot = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
        points[static_cast<std::size_t>(i)].set(r.name, r.labels[slot % r.labels.size()]);
      }
    } else if (r.degenerate()) {
      for (auto& dp : points) dp.set(r.name, r.lo);
    } else {
      const auto perm = rng.permutation(n);
      for (int i = 0; i < n; ++i) {
        const double v = draw_in_stratum(rng, r.lo, r.hi, n, perm[static_cast<std::size_t>(i)]);
        points[static_cast<std::size_t>(i)].set(r.name, v);
      }
    }
  }
  return points;
}

std::vector<std::string> validate_design_point(const DesignPoint& dp) {
  std::vector<std::string> violations;
  const double height = dp.real_or("DomainHeight", 400.0);
  const double length = dp.real_or("DomainLength", 1600.0);
  const double elbow = dp.real_or("DomainElbowAngle", 0.0);
  const double straight_end = elbow > 0.0 ? kElbowStart : length;

  std::vector<std::vector<Vec2>> shapes;
  std::vector<ShapeSpec> specs;
  std::vector<Vec2> centers;
  for (int i = 1; i <= 2; ++i) {
    std::optional<ShapeSpec> shape;
    try {
      shape = object_shape(dp, i);
    } catch (const Error& e) {
      violations.push_back(e.what());
      continue;
    }
    if (!shape) continue;
    const std::string prefix = "Object" + std::to_string(i);
    const double extent = shape_extent(*shape);
    if (2.0 * extent + 2.0 * kMinObjectDistance >= height) {
      violations.push_back("object " + std::to_string(i) + " does not fit vertically");
      continue;
    }
    const double x = dp.real(prefix + "xPos");
    const double y = object_y_position(dp.real(prefix + "yFactor"), height, extent);
    auto poly = shape_polyline(*shape);
    for (auto& p : poly) p += Vec2{x, y};
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : poly) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    constexpr double tol = 1e-9;
    if (ymin < kMinObjectDistance - tol || height - ymax < kMinObjectDistance - tol ||
        xmin < kMinObjectDistance - tol || straight_end - xmax < kMinObjectDistance - tol) {
      violations.push_back("object " + std::to_string(i) + " wall clearance below 30 mm");
    }
    shapes.push_back(std::move(poly));
    specs.push_back(*shape);
    centers.push_back({x, y});
  }
  if (shapes.size() == 2) {
    double gap = 0.0;
    if (specs[0].kind == ShapeSpec::Kind::Cylinder && specs[1].kind == ShapeSpec::Kind::Cylinder) {
      gap = dist(centers[0], centers[1]) - specs[0].radius - specs[1].radius;
    } else {
      const bool nested = point_in_polygon(shapes[0][0], shapes[1]) ||
                          point_in_polygon(shapes[1][0], shapes[0]);
      gap = nested ? 0.0 : polyline_distance(shapes[0], shapes[1]);
    }
    if (gap < kMinObjectDistance) violations.push_back("object gap below 30 mm");
  }

  for (int i = 2; i <= 3; ++i) {
    const std::string name = "Inlet" + std::to_string(i) + "xPos";
    if (!dp.has(name)) continue;
    const double x = dp.real(name);
    if (x - kSideInletWidth / 2 <= 0.0) {
      violations.push_back("inlet " + std::to_string(i) + " overlaps the upstream corner");
    }
    if (x + kSideInletWidth / 2 >= straight_end) {
      violations.push_back("inlet " + std::to_string(i) +
                           (elbow > 0.0 ? " overlaps the elbow arc" : " overlaps the outlet"));
    }
  }
  // Inlet2 sits on the top wall and Inlet3 on the bottom wall, so the
  // openings cannot overlap each other.
  return violations;
}

std::vector<DesignPoint> sample_design_points(DatasetVariant variant, int n, std::uint64_t seed,
                                              std::span<const ParamRange> ranges) {
  std::vector<ParamRange> builtin;
  if (ranges.empty()) {
    builtin = variant_ranges(variant);
    ranges = builtin;
  }
  auto points = lhs_sample(ranges, n, seed, variant);

  std::vector<const ParamRange*> placement;
  for (const auto& r : ranges) {
    if (r.kind != ParamKind::Continuous || r.degenerate()) continue;
    if (r.name == "Object1xPos" || r.name == "Object1yFactor" || r.name == "Object2xPos" ||
        r.name == "Object2yFactor") {
      placement.push_back(&r);
    }
  }

  constexpr int kStratumAttempts = 100;
  constexpr int kRelaxedAttempts = 100000;
  for (auto& dp : points) {
    if (validate_design_point(dp).empty()) continue;
    Rng rng(derive_seed(dp.rng_seed, 0x5eed));
    std::vector<int> strata;
    for (const auto* r : placement) strata.push_back(stratum_of(dp.real(r->name), r->lo, r->hi, n));
    bool ok = false;
    for (int attempt = 0; attempt < kStratumAttempts && !ok; ++attempt) {
      for (std::size_t j = 0; j < placement.size(); ++j) {
        const auto* r = placement[j];
        dp.set(r->name, draw_in_stratum(rng, r->lo, r->hi, n, strata[j]));
      }
      ok = validate_design_point(dp).empty();
    }
    for (int attempt = 0; attempt < kRelaxedAttempts && !ok; ++attempt) {
      for (const auto* r : placement) dp.set(r->name, rng.uniform(r->lo, r->hi));
      ok = validate_design_point(dp).empty();
    }
    if (!ok) {
      const auto v = validate_design_point(dp);
      throw FeasibilityError("design point " + std::to_string(dp.index) +
                             " stays infeasible: " + (v.empty() ? "" : v.front()));
    }
  }
  return points;
}

std::string design_point_to_json(const DesignPoint& dp) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [name, value] : dp.values) {
    std::visit([&](const auto& v) { values[name] = v; }, value);
  }
  nlohmann::json j{{"variant", std::string(variant_name(dp.variant))},
                   {"index", dp.index},
                   {"rng_seed", dp.rng_seed},
                   {"values", std::move(values)}};
  return j.dump();
}

DesignPoint design_point_from_json(const std::string& line) {
  DesignPoint dp;
  try {
    const auto j = nlohmann::json::parse(line);
    dp.variant = parse_variant(j.at("variant").get<std::string>());
    dp.index = j.at("index").get<int>();
    dp.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& [name, v] : j.at("values").items()) {
      if (v.is_string()) {
        dp.set(name, v.get<std::string>());
      } else {
        dp.set(name, v.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed design point record: ") + e.what());
  }
  return dp;
}

void write_design_points(std::ostream& out, std::span<const DesignPoint> points) {
  for (const auto& dp : points) out << design_point_to_json(dp) << '\n';
}

std::vector<DesignPoint> read_design_points(std::istream& in) {
  std::vector<DesignPoint> out;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    out.push_back(design_point_from_json(line));
  }
  return out;
}

}  // namespace surf
