#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace surf {

enum class DatasetVariant { Base, Rotated, Range, Topology, Dynamic, Full, Mesh };

inline constexpr DatasetVariant kAllVariants[] = {
    DatasetVariant::Base,    DatasetVariant::Rotated, DatasetVariant::Range,
    DatasetVariant::Topology, DatasetVariant::Dynamic, DatasetVariant::Full,
    DatasetVariant::Mesh};

std::string_view variant_name(DatasetVariant v);
DatasetVariant parse_variant(std::string_view name);

// Coarse-mesh element size is divided by this factor. Only Mesh differs.
double mesh_resolution_factor(DatasetVariant v);

enum class ParamKind { Continuous, Categorical };

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  ParamKind kind = ParamKind::Continuous;
  std::vector<std::string> labels;  // categorical only
  std::string unit;

  bool degenerate() const { return kind == ParamKind::Continuous && lo == hi; }
};

using ParamValue = std::variant<double, std::string>;

struct DesignPoint {
  DatasetVariant variant = DatasetVariant::Base;
  int index = 0;
  std::map<std::string, ParamValue> values;
  std::uint64_t rng_seed = 0;

  bool has(const std::string& name) const { return values.count(name) > 0; }
  double real(const std::string& name) const;
  // Returns `fallback` when the parameter is absent for this variant.
  double real_or(const std::string& name, double fallback) const;
  const std::string& label(const std::string& name) const;
  void set(const std::string& name, ParamValue v) { values[name] = std::move(v); }
};

// Ranges transcribed from the generation tables. Parameters that do not
// apply to a variant are absent; fixed values are degenerate ranges.
std::vector<ParamRange> variant_ranges(DatasetVariant variant);

// Range tables as a human-editable key-value file, one section per variant.
void write_variant_config(std::ostream& out);
std::vector<ParamRange> load_variant_ranges(const std::filesystem::path& path,
                                            DatasetVariant variant);

// Stratum (0..n-1) that `value` falls into when [lo, hi] is cut into n
// equal sub-ranges. The closed upper end maps to the last stratum.
int stratum_of(double value, double lo, double hi, int n);

// Plain Latin hypercube sample; deterministic in (ranges, n, seed).
std::vector<DesignPoint> lhs_sample(std::span<const ParamRange> ranges, int n,
                                    std::uint64_t seed,
                                    DatasetVariant variant = DatasetVariant::Base);

// Geometric feasibility of a design point. Empty result means feasible.
std::vector<std::string> validate_design_point(const DesignPoint& dp);

// LHS followed by feasibility repair: infeasible points redraw their
// placement parameters inside their strata, then across the full range.
std::vector<DesignPoint> sample_design_points(DatasetVariant variant, int n, std::uint64_t seed,
                                              std::span<const ParamRange> ranges = {});

// Line-delimited JSON, one design point per line.
void write_design_points(std::ostream& out, std::span<const DesignPoint> points);
std::vector<DesignPoint> read_design_points(std::istream& in);
std::string design_point_to_json(const DesignPoint& dp);
DesignPoint design_point_from_json(const std::string& line);

// Deterministic across platforms: the engine sequence is fixed by the
// standard, the reductions below replace the implementation-defined
// distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform01();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t below(std::uint64_t n);
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace surf
