#include "surf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "surf/errors.hpp"
#include "surf/geometry.hpp"
#include "surf/interp.hpp"
#include "surf/mesh.hpp"
#include "surf/solver.hpp"

namespace surf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

double resolution_of(const RunConfig& cfg, DatasetVariant v) {
  return cfg.resolution_factor.value_or(mesh_resolution_factor(v));
}

// The settings a stored datapoint must match to be reused.
bool reusable(const fs::path& dir, const DesignPoint& dp, const RunConfig& cfg) {
  if (!datapoint_complete(dir)) return false;
  try {
    std::ifstream in(dir / "meta.json");
    const json j = json::parse(in);
    if (j.at("design_point") != json::parse(design_point_to_json(dp))) return false;
    const auto& g = j.at("generation");
    return g.at("steps").get<int>() == cfg.steps && g.at("dt").get<double>() == cfg.dt &&
           g.at("coarse_edge").get<double>() == cfg.coarse_edge / resolution_of(cfg, dp.variant) &&
           g.at("fine_nodes").get<std::size_t>() > 0;
  } catch (const std::exception&) {
    return false;
  }
}

// Two-pass pooled statistics over tensors loaded one at a time.
DatasetStats stream_stats(const fs::path& root, DatasetVariant v, const std::vector<int>& ids) {
  // compute_stats is exact for a single tensor; merging pairs of
  // (count, mean, M2) keeps memory at one tensor.
  struct Acc {
    double n = 0, mean = 0, m2 = 0;
    void merge(double nb, double mb, double m2b) {
      if (nb == 0) return;
      const double tot = n + nb, d = mb - mean;
      mean += d * nb / tot;
      m2 += m2b + d * d * n * nb / tot;
      n = tot;
    }
  } av, ap, at;
  std::size_t samples = 0;
  for (int id : ids) {
    const FieldTensor t = read_field_tensor(datapoint_dir(root, v, id) / "fields.bin");
    const DatasetStats s = compute_stats(std::span<const FieldTensor>(&t, 1));
    const double n = static_cast<double>(s.samples);
    av.merge(2 * n, s.velocity.mean, s.velocity.std * s.velocity.std * 2 * n);
    ap.merge(n, s.pressure.mean, s.pressure.std * s.pressure.std * n);
    at.merge(n, s.temperature.mean, s.temperature.std * s.temperature.std * n);
    samples += s.samples;
  }
  DatasetStats out;
  out.samples = samples;
  if (samples == 0) return out;
  out.velocity = {av.mean, std::sqrt(av.m2 / av.n)};
  out.pressure = {ap.mean, std::sqrt(ap.m2 / ap.n)};
  out.temperature = {at.mean, std::sqrt(at.m2 / at.n)};
  return out;
}

constexpr std::uint64_t kSplitStream = 0x5eedULL;

}  // namespace

std::map<std::string, std::string> RunConfig::provenance() const {
  return {{"n", std::to_string(n)},
          {"seed", std::to_string(seed)},
          {"dt", fmt(dt)},
          {"steps", std::to_string(steps)},
          {"coarse_edge", fmt(coarse_edge)},
          {"resolution_factor", resolution_factor ? fmt(*resolution_factor) : "variant"},
          {"fine_ratio", fmt(fine_ratio)},
          {"wall_grading", wall_grading ? "true" : "false"},
          {"rho", fmt(rho)},
          {"mu", fmt(mu)},
          {"export_npz", export_npz ? "true" : "false"},
          {"ranges", ranges_file.empty() ? "builtin" : ranges_file.filename().string()},
          {"min_angle_deg", "20"},
          {"format_version", std::to_string(kFormatVersion)}};
}

int effective_workers(int configured) {
  if (const char* env = std::getenv("SURF_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1, configured);
}

void run_work_queue(int count, int workers, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
  };
  const int w = std::clamp(workers, 1, std::max(1, count));
  if (w == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int k = 0; k < w; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

int GenerateSummary::failures() const {
  return static_cast<int>(std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok; }));
}

std::vector<ParamRange> ranges_for(DatasetVariant variant, const RunConfig& cfg) {
  if (!cfg.ranges_file.empty()) return load_variant_ranges(cfg.ranges_file, variant);
  return variant_ranges(variant);
}

DatapointPackage simulate_datapoint(const DesignPoint& dp, const RunConfig& cfg) {
  const ClampResult clamp = clamp_amplitudes_report(dp);
  const DomainOutline outline = build_outline(clamp.dp);
  const double h_coarse = cfg.coarse_edge / resolution_of(cfg, dp.variant);
  const Mesh coarse = triangulate(outline, h_coarse);
  MeshOptions fine_opt;
  fine_opt.wall_grading = cfg.wall_grading;
  const Mesh fine = triangulate(outline, h_coarse / cfg.fine_ratio, fine_opt);
  const Transfer transfer = build_transfer(fine, coarse);

  DatapointPackage pkg;
  pkg.dp = dp;
  pkg.mesh = coarse;
  pkg.fields = FieldTensor::zeros(TensorKind::Fields, static_cast<std::size_t>(cfg.steps) + 1, coarse.num_nodes(), 0);

  TransientOptions opt;
  opt.dt = cfg.dt;
  opt.steps = cfg.steps;
  opt.rho = cfg.rho;
  opt.mu = cfg.mu;
  opt.keep_states = false;
  opt.observer = [&](int k, const FieldState& s) {
    const FieldState c = transfer.apply(s);
    const auto step = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < c.size(); ++i) {
      pkg.fields.at(step, i, 0) = c.u[i];
      pkg.fields.at(step, i, 1) = c.v[i];
      pkg.fields.at(step, i, 2) = c.p[i];
      pkg.fields.at(step, i, 3) = c.T[i];
    }
  };
  const SimulationRecord rec = run_transient(dp, fine, opt);

  auto& m = pkg.meta;
  m.props = rec.props;
  m.reynolds = reynolds_number(cfg.rho, clamp.dp.real("Inlet1v"), 2.0 * clamp.dp.real_or("Object1Radius", 60.0) * 1e-3,
                               cfg.mu);
  m.clamp_factor = clamp.factor;
  m.steps = cfg.steps;
  m.dt = cfg.dt;
  m.coarse_edge = h_coarse;
  m.resolution_factor = resolution_of(cfg, dp.variant);
  m.fine_nodes = fine.num_nodes();
  m.fine_triangles = fine.num_triangles();
  for (const auto& r : rec.reports) {
    m.max_divergence = std::max(m.max_divergence, r.divergence);
    m.max_pressure_residual = std::max(m.max_pressure_residual, r.pressure_residual);
    m.max_momentum_residual = std::max(m.max_momentum_residual, r.momentum_residual);
    m.max_energy_residual = std::max(m.max_energy_residual, r.energy_residual);
  }
  validate_package(pkg);
  return pkg;
}

GenerateSummary generate_variant(DatasetVariant variant, const std::vector<DesignPoint>& points, const RunConfig& cfg,
                                 const fs::path& root, const ProgressLog& log) {
  GenerateSummary sum;
  sum.variant = variant;
  sum.results.resize(points.size());
  std::mutex log_mu;
  const auto say = [&](const std::string& s) {
    if (!log) return;
    std::lock_guard lock(log_mu);
    log(s);
  };

  run_work_queue(static_cast<int>(points.size()), effective_workers(cfg.workers), [&](int k) {
    const DesignPoint& dp = points[static_cast<std::size_t>(k)];
    DatapointResult& r = sum.results[static_cast<std::size_t>(k)];
    r.index = dp.index;
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = datapoint_dir(root, variant, dp.index);
    try {
      if (dp.variant != variant) throw ConfigError("design point belongs to " + std::string(variant_name(dp.variant)));
      if (reusable(dir, dp, cfg)) {
        const Mesh mesh = read_datapoint_mesh(dir);
        r.ok = r.skipped = true;
        r.coarse_nodes = mesh.num_nodes();
        say(std::string(variant_name(variant)) + " dp_" + std::to_string(dp.index) + ": complete, skipped");
        return;
      }
      const DatapointPackage pkg = simulate_datapoint(dp, cfg);
      WriteOptions wo;
      wo.export_npz = cfg.export_npz;
      write_datapoint(pkg, root, wo);
      r.ok = true;
      r.coarse_nodes = pkg.mesh.num_nodes();
      r.fine_nodes = pkg.meta.fine_nodes;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << variant_name(variant) << " dp_" << dp.index << ": ";
    if (r.ok) {
      line << r.coarse_nodes << " coarse / " << r.fine_nodes << " fine nodes (ratio " << std::setprecision(3)
           << static_cast<double>(r.fine_nodes) / static_cast<double>(std::max<std::size_t>(1, r.coarse_nodes))
           << "), " << std::setprecision(3) << r.seconds << " s";
    } else {
      line << "FAILED: " << r.error;
    }
    say(line.str());
  });

  Manifest& m = sum.manifest;
  m.variant = variant;
  m.requested = static_cast<int>(points.size());
  m.seed = cfg.seed;
  m.split_seed = derive_seed(cfg.seed, kSplitStream);
  m.config = cfg.provenance();
  for (const auto& r : sum.results) {
    if (r.ok) m.datapoints.push_back(r.index);
    else m.failed.push_back({r.index, r.error});
  }
  std::sort(m.datapoints.begin(), m.datapoints.end());
  std::sort(m.failed.begin(), m.failed.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  m.split = split_ids(m.datapoints, m.split_seed);
  m.stats = stream_stats(root, variant, m.split.train);
  write_manifest(manifest_path(root, variant), m);
  return sum;
}

GenerateSummary sample_and_generate(DatasetVariant variant, const RunConfig& cfg, const fs::path& root,
                                    const ProgressLog& log) {
  const auto ranges = ranges_for(variant, cfg);
  const auto points = sample_design_points(variant, cfg.n, cfg.seed, ranges);
  fs::create_directories(variant_dir(root, variant));
  {
    std::ofstream out(variant_dir(root, variant) / "design_points.jsonl");
    if (!out) throw IoError("cannot write design points under " + variant_dir(root, variant).string());
    write_design_points(out, points);
  }
  return generate_variant(variant, points, cfg, root, log);
}

SplitName parse_split(const std::string& name) {
  if (name == "train") return SplitName::Train;
  if (name == "val") return SplitName::Val;
  if (name == "test") return SplitName::Test;
  if (name == "all") return SplitName::All;
  throw ConfigError("unknown split '" + name + "' (train, val, test, all)");
}

const std::vector<int>& split_members(const Manifest& m, SplitName s, std::vector<int>& storage) {
  switch (s) {
    case SplitName::Train: return m.split.train;
    case SplitName::Val: return m.split.val;
    case SplitName::Test: return m.split.test;
    case SplitName::All: break;
  }
  storage = m.datapoints;
  return storage;
}

fs::path prediction_path(const fs::path& pred_root, DatasetVariant v, int index) {
  return datapoint_dir(pred_root, v, index) / "fields.bin";
}

int write_baseline_predictions(BaselineKind kind, const fs::path& dataset_root, DatasetVariant v,
                               const fs::path& pred_root, int horizon, SplitName split) {
  const Manifest m = read_manifest(manifest_path(dataset_root, v));
  std::vector<int> storage;
  const auto& ids = split_members(m, split, storage);
  int written = 0;
  for (int id : ids) {
    const FieldTensor gt = read_field_tensor(datapoint_dir(dataset_root, v, id) / "fields.bin");
    const int h = horizon < 0 ? default_horizon(static_cast<int>(gt.steps) - 1) : horizon;
    const FieldTensor pred = baseline_predict(kind, gt, h);
    const fs::path out = prediction_path(pred_root, v, id);
    fs::create_directories(out.parent_path());
    write_field_tensor(out, pred);
    ++written;
  }
  return written;
}

VariantScore evaluate_variant(const fs::path& pred_root, const fs::path& dataset_root, DatasetVariant v, int horizon,
                              SplitName split) {
  const Manifest m = read_manifest(manifest_path(dataset_root, v));
  std::vector<int> storage;
  const auto& ids = split_members(m, split, storage);
  if (ids.empty()) throw AlignmentError(std::string(variant_name(v)) + ": split has no datapoints to score");
  std::vector<FieldTensor> preds, gts;
  preds.reserve(ids.size());
  gts.reserve(ids.size());
  std::string missing;
  for (int id : ids) {
    const fs::path p = prediction_path(pred_root, v, id);
    if (!fs::exists(p)) {
      missing += (missing.empty() ? "" : ", ") + p.string();
      continue;
    }
    preds.push_back(read_field_tensor(p));
    gts.push_back(read_field_tensor(datapoint_dir(dataset_root, v, id) / "fields.bin"));
  }
  if (!missing.empty()) throw AlignmentError(std::string(variant_name(v)) + ": missing predictions: " + missing);

  VariantScore vs;
  vs.variant = v;
  vs.datapoints = ids;
  int steps = static_cast<int>(gts.front().steps) - 1;
  for (const auto& g : gts) steps = std::min(steps, static_cast<int>(g.steps) - 1);
  vs.horizon = horizon < 0 ? default_horizon(steps) : horizon;
  std::vector<ScoredPair> pairs;
  for (std::size_t k = 0; k < ids.size(); ++k) pairs.push_back({ids[k], &preds[k], &gts[k]});
  vs.sigma = {m.stats.velocity.std, m.stats.pressure.std, m.stats.temperature.std};
  vs.report = performance_score(rmse_all(pairs, vs.horizon), vs.sigma);
  return vs;
}

EvaluationResult evaluate_runs(const std::vector<EvaluationRun>& runs, const fs::path& dataset_root, int horizon,
                               SplitName split) {
  EvaluationResult res;
  for (const auto& run : runs) {
    for (DatasetVariant target : kAllVariants) {
      if (!fs::exists(manifest_path(dataset_root, target)) || !fs::exists(variant_dir(run.pred_root, target))) continue;
      res.scores[{run.origin, target}] = evaluate_variant(run.pred_root, dataset_root, target, horizon, split);
    }
  }
  for (const auto& [key, cross] : res.scores) {
    const auto self = res.scores.find({key.second, key.second});
    if (self == res.scores.end()) continue;
    res.gs[key] = generalization_score(cross.report.rmse, self->second.report.rmse);
  }
  GsMatrix matrix;
  for (const auto& [key, g] : res.gs) matrix[key] = g.gs;
  try {
    res.surf = surf_scores(matrix);
  } catch (const IncompleteMatrixError& e) {
    res.surf_error = e.what();
  }
  return res;
}

void write_evaluation(const EvaluationResult& r, const fs::path& json_path, const fs::path& table_path) {
  json scores = json::array();
  std::ostringstream table;
  table << std::setprecision(10);
  table << "origin\ttarget\thorizon\tn\trmse_v\trmse_p\trmse_t\tps_v\tps_p\tps_t\tps\tgs_v\tgs_p\tgs_t\tgs\n";
  for (const auto& [key, s] : r.scores) {
    json entry{{"origin", std::string(variant_name(key.first))},
               {"target", std::string(variant_name(key.second))},
               {"horizon", s.horizon},
               {"datapoints", s.datapoints},
               {"sigma", {{"v", s.sigma.v}, {"p", s.sigma.p}, {"t", s.sigma.t}}},
               {"rmse", {{"v", s.report.rmse.v}, {"p", s.report.rmse.p}, {"t", s.report.rmse.t}}},
               {"ps", {{"v", s.report.ps_v}, {"p", s.report.ps_p}, {"t", s.report.ps_t}, {"mean", s.report.ps}}}};
    table << variant_name(key.first) << '\t' << variant_name(key.second) << '\t' << s.horizon << '\t'
          << s.datapoints.size() << '\t' << s.report.rmse.v << '\t' << s.report.rmse.p << '\t' << s.report.rmse.t
          << '\t' << s.report.ps_v << '\t' << s.report.ps_p << '\t' << s.report.ps_t << '\t' << s.report.ps;
    const auto g = r.gs.find(key);
    if (g != r.gs.end()) {
      entry["gs"] = {{"v", g->second.v}, {"p", g->second.p}, {"t", g->second.t}, {"mean", g->second.gs}};
      table << '\t' << g->second.v << '\t' << g->second.p << '\t' << g->second.t << '\t' << g->second.gs;
    } else {
      table << "\t\t\t\t";
    }
    table << '\n';
    scores.push_back(std::move(entry));
  }
  json j{{"format_version", kFormatVersion}, {"scores", scores}};
  if (r.surf) {
    j["surf"] = {{"mesh", r.surf->mesh},
                 {"topology", r.surf->topology},
                 {"range", r.surf->range},
                 {"dynamic", r.surf->dynamic},
                 {"average", r.surf->average}};
  } else {
    j["surf"] = nullptr;
    j["surf_missing"] = r.surf_error;
  }
  if (!json_path.empty()) {
    if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write " + json_path.string());
    out << j.dump(2) << '\n';
  }
  if (!table_path.empty()) {
    if (table_path.has_parent_path()) fs::create_directories(table_path.parent_path());
    std::ofstream out(table_path);
    if (!out) throw IoError("cannot write " + table_path.string());
    out << table.str();
  }
}

}  // namespace surf
