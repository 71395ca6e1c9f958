// Command-line front end: sample, generate, baseline, evaluate, plot, stats.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "surf/baselines.hpp"
#include "surf/dataset.hpp"
#include "surf/errors.hpp"
#include "surf/mesh.hpp"
#include "surf/metrics.hpp"
#include "surf/pipeline.hpp"
#include "surf/plot.hpp"

namespace fs = std::filesystem;
using namespace surf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kPartial = 2, kTotal = 3 };

std::vector<DatasetVariant> parse_variants(const std::vector<std::string>& names) {
  std::vector<DatasetVariant> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(std::begin(kAllVariants), std::end(kAllVariants));
      return out;
    }
    out.push_back(parse_variant(n));
  }
  return out;
}

// Variants that have a manifest under the dataset root.
std::vector<DatasetVariant> present_variants(const fs::path& root) {
  std::vector<DatasetVariant> out;
  for (auto v : kAllVariants) {
    if (fs::exists(manifest_path(root, v))) out.push_back(v);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

struct SampleArgs {
  std::string variant;
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string ranges;
};

int cmd_sample(const SampleArgs& a) {
  if (a.n < 1) {
    std::cerr << "sample: -n must be at least 1\n";
    return kUsage;
  }
  RunConfig cfg;
  cfg.ranges_file = a.ranges;
  const auto v = parse_variant(a.variant);
  const auto points = sample_design_points(v, a.n, a.seed, ranges_for(v, cfg));
  int infeasible = 0;
  for (const auto& dp : points) {
    for (const auto& msg : validate_design_point(dp)) {
      std::cerr << "dp_" << dp.index << ": " << msg << '\n';
      ++infeasible;
    }
  }
  if (a.out.empty() || a.out == "-") {
    write_design_points(std::cout, points);
  } else {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    write_design_points(out, points);
  }
  return infeasible ? kTotal : kOk;
}

struct GenerateArgs {
  std::vector<std::string> variants{"base"};
  RunConfig cfg;
  double resolution = 0.0;
  bool no_grading = false;
  std::string points;
  std::string out = "dataset";
  std::string ranges;
};

int cmd_generate(GenerateArgs a) {
  if (a.cfg.n < 1 && a.points.empty()) {
    std::cerr << "generate: -n must be at least 1\n";
    return kUsage;
  }
  if (a.resolution > 0) a.cfg.resolution_factor = a.resolution;
  a.cfg.wall_grading = !a.no_grading;
  a.cfg.ranges_file = a.ranges;
  const auto variants = parse_variants(a.variants);
  if (!a.points.empty() && variants.size() != 1) {
    std::cerr << "generate: --points needs exactly one --variant\n";
    return kUsage;
  }
  const auto log = [](const std::string& s) { std::cerr << s << '\n'; };
  int total = 0, failed = 0;
  for (auto v : variants) {
    GenerateSummary sum;
    if (!a.points.empty()) {
      std::ifstream in(a.points);
      if (!in) throw IoError("cannot open " + a.points);
      sum = generate_variant(v, read_design_points(in), a.cfg, a.out, log);
    } else {
      sum = sample_and_generate(v, a.cfg, a.out, log);
    }
    total += static_cast<int>(sum.results.size());
    failed += sum.failures();
    std::cerr << variant_name(v) << ": " << sum.results.size() - static_cast<std::size_t>(sum.failures()) << "/"
              << sum.results.size() << " datapoints, split " << sum.manifest.split.train.size() << "/"
              << sum.manifest.split.val.size() << "/" << sum.manifest.split.test.size() << '\n';
  }
  if (failed == 0) return kOk;
  return failed == total ? kTotal : kPartial;
}

struct BaselineArgs {
  std::string kind = "persistence";
  std::string dataset = "dataset";
  std::vector<std::string> variants;
  std::string out;
  int horizon = -1;
  std::string split = "test";
};

int cmd_baseline(const BaselineArgs& a) {
  const auto kind = parse_baseline(a.kind);
  const auto variants = a.variants.empty() ? present_variants(a.dataset) : parse_variants(a.variants);
  if (variants.empty()) {
    std::cerr << "baseline: no variants found under " << a.dataset << '\n';
    return kTotal;
  }
  const std::string out = a.out.empty() ? "predictions/" + std::string(baseline_name(kind)) : a.out;
  int failed = 0;
  for (auto v : variants) {
    try {
      const int n = write_baseline_predictions(kind, a.dataset, v, out, a.horizon, parse_split(a.split));
      std::cerr << variant_name(v) << ": " << n << " prediction files\n";
    } catch (const Error& e) {
      std::cerr << variant_name(v) << ": " << e.what() << '\n';
      ++failed;
    }
  }
  if (failed == 0) return kOk;
  return failed == static_cast<int>(variants.size()) ? kTotal : kPartial;
}

struct EvaluateArgs {
  std::string dataset = "dataset";
  std::string pred;
  std::vector<std::string> runs;
  int horizon = -1;
  std::string split = "test";
  std::string out_json = "report.json";
  std::string out_table = "report.tsv";
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<EvaluationRun> runs;
  for (const auto& r : a.runs) {
    const auto eq = r.find('=');
    if (eq == std::string::npos) {
      std::cerr << "evaluate: --run expects origin=path, got '" << r << "'\n";
      return kUsage;
    }
    runs.push_back({parse_variant(r.substr(0, eq)), r.substr(eq + 1)});
  }
  if (!a.pred.empty()) {
    // One predictor for every variant it covers: each covered variant is
    // both an origin and a target.
    for (auto v : present_variants(a.dataset)) {
      if (fs::exists(variant_dir(a.pred, v))) runs.push_back({v, a.pred});
    }
  }
  if (runs.empty()) {
    std::cerr << "evaluate: nothing to score (give --pred or --run origin=path)\n";
    return kUsage;
  }
  const auto res = evaluate_runs(runs, a.dataset, a.horizon, parse_split(a.split));
  if (res.scores.empty()) {
    std::cerr << "evaluate: no prediction directories match datasets under " << a.dataset << '\n';
    return kTotal;
  }
  write_evaluation(res, a.out_json, a.out_table);
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& [key, s] : res.scores) {
    std::cout << variant_name(key.first) << " -> " << variant_name(key.second) << "  H=" << s.horizon
              << "  RMSE v/p/T " << s.report.rmse.v << " " << s.report.rmse.p << " " << s.report.rmse.t << "  PS "
              << s.report.ps;
    const auto g = res.gs.find(key);
    if (g != res.gs.end()) std::cout << "  GS " << g->second.gs;
    std::cout << '\n';
  }
  if (res.surf) {
    std::cout << "SURF_GS mesh " << res.surf->mesh << " topology " << res.surf->topology << " range "
              << res.surf->range << " dynamic " << res.surf->dynamic << " average " << res.surf->average << '\n';
  } else {
    std::cout << "SURF_GS unavailable: " << res.surf_error << '\n';
  }
  return kOk;
}

struct PlotArgs {
  std::string dataset = "dataset";
  std::string variant = "base";
  std::vector<int> dps;
  std::string steps = "0,5,10,20";
  std::vector<std::string> fields{"velocity", "temperature"};
  std::string pred;
  std::vector<std::string> reports;
  std::string out = "plots";
  int width = 800;
};

int cmd_plot(const PlotArgs& a) {
  fs::create_directories(a.out);
  int written = 0, warnings = 0;
  const auto v = parse_variant(a.variant);
  std::vector<int> dps = a.dps;
  if (dps.empty() && fs::exists(manifest_path(a.dataset, v))) {
    const Manifest m = read_manifest(manifest_path(a.dataset, v));
    if (!m.datapoints.empty()) dps.push_back(m.datapoints.front());
  }
  const auto steps = parse_int_list(a.steps);
  for (int id : dps) {
    const fs::path dir = datapoint_dir(a.dataset, v, id);
    Mesh mesh;
    FieldTensor fields;
    try {
      mesh = read_datapoint_mesh(dir);
      fields = read_field_tensor(a.pred.empty() ? dir / "fields.bin" : prediction_path(a.pred, v, id));
    } catch (const Error& e) {
      std::cerr << "warning: " << e.what() << '\n';
      ++warnings;
      continue;
    }
    for (const auto& fname : a.fields) {
      const PlotField f = parse_plot_field(fname);
      for (int s : steps) {
        const fs::path png = fs::path(a.out) / (std::string(variant_name(v)) + "_dp" + std::to_string(id) + "_" +
                                                plot_field_name(f) + "_t" + std::to_string(s) + ".png");
        try {
          SnapshotOptions so;
          so.width = a.width;
          write_snapshot_png(png, mesh, fields, s, f, so);
          ++written;
        } catch (const Error& e) {
          std::cerr << "warning: " << png.filename().string() << ": " << e.what() << '\n';
          ++warnings;
        }
      }
    }
  }
  for (const auto& report : a.reports) {
    std::ifstream in(report);
    if (!in) {
      std::cerr << "warning: cannot open report " << report << '\n';
      ++warnings;
      continue;
    }
    const auto j = nlohmann::json::parse(in);
    std::vector<std::pair<std::string, double>> ps, gs;
    for (const auto& s : j.at("scores")) {
      const std::string label = s.at("origin").get<std::string>() + " -> " + s.at("target").get<std::string>();
      ps.emplace_back(label, s.at("ps").at("mean").get<double>());
      if (s.contains("gs")) gs.emplace_back(label, s.at("gs").at("mean").get<double>());
    }
    const std::string stem = fs::path(report).stem().string();
    write_bar_svg(fs::path(a.out) / (stem + "_ps.svg"), "Performance score", ps);
    ++written;
    if (!gs.empty()) {
      write_bar_svg(fs::path(a.out) / (stem + "_gs.svg"), "Generalization score", gs);
      ++written;
    }
    if (j.contains("surf") && !j.at("surf").is_null()) {
      const auto& sj = j.at("surf");
      write_bar_svg(fs::path(a.out) / (stem + "_surf.svg"), "SURF generalization scores",
                    {{"Mesh", sj.at("mesh").get<double>()},
                     {"Topology", sj.at("topology").get<double>()},
                     {"Range", sj.at("range").get<double>()},
                     {"Dynamic", sj.at("dynamic").get<double>()},
                     {"Average", sj.at("average").get<double>()}});
      ++written;
    }
  }
  std::cerr << "plot: " << written << " files written, " << warnings << " warnings\n";
  if (warnings == 0) return kOk;
  return written > 0 ? kPartial : kTotal;
}

struct StatsArgs {
  std::string dataset = "dataset";
  std::vector<std::string> variants;
  bool meshes = false;
};

int cmd_stats(const StatsArgs& a) {
  const auto variants = a.variants.empty() ? present_variants(a.dataset) : parse_variants(a.variants);
  if (variants.empty()) {
    std::cerr << "stats: no manifests under " << a.dataset << '\n';
    return kTotal;
  }
  std::cout << std::setprecision(6);
  for (auto v : variants) {
    const Manifest m = read_manifest(manifest_path(a.dataset, v));
    std::cout << variant_name(v) << ": " << m.datapoints.size() << "/" << m.requested << " datapoints, split "
              << m.split.train.size() << "/" << m.split.val.size() << "/" << m.split.test.size() << '\n';
    std::cout << "  velocity mean " << m.stats.velocity.mean << " std " << m.stats.velocity.std << '\n';
    std::cout << "  pressure mean " << m.stats.pressure.mean << " std " << m.stats.pressure.std << '\n';
    std::cout << "  temperature mean " << m.stats.temperature.mean << " std " << m.stats.temperature.std << '\n';
    for (const auto& f : m.failed) std::cout << "  failed dp_" << f.index << ": " << f.error << '\n';
    if (a.meshes) {
      for (int id : m.datapoints) {
        const auto q = mesh_quality(read_datapoint_mesh(datapoint_dir(a.dataset, v, id)));
        std::cout << "  dp_" << id << ": " << q.nodes << " nodes, " << q.triangles << " triangles, min angle "
                  << q.min_angle_deg << " deg, mean edge " << q.mean_edge << " m\n";
      }
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat-transfer CFD benchmark toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file; sections named after subcommands");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Latin hypercube design points");
  sample->add_option("--variant", sa.variant, "Dataset variant")->required();
  sample->add_option("-n", sa.n, "Number of design points")->required();
  sample->add_option("--seed", sa.seed, "Sampling seed");
  sample->add_option("-o,--out", sa.out, "Output file (default stdout)");
  sample->add_option("--ranges", sa.ranges, "Variant range table override")->check(CLI::ExistingFile);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Mesh, solve and package datapoints");
  gen->add_option("--variant", ga.variants, "Variants, or 'all'");
  gen->add_option("-n", ga.cfg.n, "Datapoints per variant");
  gen->add_option("--seed", ga.cfg.seed, "Sampling seed");
  gen->add_option("--steps", ga.cfg.steps, "Time steps")->check(CLI::NonNegativeNumber);
  gen->add_option("--dt", ga.cfg.dt, "Time step, s")->check(CLI::PositiveNumber);
  gen->add_option("--coarse-edge", ga.cfg.coarse_edge, "Coarse target edge length, m")->check(CLI::PositiveNumber);
  gen->add_option("--resolution-factor", ga.resolution, "Override the variant's resolution factor")
      ->check(CLI::PositiveNumber);
  gen->add_option("--fine-ratio", ga.cfg.fine_ratio, "Coarse/fine edge ratio")->check(CLI::PositiveNumber);
  gen->add_flag("--no-grading", ga.no_grading, "Uniform solver mesh");
  gen->add_option("--rho", ga.cfg.rho, "Density, kg/m^3")->check(CLI::PositiveNumber);
  gen->add_option("--mu", ga.cfg.mu, "Dynamic viscosity, Pa s")->check(CLI::PositiveNumber);
  gen->add_option("-j,--workers", ga.cfg.workers, "Parallel datapoints (SURF_WORKERS overrides)")
      ->check(CLI::PositiveNumber);
  gen->add_flag("--export-npz", ga.cfg.export_npz, "Also write sim.npz and triangles.npy");
  gen->add_option("--points", ga.points, "Design point list from 'sample'")->check(CLI::ExistingFile);
  gen->add_option("--ranges", ga.ranges, "Variant range table override")->check(CLI::ExistingFile);
  gen->add_option("-o,--out", ga.out, "Dataset root");

  BaselineArgs ba;
  auto* base = app.add_subcommand("baseline", "Write baseline prediction files");
  base->add_option("--kind", ba.kind, "persistence or extrapolation");
  base->add_option("--dataset", ba.dataset, "Dataset root");
  base->add_option("--variant", ba.variants, "Variants (default: all present)");
  base->add_option("-o,--out", ba.out, "Prediction root");
  base->add_option("--horizon", ba.horizon, "Steps to predict (default min(250, steps))");
  base->add_option("--split", ba.split, "train, val, test or all");

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "Score predictions: RMSE, PS, GS, SURF scores");
  eval->add_option("--dataset", ea.dataset, "Dataset root");
  eval->add_option("--pred", ea.pred, "Prediction root used for every variant it covers");
  eval->add_option("--run", ea.runs, "origin=path, one per trained predictor");
  eval->add_option("--horizon", ea.horizon, "Scored steps (default min(250, steps))");
  eval->add_option("--split", ea.split, "Split to score");
  eval->add_option("--out-json", ea.out_json, "Structured report");
  eval->add_option("--out-table", ea.out_table, "Flat table");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "Field snapshots and score charts");
  plot->add_option("--dataset", pa.dataset, "Dataset root");
  plot->add_option("--variant", pa.variant, "Variant");
  plot->add_option("--dp", pa.dps, "Datapoint indices (default: first)");
  plot->add_option("--steps", pa.steps, "Comma-separated timesteps");
  plot->add_option("--field", pa.fields, "velocity, pressure, temperature");
  plot->add_option("--pred", pa.pred, "Plot predictions from this root instead of ground truth");
  plot->add_option("--report", pa.reports, "Report JSON files from 'evaluate'");
  plot->add_option("--width", pa.width, "Image width, px")->check(CLI::PositiveNumber);
  plot->add_option("-o,--out", pa.out, "Output directory");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Manifest summary");
  stats->add_option("--dataset", st.dataset, "Dataset root");
  stats->add_option("--variant", st.variants, "Variants (default: all present)");
  stats->add_flag("--meshes", st.meshes, "Per-datapoint mesh quality");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sample) return cmd_sample(sa);
    if (*gen) return cmd_generate(ga);
    if (*base) return cmd_baseline(ba);
    if (*eval) return cmd_evaluate(ea);
    if (*plot) return cmd_plot(pa);
    if (*stats) return cmd_stats(st);
  } catch (const EmptyRequestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTotal;
  }
  return kUsage;
}
