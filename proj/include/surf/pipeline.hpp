#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surf/baselines.hpp"
#include "surf/dataset.hpp"
#include "surf/metrics.hpp"
#include "surf/param_space.hpp"

namespace surf {

struct RunConfig {
  int n = 8;
  std::uint64_t seed = 0;
  double dt = 0.01;
  int steps = 300;
  double coarse_edge = kDefaultCoarseEdge;  // m, before the variant's resolution factor
  std::optional<double> resolution_factor;  // default: the variant's own
  double fine_ratio = 2.0;                  // solver mesh target = coarse target / fine_ratio
  bool wall_grading = true;                 // on the solver mesh
  double rho = 1.225;
  double mu = 1.7894e-5;
  int workers = 1;
  bool export_npz = false;
  std::filesystem::path ranges_file;  // optional override of the variant tables

  // Values that shape the data; worker count and paths are left out so
  // reruns with other settings produce identical bytes.
  std::map<std::string, std::string> provenance() const;
};

// SURF_WORKERS overrides the configured count when set to a positive integer.
int effective_workers(int configured);

// Runs fn(0..count-1) on `workers` threads pulling from a shared counter.
// Exceptions escape only from fn's own handling; the callable must catch.
void run_work_queue(int count, int workers, const std::function<void(int)>& fn);

struct DatapointResult {
  int index = 0;
  bool ok = false;
  bool skipped = false;  // already complete on disk
  std::string error;
  std::size_t coarse_nodes = 0, fine_nodes = 0;
  double seconds = 0.0;
};

// Mesh, solve, downsample and package one design point.
DatapointPackage simulate_datapoint(const DesignPoint& dp, const RunConfig& cfg);

struct GenerateSummary {
  DatasetVariant variant = DatasetVariant::Base;
  std::vector<DatapointResult> results;
  Manifest manifest;

  int failures() const;
};

using ProgressLog = std::function<void(const std::string&)>;

// Writes every datapoint then the manifest. Datapoints already complete
// (checksums match and generated with the same settings) are kept.
GenerateSummary generate_variant(DatasetVariant variant, const std::vector<DesignPoint>& points,
                                 const RunConfig& cfg, const std::filesystem::path& root,
                                 const ProgressLog& log = {});

// Sampling plus generation; the design points also land in
// <root>/<variant>/design_points.jsonl.
GenerateSummary sample_and_generate(DatasetVariant variant, const RunConfig& cfg,
                                    const std::filesystem::path& root, const ProgressLog& log = {});

std::vector<ParamRange> ranges_for(DatasetVariant variant, const RunConfig& cfg);

enum class SplitName { Train, Val, Test, All };
SplitName parse_split(const std::string& name);
const std::vector<int>& split_members(const Manifest& m, SplitName s, std::vector<int>& storage);

std::filesystem::path prediction_path(const std::filesystem::path& pred_root, DatasetVariant v, int index);

// Baseline predictions for the chosen split. horizon < 0 picks the default.
int write_baseline_predictions(BaselineKind kind, const std::filesystem::path& dataset_root, DatasetVariant v,
                               const std::filesystem::path& pred_root, int horizon, SplitName split);

struct VariantScore {
  DatasetVariant variant = DatasetVariant::Base;
  int horizon = 0;
  std::vector<int> datapoints;
  RmseTriple sigma;
  ScoreReport report;
};

// Scores predictions against a dataset variant; every datapoint of the split
// needs a prediction file.
VariantScore evaluate_variant(const std::filesystem::path& pred_root, const std::filesystem::path& dataset_root,
                              DatasetVariant v, int horizon, SplitName split = SplitName::Test);

struct EvaluationRun {
  DatasetVariant origin = DatasetVariant::Base;  // dataset the predictor was trained on
  std::filesystem::path pred_root;
};

struct EvaluationResult {
  std::map<std::pair<DatasetVariant, DatasetVariant>, VariantScore> scores;  // (origin, target)
  std::map<std::pair<DatasetVariant, DatasetVariant>, GsEntry> gs;
  std::optional<SurfScores> surf;
  std::string surf_error;  // why surf is empty
};

// Evaluates each run on every target variant it has predictions for; GS
// entries need the target's own run as the self reference.
EvaluationResult evaluate_runs(const std::vector<EvaluationRun>& runs, const std::filesystem::path& dataset_root,
                               int horizon, SplitName split = SplitName::Test);

// Structured report plus a flat tab-separated table.
void write_evaluation(const EvaluationResult& r, const std::filesystem::path& json_path,
                      const std::filesystem::path& table_path);

}  // namespace surf
