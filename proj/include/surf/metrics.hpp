#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "surf/param_space.hpp"
#include "surf/tensor_io.hpp"

namespace surf {

enum class Quantity { Velocity, Pressure, Temperature };

// A prediction and the ground truth it is scored against. Prediction step
// k holds physical step first_step + k; ground truth index t is step t.
struct ScoredPair {
  int id = 0;
  const FieldTensor* prediction = nullptr;
  const FieldTensor* truth = nullptr;
};

// Default horizon for a record of `steps` solver steps.
int default_horizon(int steps);

double rmse_velocity(std::span<const ScoredPair> pairs, int horizon);
double rmse_scalar(std::span<const ScoredPair> pairs, int horizon, Quantity q);

struct RmseTriple {
  double v = 0.0, p = 0.0, t = 0.0;
};
RmseTriple rmse_all(std::span<const ScoredPair> pairs, int horizon);

struct ScoreReport {
  RmseTriple rmse;
  double ps_v = 0.0, ps_p = 0.0, ps_t = 0.0, ps = 0.0;
};

// sigmas: velocity, pressure, temperature.
ScoreReport performance_score(const RmseTriple& rmse, const RmseTriple& sigma);

double generalization_score(double cross_rmse, double self_rmse);

struct GsEntry {
  double v = 0.0, p = 0.0, t = 0.0, gs = 0.0;
};
GsEntry generalization_score(const RmseTriple& cross, const RmseTriple& self);

struct SurfScores {
  double mesh = 0.0, topology = 0.0, range = 0.0, dynamic = 0.0, average = 0.0;
};

using GsMatrix = std::map<std::pair<DatasetVariant, DatasetVariant>, double>;  // (origin, target)

// The defining (origin, target) pair of each aspect score.
inline constexpr std::pair<DatasetVariant, DatasetVariant> kSurfPairs[] = {
    {DatasetVariant::Full, DatasetVariant::Mesh},
    {DatasetVariant::Base, DatasetVariant::Topology},
    {DatasetVariant::Base, DatasetVariant::Range},
    {DatasetVariant::Base, DatasetVariant::Dynamic},
};

SurfScores surf_scores(const GsMatrix& gs);

// Order-independent summation used for every reduction above.
double pairwise_sum(std::span<const double> values);

}  // namespace surf
