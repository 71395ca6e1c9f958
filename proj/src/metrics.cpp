#include "surf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "surf/errors.hpp"

namespace surf {

namespace {

void check_pair(const ScoredPair& sp, int horizon) {
  const std::string who = "datapoint " + std::to_string(sp.id);
  if (sp.prediction == nullptr || sp.truth == nullptr) throw AlignmentError(who + ": missing prediction or truth");
  const auto& pr = *sp.prediction;
  const auto& gt = *sp.truth;
  if (pr.nodes != gt.nodes) {
    throw AlignmentError(who + ": prediction has " + std::to_string(pr.nodes) + " nodes, ground truth " +
                         std::to_string(gt.nodes));
  }
  if (pr.first_step < 0 || pr.first_step > 1) {
    throw AlignmentError(who + ": prediction starts at step " + std::to_string(pr.first_step));
  }
  if (pr.last_step() < horizon) {
    throw HorizonError(who + ": prediction covers steps up to " + std::to_string(pr.last_step()) + ", horizon is " +
                       std::to_string(horizon));
  }
  if (static_cast<int>(gt.steps) - 1 < horizon) {
    throw HorizonError(who + ": ground truth holds " + std::to_string(gt.steps - 1) + " steps, horizon is " +
                       std::to_string(horizon));
  }
}

// Mean over (datapoint, step) of a per-step node average.
template <class NodeError>
double aggregate(std::span<const ScoredPair> pairs, int horizon, double normalizer, NodeError err) {
  if (horizon <= 0) throw HorizonError("horizon must be positive, got " + std::to_string(horizon));
  if (pairs.empty()) throw AlignmentError("no datapoints to score");
  for (const auto& sp : pairs) check_pair(sp, horizon);
  std::vector<double> terms;
  terms.reserve(pairs.size() * static_cast<std::size_t>(horizon));
  std::vector<double> node_terms;
  for (const auto& sp : pairs) {
    const auto& pr = *sp.prediction;
    const auto& gt = *sp.truth;
    const std::size_t n = gt.nodes;
    node_terms.resize(n);
    for (int t = 1; t <= horizon; ++t) {
      const auto ps = static_cast<std::size_t>(t - pr.first_step), gs = static_cast<std::size_t>(t);
      for (std::size_t i = 0; i < n; ++i) node_terms[i] = err(pr, ps, gt, gs, i);
      terms.push_back(n == 0 ? 0.0 : pairwise_sum(node_terms) / (normalizer * static_cast<double>(n)));
    }
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

int column(Quantity q) {
  switch (q) {
    case Quantity::Pressure: return 2;
    case Quantity::Temperature: return 3;
    case Quantity::Velocity: break;
  }
  throw Error("velocity is not a scalar quantity");
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

int default_horizon(int steps) { return std::min(250, steps); }

double rmse_velocity(std::span<const ScoredPair> pairs, int horizon) {
  return aggregate(pairs, horizon, std::sqrt(2.0),
                   [](const FieldTensor& pr, std::size_t ps, const FieldTensor& gt, std::size_t gs, std::size_t i) {
                     return std::hypot(pr.at(ps, i, 0) - gt.at(gs, i, 0), pr.at(ps, i, 1) - gt.at(gs, i, 1));
                   });
}

double rmse_scalar(std::span<const ScoredPair> pairs, int horizon, Quantity q) {
  const int c = column(q);
  return aggregate(pairs, horizon, 1.0,
                   [c](const FieldTensor& pr, std::size_t ps, const FieldTensor& gt, std::size_t gs, std::size_t i) {
                     return std::abs(pr.at(ps, i, c) - gt.at(gs, i, c));
                   });
}

RmseTriple rmse_all(std::span<const ScoredPair> pairs, int horizon) {
  return {rmse_velocity(pairs, horizon), rmse_scalar(pairs, horizon, Quantity::Pressure),
          rmse_scalar(pairs, horizon, Quantity::Temperature)};
}

ScoreReport performance_score(const RmseTriple& rmse, const RmseTriple& sigma) {
  if (!(sigma.v > 0) || !(sigma.p > 0) || !(sigma.t > 0)) {
    throw DegenerateDatasetError("standard deviation is zero for at least one quantity (v " + std::to_string(sigma.v) +
                                 ", p " + std::to_string(sigma.p) + ", T " + std::to_string(sigma.t) + ")");
  }
  ScoreReport r;
  r.rmse = rmse;
  r.ps_v = rmse.v / sigma.v;
  r.ps_p = rmse.p / sigma.p;
  r.ps_t = rmse.t / sigma.t;
  r.ps = (r.ps_v + r.ps_p + r.ps_t) / 3.0;
  return r;
}

double generalization_score(double cross_rmse, double self_rmse) {
  if (!(self_rmse > 0)) throw UndefinedRatioError("self RMSE is zero; generalization ratio undefined");
  return cross_rmse / self_rmse;
}

GsEntry generalization_score(const RmseTriple& cross, const RmseTriple& self) {
  GsEntry g;
  g.v = generalization_score(cross.v, self.v);
  g.p = generalization_score(cross.p, self.p);
  g.t = generalization_score(cross.t, self.t);
  g.gs = (g.v + g.p + g.t) / 3.0;
  return g;
}

SurfScores surf_scores(const GsMatrix& gs) {
  std::string missing;
  for (const auto& pair : kSurfPairs) {
    if (gs.count(pair) == 0) {
      if (!missing.empty()) missing += ", ";
      missing += std::string(variant_name(pair.first)) + "->" + std::string(variant_name(pair.second));
    }
  }
  if (!missing.empty()) throw IncompleteMatrixError("GS matrix lacks " + missing + "; evaluate those pairs first");
  SurfScores s;
  s.mesh = gs.at(kSurfPairs[0]);
  s.topology = gs.at(kSurfPairs[1]);
  s.range = gs.at(kSurfPairs[2]);
  s.dynamic = gs.at(kSurfPairs[3]);
  s.average = (s.mesh + s.topology + s.range + s.dynamic) / 4.0;
  return s;
}

}  // namespace surf
