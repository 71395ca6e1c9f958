#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surf/errors.hpp"
#include "surf/metrics.hpp"

using namespace surf;

namespace {

FieldTensor truth_tensor(std::size_t steps, std::size_t nodes, Rng& rng) {
  auto t = FieldTensor::zeros(TensorKind::Fields, steps + 1, nodes, 0);
  for (auto& v : t.data) v = rng.uniform(-10, 10);
  return t;
}

FieldTensor as_prediction(const FieldTensor& truth, int horizon) {
  auto p = FieldTensor::zeros(TensorKind::Prediction, static_cast<std::size_t>(horizon), truth.nodes, 1);
  for (int k = 0; k < horizon; ++k) {
    for (std::size_t i = 0; i < truth.nodes; ++i) {
      for (int q = 0; q < 4; ++q) p.at(static_cast<std::size_t>(k), i, q) = truth.at(static_cast<std::size_t>(k + 1), i, q);
    }
  }
  return p;
}

// Straight transcription of the velocity formula.
double oracle_velocity(const std::vector<ScoredPair>& pairs, int h) {
  double total = 0;
  for (const auto& sp : pairs) {
    const auto n = sp.truth->nodes;
    for (int t = 1; t <= h; ++t) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(t - sp.prediction->first_step);
        const double du = sp.prediction->at(k, i, 0) - sp.truth->at(static_cast<std::size_t>(t), i, 0);
        const double dv = sp.prediction->at(k, i, 1) - sp.truth->at(static_cast<std::size_t>(t), i, 1);
        s += std::sqrt(du * du + dv * dv);
      }
      total += s / (std::sqrt(2.0) * static_cast<double>(n));
    }
  }
  return total / (static_cast<double>(pairs.size()) * h);
}

}  // namespace

TEST_CASE("rmse unit cases") {
  auto truth = FieldTensor::zeros(TensorKind::Fields, 2, 1, 0);
  auto pred = FieldTensor::zeros(TensorKind::Prediction, 1, 1, 1);
  pred.at(0, 0, 0) = 1.0;
  pred.at(0, 0, 1) = 1.0;
  pred.at(0, 0, 3) = 3.0;
  const ScoredPair p{0, &pred, &truth};
  CHECK(rmse_velocity(std::span(&p, 1), 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse_scalar(std::span(&p, 1), 1, Quantity::Temperature) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(rmse_scalar(std::span(&p, 1), 1, Quantity::Pressure) == 0.0);
  // Negative error sign does not matter.
  pred.at(0, 0, 3) = -3.0;
  CHECK(rmse_scalar(std::span(&p, 1), 1, Quantity::Temperature) == doctest::Approx(3.0));
}

TEST_CASE("rmse identities and properties") {
  Rng rng(5);
  const auto a = truth_tensor(6, 20, rng), b = truth_tensor(6, 31, rng);
  const auto pa = as_prediction(a, 5), pb = as_prediction(b, 5);
  std::vector<ScoredPair> exact = {{0, &pa, &a}, {1, &pb, &b}};
  const auto zero = rmse_all(exact, 5);
  CHECK(zero.v == 0.0);
  CHECK(zero.p == 0.0);
  CHECK(zero.t == 0.0);

  // Constant bias b on every scalar.
  auto biased = pa;
  for (std::size_t k = 0; k < biased.steps * biased.nodes; ++k) biased.data[4 * k + 2] += 0.75;
  const ScoredPair bp{0, &biased, &a};
  CHECK(rmse_scalar(std::span(&bp, 1), 5, Quantity::Pressure) == doctest::Approx(0.75).epsilon(1e-12));

  // Random predictions vs. the formula oracle; order invariance; equal-copy averaging.
  auto ra = pa, rb = pb;
  for (auto& v : ra.data) v += rng.uniform(-1, 1);
  for (auto& v : rb.data) v += rng.uniform(-1, 1);
  std::vector<ScoredPair> two = {{0, &ra, &a}, {1, &rb, &b}};
  const double r = rmse_velocity(two, 5);
  CHECK(r == doctest::Approx(oracle_velocity(two, 5)).epsilon(1e-12));
  std::vector<ScoredPair> swapped = {two[1], two[0]};
  CHECK(rmse_velocity(swapped, 5) == r);
  std::vector<ScoredPair> copies = {two[0], two[0]};
  CHECK(rmse_velocity(copies, 5) == doctest::Approx(rmse_velocity(std::span(&two[0], 1), 5)).epsilon(1e-14));

  // Inflating every error strictly increases the score.
  auto worse = ra;
  for (std::size_t k = 0; k < worse.data.size(); ++k) {
    const int step = static_cast<int>(k / (4 * worse.nodes)) + 1;
    worse.data[k] = a.data[static_cast<std::size_t>(step) * a.nodes * 4 + k % (4 * a.nodes)] +
                    1.5 * (ra.data[k] - a.data[static_cast<std::size_t>(step) * a.nodes * 4 + k % (4 * a.nodes)]);
  }
  const ScoredPair w{0, &worse, &a}, o{0, &ra, &a};
  CHECK(rmse_velocity(std::span(&w, 1), 5) == doctest::Approx(1.5 * rmse_velocity(std::span(&o, 1), 5)).epsilon(1e-12));
  CHECK(rmse_scalar(std::span(&w, 1), 5, Quantity::Temperature) > rmse_scalar(std::span(&o, 1), 5, Quantity::Temperature));

  // A horizon shorter than the prediction scores a prefix.
  CHECK(rmse_velocity(two, 3) == doctest::Approx(oracle_velocity(two, 3)).epsilon(1e-12));
}

TEST_CASE("rmse alignment errors") {
  Rng rng(6);
  const auto a = truth_tensor(4, 10, rng), other = truth_tensor(4, 11, rng);
  const auto pa = as_prediction(a, 4), po = as_prediction(other, 4);
  const ScoredPair bad{7, &po, &a};
  CHECK_THROWS_AS(rmse_velocity(std::span(&bad, 1), 4), AlignmentError);
  try {
    rmse_velocity(std::span(&bad, 1), 4);
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
  CHECK_THROWS_AS(rmse_velocity(std::span<const ScoredPair>(), 4), AlignmentError);
  const ScoredPair ok{0, &pa, &a};
  CHECK_THROWS_AS(rmse_velocity(std::span(&ok, 1), 5), HorizonError);
  CHECK_THROWS_AS(rmse_velocity(std::span(&ok, 1), 0), HorizonError);
  CHECK(default_horizon(300) == 250);
  CHECK(default_horizon(60) == 60);
}

TEST_CASE("performance score") {
  const RmseTriple sigma{2.0, 30.0, 5.0};
  CHECK(performance_score(sigma, sigma).ps == doctest::Approx(1.0));
  CHECK(performance_score({0, 0, 0}, sigma).ps == 0.0);
  const auto r = performance_score({0.073 * 2.0, 0.142 * 30.0, 0.068 * 5.0}, sigma);
  CHECK(r.ps_v == doctest::Approx(0.073));
  CHECK(r.ps_p == doctest::Approx(0.142));
  CHECK(r.ps_t == doctest::Approx(0.068));
  CHECK(std::abs(r.ps - 0.094) <= 0.0005);
  CHECK_THROWS_AS(performance_score(sigma, {1.0, 0.0, 1.0}), DegenerateDatasetError);
}

TEST_CASE("generalization scores") {
  CHECK(generalization_score(0.3, 0.3) == 1.0);
  CHECK(generalization_score(0.6, 0.3) == doctest::Approx(2.0));
  CHECK_THROWS_AS(generalization_score(0.6, 0.0), UndefinedRatioError);
  const auto g = generalization_score(RmseTriple{1, 4, 9}, RmseTriple{1, 2, 3});
  CHECK(g.v == 1.0);
  CHECK(g.p == 2.0);
  CHECK(g.t == 3.0);
  CHECK(g.gs == doctest::Approx(2.0));
  const RmseTriple self{0.2, 11.0, 4.0};
  CHECK(generalization_score(self, self).gs == 1.0);
}

TEST_CASE("SURF aggregation reproduces the published table") {
  auto build = [](double m, double t, double r, double d) {
    GsMatrix gs;
    gs[{DatasetVariant::Full, DatasetVariant::Mesh}] = m;
    gs[{DatasetVariant::Base, DatasetVariant::Topology}] = t;
    gs[{DatasetVariant::Base, DatasetVariant::Range}] = r;
    gs[{DatasetVariant::Base, DatasetVariant::Dynamic}] = d;
    gs[{DatasetVariant::Base, DatasetVariant::Base}] = 1.0;
    return gs;
  };
  const auto mgn = surf_scores(build(1.07, 3.10, 1.30, 5.76));
  CHECK(mgn.mesh == 1.07);
  CHECK(mgn.dynamic == 5.76);
  CHECK(mgn.average == doctest::Approx(2.8075));
  CHECK(std::abs(mgn.average - 2.81) <= 0.005 + 1e-12);
  const auto eagle = surf_scores(build(1.01, 3.68, 1.08, 2.17));
  CHECK(eagle.average == doctest::Approx(1.985));
  CHECK(std::abs(eagle.average - 1.98) <= 0.005 + 1e-12);
  CHECK(surf_scores(build(1, 1, 1, 1)).average == 1.0);

  auto partial = build(1, 1, 1, 1);
  partial.erase({DatasetVariant::Base, DatasetVariant::Range});
  partial.erase({DatasetVariant::Full, DatasetVariant::Mesh});
  try {
    surf_scores(partial);
    FAIL("expected an incomplete matrix");
  } catch (const IncompleteMatrixError& e) {
    const std::string what = e.what();
    CHECK(what.find("range") != std::string::npos);
    CHECK(what.find("mesh") != std::string::npos);
  }
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>()) == 0.0);
  std::vector<double> tiny(1 << 20, 0.1);
  CHECK(std::abs(pairwise_sum(tiny) - 0.1 * (1 << 20)) < 1e-7);
}
