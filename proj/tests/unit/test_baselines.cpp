#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "surf/baselines.hpp"
#include "surf/errors.hpp"
#include "surf/metrics.hpp"

using namespace surf;

namespace {

// One node; quantity q follows f(step), everything else zero.
FieldTensor series(int steps, int q, double (*f)(int)) {
  auto t = FieldTensor::zeros(TensorKind::Fields, static_cast<std::size_t>(steps) + 1, 1, 0);
  for (int k = 0; k <= steps; ++k) t.at(static_cast<std::size_t>(k), 0, q) = f(k);
  return t;
}

double scalar_rmse(const FieldTensor& pred, const FieldTensor& truth, int h, Quantity q) {
  const ScoredPair p{0, &pred, &truth};
  return rmse_scalar(std::span(&p, 1), h, q);
}

}  // namespace

TEST_CASE("names") {
  CHECK(baseline_name(BaselineKind::Persistence) == "persistence");
  CHECK(parse_baseline("extrapolation") == BaselineKind::LinearExtrapolation);
  CHECK(parse_baseline(baseline_name(BaselineKind::Persistence)) == BaselineKind::Persistence);
  CHECK_THROWS_AS(parse_baseline("oracle"), ConfigError);
}

TEST_CASE("persistence") {
  const auto flat = series(5, 3, [](int) { return 300.0; });
  const auto p = persistence_predict(flat, 5);
  CHECK(p.kind == TensorKind::Prediction);
  CHECK(p.first_step == 1);
  CHECK(p.steps == 5);
  CHECK(scalar_rmse(p, flat, 5, Quantity::Temperature) == 0.0);

  // drift delta per step, H = 2: (|d| + |2d|) / 2
  const double delta = -0.4;
  const auto drift = series(3, 2, [](int k) { return -0.4 * k; });
  CHECK(scalar_rmse(persistence_predict(drift, 2), drift, 2, Quantity::Pressure) ==
        doctest::Approx(1.5 * std::abs(delta)).epsilon(1e-14));

  const auto empty = persistence_predict(flat, 0);
  CHECK(empty.steps == 0);
  CHECK_THROWS_AS(scalar_rmse(empty, flat, 0, Quantity::Temperature), HorizonError);
  CHECK_THROWS_AS(persistence_predict(flat, 6), HorizonError);
  CHECK_THROWS_AS(persistence_predict(flat, -1), HorizonError);
}

TEST_CASE("linear extrapolation") {
  const auto lin = series(6, 0, [](int k) { return 2.0 + 0.5 * k; });
  const auto e = extrapolate_predict(lin, 6);
  const ScoredPair pair{0, &e, &lin};
  CHECK(rmse_velocity(std::span(&pair, 1), 6) < 1e-12);
  for (int k = 0; k < 6; ++k) CHECK(e.at(static_cast<std::size_t>(k), 0, 0) == doctest::Approx(2.0 + 0.5 * (k + 1)));

  const auto flat = series(4, 3, [](int) { return 310.0; });
  CHECK(extrapolate_predict(flat, 4).data == persistence_predict(flat, 4).data);

  // a t^2 with a = 3: extrapolation error at step t is a t (t - 1).
  const auto quad = series(4, 3, [](int k) { return 3.0 * k * k; });
  for (int h = 1; h <= 4; ++h) {
    double oracle = 0;
    for (int t = 1; t <= h; ++t) oracle += 3.0 * t * (t - 1);
    oracle /= h;
    CHECK(scalar_rmse(extrapolate_predict(quad, h), quad, h, Quantity::Temperature) ==
          doctest::Approx(oracle).epsilon(1e-14));
  }
  CHECK(scalar_rmse(extrapolate_predict(quad, 1), quad, 1, Quantity::Temperature) == 0.0);

  const auto one = FieldTensor::zeros(TensorKind::Fields, 1, 3, 0);
  CHECK_THROWS_AS(extrapolate_predict(one, 0), InsufficientHistoryError);
}

TEST_CASE("persistence bounds extrapolation on linear truth") {
  Rng rng(8);
  auto t = FieldTensor::zeros(TensorKind::Fields, 8, 12, 0);
  std::vector<double> base(48), slope(48);
  for (auto& v : base) v = rng.uniform(-5, 5);
  for (auto& v : slope) v = rng.uniform(-1, 1);
  for (std::size_t k = 0; k < 8; ++k) {
    for (std::size_t j = 0; j < 48; ++j) t.data[k * 48 + j] = base[j] + static_cast<double>(k) * slope[j];
  }
  const auto p = persistence_predict(t, 7), e = extrapolate_predict(t, 7);
  const ScoredPair pp{0, &p, &t}, pe{0, &e, &t};
  const auto rp = rmse_all(std::span(&pp, 1), 7), re = rmse_all(std::span(&pe, 1), 7);
  CHECK(rp.v >= re.v);
  CHECK(rp.p >= re.p);
  CHECK(rp.t >= re.t);
  CHECK(re.t < 1e-12);

  // Baseline files round trip through the prediction schema.
  const auto path = std::filesystem::temp_directory_path() / "surf_baseline_pred.bin";
  write_field_tensor(path, e);
  const auto back = read_field_tensor(path);
  CHECK(back.kind == TensorKind::Prediction);
  CHECK(back.data == e.data);
  CHECK(back.horizon() == 7);
}
