#include "surf/baselines.hpp"

#include <algorithm>
#include <string>

#include "surf/errors.hpp"

namespace surf {

namespace {

void check_horizon(const FieldTensor& truth, int horizon) {
  if (horizon < 0) throw HorizonError("negative horizon " + std::to_string(horizon));
  if (truth.steps == 0 || static_cast<int>(truth.steps) - 1 < horizon) {
    throw HorizonError("horizon " + std::to_string(horizon) + " exceeds the " +
                       std::to_string(truth.steps == 0 ? 0 : truth.steps - 1) + " stored steps");
  }
}

}  // namespace

std::string_view baseline_name(BaselineKind k) {
  return k == BaselineKind::Persistence ? "persistence" : "extrapolation";
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "persistence") return BaselineKind::Persistence;
  if (name == "extrapolation" || name == "linear") return BaselineKind::LinearExtrapolation;
  throw ConfigError("unknown baseline '" + std::string(name) + "' (persistence, extrapolation)");
}

FieldTensor persistence_predict(const FieldTensor& truth, int horizon) {
  check_horizon(truth, horizon);
  const std::size_t n = truth.nodes;
  FieldTensor out = FieldTensor::zeros(TensorKind::Prediction, static_cast<std::size_t>(horizon), n, 1);
  for (std::size_t s = 0; s < out.steps; ++s) {
    std::copy(truth.data.begin(), truth.data.begin() + static_cast<std::ptrdiff_t>(4 * n),
              out.data.begin() + static_cast<std::ptrdiff_t>(4 * n * s));
  }
  return out;
}

FieldTensor extrapolate_predict(const FieldTensor& truth, int horizon) {
  if (truth.steps < 2) {
    throw InsufficientHistoryError("extrapolation needs 2 stored states, have " + std::to_string(truth.steps));
  }
  check_horizon(truth, horizon);
  const std::size_t n = truth.nodes;
  FieldTensor out = FieldTensor::zeros(TensorKind::Prediction, static_cast<std::size_t>(horizon), n, 1);
  for (std::size_t s = 0; s < out.steps; ++s) {
    const double t = static_cast<double>(s + 1);
    for (std::size_t k = 0; k < 4 * n; ++k) {
      const double x0 = truth.data[k], x1 = truth.data[4 * n + k];
      out.data[4 * n * s + k] = x0 + t * (x1 - x0);
    }
  }
  return out;
}

FieldTensor baseline_predict(BaselineKind k, const FieldTensor& truth, int horizon) {
  return k == BaselineKind::Persistence ? persistence_predict(truth, horizon) : extrapolate_predict(truth, horizon);
}

}  // namespace surf
