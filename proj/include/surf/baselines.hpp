#pragma once

#include <string_view>

#include "surf/tensor_io.hpp"

namespace surf {

enum class BaselineKind { Persistence, LinearExtrapolation };

std::string_view baseline_name(BaselineKind k);
BaselineKind parse_baseline(std::string_view name);

// Every step 1..H repeats state 0.
FieldTensor persistence_predict(const FieldTensor& truth, int horizon);
// Step t is state0 + t * (state1 - state0).
FieldTensor extrapolate_predict(const FieldTensor& truth, int horizon);

FieldTensor baseline_predict(BaselineKind k, const FieldTensor& truth, int horizon);

}  // namespace surf
