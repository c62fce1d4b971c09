#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "poirec/nn/tape.hpp"

namespace poirec::nn {

// Builds a fresh scalar graph each call; must be deterministic in the
// parameter values.
using ScalarGraphFn = std::function<Var(Tape&)>;

// Compares tape gradients against central finite differences
// (f(x+h) - f(x-h)) / 2h coordinate by coordinate. For large tensors a seeded
// sample of at least `sample_per_param` coordinates is checked. The relative
// error of a pair (a, b) is |a - b| / max(1e-8, |a| + |b|).
double gradient_check(const ScalarGraphFn& build, const std::vector<Parameter*>& params,
                      double h = 1e-5, int sample_per_param = 64, std::uint64_t seed = 0);

}  // namespace poirec::nn
