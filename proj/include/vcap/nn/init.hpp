#pragma once

#include "vcap/nn/ops.hpp"
#include "vcap/nn/tensor.hpp"

namespace vcap::nn {

inline constexpr double kInitRange = 0.1;

/// i.i.d. uniform values in [-range, range]; deterministic for a given generator state.
Tensor init_uniform(const Shape& shape, Rng& rng, double range = kInitRange);

}  // namespace vcap::nn
