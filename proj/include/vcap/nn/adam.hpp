#pragma once

#include <cstdint>
#include <vector>

#include "vcap/nn/param_store.hpp"

namespace vcap::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments per parameter (same order as the ParamStore) and the step counter.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamStore& params);
  bool matches(const ParamStore& params) const;
};

/// One bias-corrected Adam update. Frozen parameters are skipped (their
/// moments untouched); the step counter advances by exactly one.
/// Throws if an unfrozen parameter carries no gradient.
void adam_step(ParamStore& params, AdamState& state, double lr, const AdamConfig& config = {});

}  // namespace vcap::nn
