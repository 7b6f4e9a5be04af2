#include "vcap/nn/adam.hpp"

#include <cmath>
#include <utility>

#include "vcap/error.hpp"

namespace vcap::nn {

AdamState AdamState::for_params(const ParamStore& params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p->tensor.shape());
    s.second_moment.emplace_back(p->tensor.shape());
  }
  return s;
}

bool AdamState::matches(const ParamStore& params) const {
  if (first_moment.size() != params.size() || second_moment.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (first_moment[i].shape() != params[i].tensor.shape()) return false;
    if (second_moment[i].shape() != params[i].tensor.shape()) return false;
  }
  return true;
}

void adam_step(ParamStore& params, AdamState& state, double lr, const AdamConfig& config) {
  if (!state.matches(params)) throw DimensionError("adam state does not match parameter store");
  for (const auto& p : params) {
    if (!p->frozen && !p->tensor.has_grad()) throw Error("adam: parameter '" + p->name + "' has no gradient");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (p.frozen) continue;
    auto value = p.tensor.data();
    auto grad = std::as_const(p.tensor).grad();
    auto m = state.first_moment[k].data();
    auto v = state.second_moment[k].data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

}  // namespace vcap::nn
