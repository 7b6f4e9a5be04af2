#include "vcap/nn/init.hpp"

namespace vcap::nn {

Tensor init_uniform(const Shape& shape, Rng& rng, double range) {
  Tensor t(shape);
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * range;
  return t;
}

}  // namespace vcap::nn
