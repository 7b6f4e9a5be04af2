#include "vcap/nn/graph.hpp"

#include "vcap/error.hpp"

namespace vcap::nn {

Var Graph::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Graph::leaf(Tensor value) { return push(std::move(value), record_, nullptr); }

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Node node;
  node.param = &p;
  node.requires_grad = record_;
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, id);
  return Var{id};
}

const Tensor& Graph::value_of(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->tensor : n.value;
}

const Tensor& Graph::value(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw Error("invalid graph variable");
  return value_of(v.id);
}

Var Graph::push(Tensor value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(fn);
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  return Var{id};
}

bool Graph::any_requires_grad(std::initializer_list<Var> vars) const {
  if (!record_) return false;
  for (Var v : vars) {
    if (v.valid() && nodes_[v.id].requires_grad) return true;
  }
  return false;
}

std::span<double> Graph::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value_of(id).size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (!record_) throw Error("backward() on a graph built without recording");
  if (value(loss).size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_string(value(loss).shape()));
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] += 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    auto dst = n.param->tensor.grad();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
  }
}

}  // namespace vcap::nn
