#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vcap/nn/param_store.hpp"
#include "vcap/nn/tensor.hpp"

namespace vcap::nn {

/// Handle to a node of a Graph. Only meaningful together with its graph.
struct Var {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
};

/// Reverse-mode tape over a dynamically built computation.
///
/// Nodes are appended in evaluation order, so the tape is already a
/// topological order and backward() is a single reverse sweep. A graph built
/// with `record = false` stores values only (inference).
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;

  explicit Graph(bool record = true) : record_(record) { nodes_.reserve(256); }

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  /// Free input that receives a gradient (used by gradient checks).
  Var leaf(Tensor value);
  /// Binds a stored parameter; repeated calls return the same node.
  Var param(Parameter& p);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Gradient accumulated at a node after backward(); empty span if none reached it.
  std::span<const double> grad(Var v) const { return nodes_[v.id].grad; }

  /// Reverse sweep from a scalar loss. Parameter gradients are accumulated
  /// (added) into their gradient slots; callers zero them beforehand.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Op construction interface.
  Var push(Tensor value, bool requires_grad, BackwardFn fn);
  bool any_requires_grad(std::initializer_list<Var> vars) const;
  /// Gradient buffer of node `id`, allocated as zeros on first use.
  std::span<double> grad_buffer(std::uint32_t id);
  std::span<const double> out_grad(std::uint32_t id) const { return nodes_[id].grad; }
  const Tensor& value_of(std::uint32_t id) const;

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    std::vector<double> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool record_;
};

}  // namespace vcap::nn
