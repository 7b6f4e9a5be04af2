#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "vcap/nn/tensor.hpp"

namespace vcap::nn {

struct Parameter {
  std::string name;
  Tensor tensor;  // value plus gradient slot
  bool frozen = false;
};

/// Named, ordered collection of trainable tensors.
///
/// Addresses of stored parameters are stable for the lifetime of the store,
/// so graphs may bind to them directly. A frozen parameter still receives
/// gradients but is skipped by the optimizer.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(const std::string& name, Tensor value, bool frozen = false);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  /// Freezes/unfreezes every parameter whose name starts with `prefix`.
  void set_frozen_prefix(const std::string& prefix, bool frozen);
  void set_frozen(const std::string& name, bool frozen) { get(name).frozen = frozen; }

  void zero_grad();
  std::size_t element_count() const;

  /// Bitwise equality of names, shapes, values and frozen flags.
  bool same_values(const ParamStore& other) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace vcap::nn
