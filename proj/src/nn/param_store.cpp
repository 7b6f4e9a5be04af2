#include "vcap/nn/param_store.hpp"

#include "vcap/error.hpp"

namespace vcap::nn {

ParamStore::ParamStore(const ParamStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::add(const std::string& name, Tensor value, bool frozen) {
  if (contains(name)) throw Error("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value), frozen}));
  return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return *params_[it->second];
}

void ParamStore::set_frozen_prefix(const std::string& prefix, bool frozen) {
  for (auto& p : params_) {
    if (p->name.compare(0, prefix.size(), prefix) == 0) p->frozen = frozen;
  }
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->tensor.zero_grad();
}

std::size_t ParamStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->tensor.size();
  return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = *params_[i];
    const auto& b = *other.params_[i];
    if (a.name != b.name || a.frozen != b.frozen || !(a.tensor == b.tensor)) return false;
  }
  return true;
}

}  // namespace vcap::nn
