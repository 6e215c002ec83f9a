#include "semlink/optimizer.hpp"

#include <cmath>

#include "semlink/errors.hpp"

namespace semlink {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) {
    throw ContractError("ParamStore: duplicate parameter name '" + name + "'");
  }
  Entry e;
  e.name = name;
  e.m = Tensor(init.shape());
  e.v = Tensor(init.shape());
  e.value = std::move(init);
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("ParamStore: unknown parameter '" + name + "'");
  }
  return entries_[it->second].value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

void ParamStore::adam_step(const std::vector<Tensor>& grads,
                           const AdamConfig& cfg) {
  if (grads.size() != entries_.size()) {
    throw ContractError("adam_step: got " + std::to_string(grads.size()) +
                        " gradients for " + std::to_string(entries_.size()) +
                        " parameters");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!grads[i].same_shape(entries_[i].value)) {
      throw ContractError("adam_step: gradient shape " + grads[i].shape_str() +
                          " does not match parameter '" + entries_[i].name +
                          "' " + entries_[i].value.shape_str());
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Entry& e = entries_[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      e.m[j] = cfg.beta1 * e.m[j] + (1.0 - cfg.beta1) * g[j];
      e.v[j] = cfg.beta2 * e.v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = e.m[j] / bc1;
      const double vhat = e.v[j] / bc2;
      e.value[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace semlink
