#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "semlink/tensor.hpp"

namespace semlink {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameter tensors with stable iteration order plus Adam moment state.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;
    Tensor v;
  };

  Tensor& add(const std::string& name, Tensor init);

  bool contains(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t count() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  // Bias-corrected Adam update; grads must align with entry order.
  void adam_step(const std::vector<Tensor>& grads, const AdamConfig& cfg);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

}  // namespace semlink
