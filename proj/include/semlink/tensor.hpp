#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "semlink/errors.hpp"

namespace semlink {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// pipeline needs; shape is kept general so reductions can return scalars.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(count(shape_), fill) {}

  static Tensor scalar(double v) { return Tensor({1}, v); }

  static Tensor row(std::initializer_list<double> vals) {
    Tensor t({1, vals.size()});
    std::size_t i = 0;
    for (double v : vals) t.data_[i++] = v;
    return t;
  }

  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    if (count(t.shape_) != t.data_.size()) {
      throw ShapeError("Tensor::from: shape " + shape_str(t.shape_) +
                       " does not hold " + std::to_string(t.data_.size()) +
                       " values");
    }
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rank() const { return shape_.size(); }
  std::size_t rows() const { return rank() >= 1 ? shape_[0] : 0; }
  std::size_t cols() const { return rank() >= 2 ? shape_[1] : 1; }

  bool is_scalar() const { return size() == 1; }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) os << "x";
      os << s[i];
    }
    os << "]";
    return os.str();
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

}  // namespace semlink
