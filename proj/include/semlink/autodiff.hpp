#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semlink/tensor.hpp"

namespace semlink {

enum class OpKind : std::uint8_t {
  kInput,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kAddRowwise,
  kAffine,
  kRelu,
  kSoftmax,
  kLog,
  kClamp,
  kSum,
  kMean,
  kSumRows,
  kPickPerRow,
  kGatherCols,
  kScatterCols,
  kRowPowerNormalize,
  kComplexScale,
  kHardTriplet,
};

const char* op_name(OpKind op);

// Handle into a Graph's node tape.
struct Var {
  std::uint32_t i = 0xffffffffu;
  bool valid() const { return i != 0xffffffffu; }
};

// Reverse-mode tape over dense real tensors. The graph is rebuilt for every
// forward pass; append order is a topological order, so backward() is a
// single reverse sweep with additive fan-out accumulation.
class Graph {
 public:
  Var input(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // x[r x c] + bias[1 x c], broadcast over rows.
  Var add_rowwise(Var x, Var bias);
  // scale * x + shift, elementwise.
  Var affine(Var x, double scale, double shift);
  Var relu(Var x);
  // Row-wise, stabilized by row-max subtraction.
  Var softmax(Var x);
  Var log(Var x);
  Var clamp(Var x, double lo, double hi);
  Var sum(Var x);
  Var mean(Var x);
  // [r x c] -> [r x 1].
  Var sum_rows(Var x);
  // out[r, 0] = x[r, col_per_row[r]].
  Var pick_per_row(Var x, const std::vector<std::size_t>& col_per_row);
  // out[:, j] = x[:, cols[j]].
  Var gather_cols(Var x, const std::vector<std::size_t>& cols);
  // Zero-filled [r x width] with x written at the named columns.
  Var scatter_cols(Var x, const std::vector<std::size_t>& cols,
                   std::size_t width);
  // Each row rescaled to squared norm target_sq_norm (rows are interleaved
  // re/im pairs of one transmission).
  Var row_power_normalize(Var x, double target_sq_norm);
  // Complex multiply by h on interleaved re/im pairs.
  Var complex_scale(Var x, std::complex<double> h);
  // Batch-hard triplet loss over feature rows; ids give the identity of each
  // row. Returns a scalar.
  Var hard_triplet(Var feats, const std::vector<int>& ids, double margin);

  const Tensor& value(Var v) const { return node(v).value; }
  bool has_grad(Var v) const { return node(v).has_grad; }
  const Tensor& grad(Var v) const;

  // Reverse sweep from a scalar root.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Name of the earliest node holding a NaN/Inf value, if any.
  std::optional<std::string> first_nonfinite() const;

 private:
  struct Node {
    OpKind op = OpKind::kInput;
    Var p0, p1;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    double a0 = 0.0, a1 = 0.0;
    std::vector<std::size_t> idx;
    // Hard-triplet cache: per anchor, the chosen positive/negative row and
    // the two distances.
    std::vector<std::size_t> sel_pos, sel_neg;
    std::vector<double> d_pos, d_neg;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var push(Node n);
  Tensor& grad_slot(Var v);
  void backprop_node(std::uint32_t i);

  std::vector<Node> nodes_;
};

}  // namespace semlink
