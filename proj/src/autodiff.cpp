#include "semlink/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "semlink/errors.hpp"
#include "semlink/kernels.hpp"

namespace semlink {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kAddRowwise: return "add_rowwise";
    case OpKind::kAffine: return "affine";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLog: return "log";
    case OpKind::kClamp: return "clamp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kPickPerRow: return "pick_per_row";
    case OpKind::kGatherCols: return "gather_cols";
    case OpKind::kScatterCols: return "scatter_cols";
    case OpKind::kRowPowerNormalize: return "row_power_normalize";
    case OpKind::kComplexScale: return "complex_scale";
    case OpKind::kHardTriplet: return "hard_triplet";
  }
  return "?";
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.i >= nodes_.size()) {
    throw ContractError("graph: invalid node handle");
  }
  return nodes_[v.i];
}

Graph::Node& Graph::node(Var v) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node(v));
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (!n.has_grad) {
    throw ContractError("graph: no gradient accumulated for this node "
                        "(did backward() run, and is the node reachable?)");
  }
  return n.grad;
}

Tensor& Graph::grad_slot(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

Var Graph::input(Tensor value) {
  Node n;
  n.op = OpKind::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows()) {
    throw ShapeError("matmul: incompatible shapes " + ta.shape_str() + " vs " +
                     tb.shape_str());
  }
  Node n;
  n.op = OpKind::kMatmul;
  n.p0 = a;
  n.p1 = b;
  n.value = Tensor({ta.rows(), tb.cols()});
  kernels::matmul_nn(ta.data(), tb.data(), n.value.data(), ta.rows(),
                     ta.cols(), tb.cols());
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_shape(ta, tb, "add");
  Node n;
  n.op = OpKind::kAdd;
  n.p0 = a;
  n.p1 = b;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value[i] += tb[i];
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_shape(ta, tb, "sub");
  Node n;
  n.op = OpKind::kSub;
  n.p0 = a;
  n.p1 = b;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value[i] -= tb[i];
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_shape(ta, tb, "mul");
  Node n;
  n.op = OpKind::kMul;
  n.p0 = a;
  n.p1 = b;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value[i] *= tb[i];
  return push(std::move(n));
}

Var Graph::add_rowwise(Var x, Var bias) {
  const Tensor& tx = node(x).value;
  const Tensor& tb = node(bias).value;
  if (tx.rank() != 2 || tb.size() != tx.cols()) {
    throw ShapeError("add_rowwise: bias " + tb.shape_str() +
                     " does not match row width of " + tx.shape_str());
  }
  Node n;
  n.op = OpKind::kAddRowwise;
  n.p0 = x;
  n.p1 = bias;
  n.value = tx;
  const std::size_t c = tx.cols();
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    for (std::size_t j = 0; j < c; ++j) n.value[r * c + j] += tb[j];
  }
  return push(std::move(n));
}

Var Graph::affine(Var x, double scale, double shift) {
  Node n;
  n.op = OpKind::kAffine;
  n.p0 = x;
  n.a0 = scale;
  n.a1 = shift;
  n.value = node(x).value;
  for (double& v : n.value.values()) v = scale * v + shift;
  return push(std::move(n));
}

Var Graph::relu(Var x) {
  Node n;
  n.op = OpKind::kRelu;
  n.p0 = x;
  n.value = node(x).value;
  for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Graph::softmax(Var x) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2 || tx.cols() < 1) {
    throw ShapeError("softmax: expected [rows x classes], got " +
                     tx.shape_str());
  }
  Node n;
  n.op = OpKind::kSoftmax;
  n.p0 = x;
  n.value = Tensor(tx.shape());
  const std::size_t c = tx.cols();
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    const double* in = tx.data() + r * c;
    double* out = n.value.data() + r * c;
    double mx = in[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[j] = std::exp(in[j] - mx);
      denom += out[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] /= denom;
  }
  return push(std::move(n));
}

Var Graph::log(Var x) {
  Node n;
  n.op = OpKind::kLog;
  n.p0 = x;
  n.value = node(x).value;
  for (double& v : n.value.values()) v = std::log(v);
  return push(std::move(n));
}

Var Graph::clamp(Var x, double lo, double hi) {
  Node n;
  n.op = OpKind::kClamp;
  n.p0 = x;
  n.a0 = lo;
  n.a1 = hi;
  n.value = node(x).value;
  for (double& v : n.value.values()) v = std::min(std::max(v, lo), hi);
  return push(std::move(n));
}

Var Graph::sum(Var x) {
  Node n;
  n.op = OpKind::kSum;
  n.p0 = x;
  double acc = 0.0;
  for (double v : node(x).value.values()) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Var Graph::mean(Var x) {
  const Tensor& tx = node(x).value;
  if (tx.empty()) throw ContractError("mean: empty tensor");
  Node n;
  n.op = OpKind::kMean;
  n.p0 = x;
  double acc = 0.0;
  for (double v : tx.values()) acc += v;
  n.value = Tensor::scalar(acc / static_cast<double>(tx.size()));
  return push(std::move(n));
}

Var Graph::sum_rows(Var x) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2) {
    throw ShapeError("sum_rows: expected rank-2 tensor, got " + tx.shape_str());
  }
  Node n;
  n.op = OpKind::kSumRows;
  n.p0 = x;
  n.value = Tensor({tx.rows(), 1});
  const std::size_t c = tx.cols();
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += tx[r * c + j];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

Var Graph::pick_per_row(Var x, const std::vector<std::size_t>& col_per_row) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2 || col_per_row.size() != tx.rows()) {
    throw ShapeError("pick_per_row: need one column index per row of " +
                     tx.shape_str());
  }
  for (std::size_t c : col_per_row) {
    if (c >= tx.cols()) {
      throw ContractError("pick_per_row: column index " + std::to_string(c) +
                          " out of range for " + tx.shape_str());
    }
  }
  Node n;
  n.op = OpKind::kPickPerRow;
  n.p0 = x;
  n.idx = col_per_row;
  n.value = Tensor({tx.rows(), 1});
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    n.value[r] = tx[r * tx.cols() + col_per_row[r]];
  }
  return push(std::move(n));
}

Var Graph::gather_cols(Var x, const std::vector<std::size_t>& cols) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2) {
    throw ShapeError("gather_cols: expected rank-2 tensor, got " +
                     tx.shape_str());
  }
  for (std::size_t c : cols) {
    if (c >= tx.cols()) {
      throw ContractError("gather_cols: column " + std::to_string(c) +
                          " out of range for " + tx.shape_str());
    }
  }
  Node n;
  n.op = OpKind::kGatherCols;
  n.p0 = x;
  n.idx = cols;
  n.value = Tensor({tx.rows(), cols.size()});
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      n.value[r * cols.size() + j] = tx[r * tx.cols() + cols[j]];
    }
  }
  return push(std::move(n));
}

Var Graph::scatter_cols(Var x, const std::vector<std::size_t>& cols,
                        std::size_t width) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2 || tx.cols() != cols.size()) {
    throw ShapeError("scatter_cols: " + std::to_string(cols.size()) +
                     " target columns for " + tx.shape_str());
  }
  for (std::size_t c : cols) {
    if (c >= width) {
      throw ContractError("scatter_cols: column " + std::to_string(c) +
                          " out of range for width " + std::to_string(width));
    }
  }
  Node n;
  n.op = OpKind::kScatterCols;
  n.p0 = x;
  n.idx = cols;
  n.value = Tensor({tx.rows(), width});
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      n.value[r * width + cols[j]] = tx[r * cols.size() + j];
    }
  }
  return push(std::move(n));
}

Var Graph::row_power_normalize(Var x, double target_sq_norm) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2) {
    throw ShapeError("row_power_normalize: expected rank-2 tensor, got " +
                     tx.shape_str());
  }
  if (target_sq_norm <= 0.0) {
    throw ContractError("row_power_normalize: target squared norm must be > 0");
  }
  Node n;
  n.op = OpKind::kRowPowerNormalize;
  n.p0 = x;
  n.a0 = target_sq_norm;
  n.value = Tensor(tx.shape());
  const std::size_t c = tx.cols();
  const double scale = std::sqrt(target_sq_norm);
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    const double* in = tx.data() + r * c;
    double sq = 0.0;
    for (std::size_t j = 0; j < c; ++j) sq += in[j] * in[j];
    if (sq == 0.0) {
      throw DegenerateInputError(
          "row_power_normalize: zero row cannot be normalized");
    }
    const double f = scale / std::sqrt(sq);
    double* out = n.value.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) out[j] = f * in[j];
  }
  return push(std::move(n));
}

Var Graph::complex_scale(Var x, std::complex<double> h) {
  const Tensor& tx = node(x).value;
  if (tx.rank() != 2 || tx.cols() % 2 != 0) {
    throw ShapeError("complex_scale: expected even row width, got " +
                     tx.shape_str());
  }
  Node n;
  n.op = OpKind::kComplexScale;
  n.p0 = x;
  n.a0 = h.real();
  n.a1 = h.imag();
  n.value = Tensor(tx.shape());
  const std::size_t c = tx.cols();
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    const double* in = tx.data() + r * c;
    double* out = n.value.data() + r * c;
    for (std::size_t j = 0; j < c; j += 2) {
      out[j] = n.a0 * in[j] - n.a1 * in[j + 1];
      out[j + 1] = n.a0 * in[j + 1] + n.a1 * in[j];
    }
  }
  return push(std::move(n));
}

Var Graph::hard_triplet(Var feats, const std::vector<int>& ids,
                        double margin) {
  const Tensor& tx = node(feats).value;
  if (tx.rank() != 2 || ids.size() != tx.rows()) {
    throw ShapeError("hard_triplet: need one id per feature row of " +
                     tx.shape_str());
  }
  const std::size_t b = tx.rows();
  // Mining precondition: every anchor needs a positive and a negative.
  for (std::size_t a = 0; a < b; ++a) {
    bool has_pos = false, has_neg = false;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == a) continue;
      (ids[j] == ids[a] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
      throw ContractError(
          "hard_triplet: batch needs >=2 identities with >=2 samples each "
          "(row " + std::to_string(a) + " lacks a " +
          (has_pos ? "negative" : "positive") + ")");
    }
  }

  Tensor sq({b, b});
  kernels::pairwise_sq_dists(tx.data(), b, tx.cols(), sq.data());

  Node n;
  n.op = OpKind::kHardTriplet;
  n.p0 = feats;
  n.a0 = margin;
  n.sel_pos.resize(b);
  n.sel_neg.resize(b);
  n.d_pos.resize(b);
  n.d_neg.resize(b);
  double total = 0.0;
  for (std::size_t a = 0; a < b; ++a) {
    double dp = -1.0, dn = -1.0;
    std::size_t pi = 0, ni = 0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == a) continue;
      const double d = std::sqrt(sq[a * b + j]);
      if (ids[j] == ids[a]) {
        if (d > dp) {
          dp = d;
          pi = j;
        }
      } else if (dn < 0.0 || d < dn) {
        dn = d;
        ni = j;
      }
    }
    n.sel_pos[a] = pi;
    n.sel_neg[a] = ni;
    n.d_pos[a] = dp;
    n.d_neg[a] = dn;
    total += std::max(dp - dn + margin, 0.0);
  }
  n.value = Tensor::scalar(total / static_cast<double>(b));
  return push(std::move(n));
}

void Graph::backward(Var root) {
  Node& r = node(root);
  if (!r.value.is_scalar()) {
    throw ContractError("backward: root must be scalar, got " +
                        r.value.shape_str());
  }
  grad_slot(root)[0] += 1.0;
  for (std::uint32_t i = root.i + 1; i-- > 0;) {
    if (nodes_[i].has_grad && nodes_[i].op != OpKind::kInput) {
      backprop_node(i);
    }
  }
}

void Graph::backprop_node(std::uint32_t i) {
  // Copy the output gradient: grad_slot() below may grow nodes_ slots but
  // never reallocates nodes_ itself, so plain references are fine.
  Node& n = nodes_[i];
  const Tensor& g = n.grad;
  switch (n.op) {
    case OpKind::kInput:
      break;
    case OpKind::kMatmul: {
      const Tensor& a = node(n.p0).value;
      const Tensor& b = node(n.p1).value;
      Tensor& ga = grad_slot(n.p0);
      Tensor& gb = grad_slot(n.p1);
      kernels::matmul_nt_acc(g.data(), b.data(), ga.data(), g.rows(), g.cols(),
                             b.rows());
      kernels::matmul_tn_acc(a.data(), g.data(), gb.data(), a.rows(), a.cols(),
                             g.cols());
      break;
    }
    case OpKind::kAdd: {
      Tensor& ga = grad_slot(n.p0);
      Tensor& gb = grad_slot(n.p1);
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += g[j];
        gb[j] += g[j];
      }
      break;
    }
    case OpKind::kSub: {
      Tensor& ga = grad_slot(n.p0);
      Tensor& gb = grad_slot(n.p1);
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += g[j];
        gb[j] -= g[j];
      }
      break;
    }
    case OpKind::kMul: {
      const Tensor& a = node(n.p0).value;
      const Tensor& b = node(n.p1).value;
      Tensor& ga = grad_slot(n.p0);
      Tensor& gb = grad_slot(n.p1);
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += g[j] * b[j];
        gb[j] += g[j] * a[j];
      }
      break;
    }
    case OpKind::kAddRowwise: {
      Tensor& gx = grad_slot(n.p0);
      Tensor& gb = grad_slot(n.p1);
      const std::size_t c = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          gx[r * c + j] += g[r * c + j];
          gb[j] += g[r * c + j];
        }
      }
      break;
    }
    case OpKind::kAffine: {
      Tensor& gx = grad_slot(n.p0);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += n.a0 * g[j];
      break;
    }
    case OpKind::kRelu: {
      const Tensor& x = node(n.p0).value;
      Tensor& gx = grad_slot(n.p0);
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (x[j] > 0.0) gx[j] += g[j];
      }
      break;
    }
    case OpKind::kSoftmax: {
      const Tensor& y = n.value;
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* yr = y.data() + r * c;
        const double* gr = g.data() + r * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += gr[j] * yr[j];
        for (std::size_t j = 0; j < c; ++j) {
          gx[r * c + j] += yr[j] * (gr[j] - dot);
        }
      }
      break;
    }
    case OpKind::kLog: {
      const Tensor& x = node(n.p0).value;
      Tensor& gx = grad_slot(n.p0);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] / x[j];
      break;
    }
    case OpKind::kClamp: {
      const Tensor& x = node(n.p0).value;
      Tensor& gx = grad_slot(n.p0);
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (x[j] > n.a0 && x[j] < n.a1) gx[j] += g[j];
      }
      break;
    }
    case OpKind::kSum: {
      Tensor& gx = grad_slot(n.p0);
      for (double& v : gx.values()) v += g[0];
      break;
    }
    case OpKind::kMean: {
      Tensor& gx = grad_slot(n.p0);
      const double s = g[0] / static_cast<double>(gx.size());
      for (double& v : gx.values()) v += s;
      break;
    }
    case OpKind::kSumRows: {
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = gx.cols();
      for (std::size_t r = 0; r < gx.rows(); ++r) {
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += g[r];
      }
      break;
    }
    case OpKind::kPickPerRow: {
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = gx.cols();
      for (std::size_t r = 0; r < n.idx.size(); ++r) {
        gx[r * c + n.idx[r]] += g[r];
      }
      break;
    }
    case OpKind::kGatherCols: {
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = gx.cols();
      const std::size_t w = n.idx.size();
      for (std::size_t r = 0; r < gx.rows(); ++r) {
        for (std::size_t j = 0; j < w; ++j) {
          gx[r * c + n.idx[j]] += g[r * w + j];
        }
      }
      break;
    }
    case OpKind::kScatterCols: {
      Tensor& gx = grad_slot(n.p0);
      const std::size_t w = n.value.cols();
      const std::size_t c = n.idx.size();
      for (std::size_t r = 0; r < gx.rows(); ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          gx[r * c + j] += g[r * w + n.idx[j]];
        }
      }
      break;
    }
    case OpKind::kRowPowerNormalize: {
      const Tensor& x = node(n.p0).value;
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = x.cols();
      const double scale = std::sqrt(n.a0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.data() + r * c;
        const double* gr = g.data() + r * c;
        double sq = 0.0, dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          sq += xr[j] * xr[j];
          dot += xr[j] * gr[j];
        }
        const double norm = std::sqrt(sq);
        const double f = scale / norm;
        const double f3 = scale * dot / (norm * sq);
        for (std::size_t j = 0; j < c; ++j) {
          gx[r * c + j] += f * gr[j] - f3 * xr[j];
        }
      }
      break;
    }
    case OpKind::kComplexScale: {
      // Jacobian transpose of multiplication by h is multiplication by
      // conj(h) on the interleaved pairs.
      Tensor& gx = grad_slot(n.p0);
      const std::size_t c = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        const double* gr = g.data() + r * c;
        for (std::size_t j = 0; j < c; j += 2) {
          gx[r * c + j] += n.a0 * gr[j] + n.a1 * gr[j + 1];
          gx[r * c + j + 1] += n.a0 * gr[j + 1] - n.a1 * gr[j];
        }
      }
      break;
    }
    case OpKind::kHardTriplet: {
      const Tensor& x = node(n.p0).value;
      Tensor& gx = grad_slot(n.p0);
      const std::size_t b = x.rows();
      const std::size_t d = x.cols();
      const double w = g[0] / static_cast<double>(b);
      for (std::size_t a = 0; a < b; ++a) {
        if (n.d_pos[a] - n.d_neg[a] + n.a0 <= 0.0) continue;
        const std::size_t p = n.sel_pos[a];
        const std::size_t q = n.sel_neg[a];
        if (n.d_pos[a] > 0.0) {
          const double s = w / n.d_pos[a];
          for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[a * d + j] - x[p * d + j];
            gx[a * d + j] += s * diff;
            gx[p * d + j] -= s * diff;
          }
        }
        if (n.d_neg[a] > 0.0) {
          const double s = w / n.d_neg[a];
          for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[a * d + j] - x[q * d + j];
            gx[a * d + j] -= s * diff;
            gx[q * d + j] += s * diff;
          }
        }
      }
      break;
    }
  }
}

std::optional<std::string> Graph::first_nonfinite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.all_finite()) {
      return std::string(op_name(nodes_[i].op)) + " (node " +
             std::to_string(i) + ")";
    }
  }
  return std::nullopt;
}

}  // namespace semlink
