// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over row-major 2-D
// double-precision matrices. Every model module in the library is written
// against these operations; a vector is a 1 x d matrix.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace multistyle::ag {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(std::size_t rows, std::size_t cols,
                      std::vector<double> values);
  static Var zeros(std::size_t rows, std::size_t cols);
  static Var leaf(std::size_t rows, std::size_t cols,
                  std::vector<double> values, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& mutable_value() { return node_->value; }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->cols + c];
  }
  double item() const;
  bool requires_grad() const { return node_->requires_grad; }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

  // Copy of the values with no graph history.
  Var detach() const;

 private:
  std::shared_ptr<Node> node_;
};

// Accumulates d(seed * loss)/d(leaf) into every reachable leaf that requires
// gradients. Intermediate gradients are released afterwards.
void backward(const Var& loss, double seed = 1.0);

Var matmul(const Var& a, const Var& b);     // [n,k] x [k,m]
Var matmul_nt(const Var& a, const Var& b);  // [n,k] x [m,k]^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var add_row(const Var& a, const Var& row);  // broadcast [1,m] over rows
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var softmax_rows(const Var& a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, std::size_t start, std::size_t count);
Var slice_cols(const Var& a, std::size_t start, std::size_t count);
Var transpose(const Var& a);
Var reshape(const Var& a, std::size_t rows, std::size_t cols);
Var sum(const Var& a);
Var mean(const Var& a);
Var mse(const Var& a, const Var& b);
Var mae(const Var& a, const Var& b);
// Row i of the result is row index[i] of table.
Var gather_rows(const Var& table, std::span<const std::size_t> index);
// Row p of a repeated counts[p] times, in order.
Var repeat_rows(const Var& a, std::span<const std::size_t> counts);
// result[i] = a[i - offset] (zero outside range).
Var shift_rows(const Var& a, long offset);
Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta,
                    double eps = 1e-5);

// x: [c_in, h*w] feature maps. weight: [c_out, c_in*k*k]. bias: [1, c_out].
// Zero padding `pad`, stride `stride` on both axes.
struct Conv2dGeometry {
  std::size_t in_channels, out_channels, height, width;
  std::size_t kernel = 3, stride = 2, pad = 1;
  std::size_t out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
};
Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const Conv2dGeometry& geom);

// Per-channel affine normalization with externally supplied statistics.
// x: [c, n]; gamma/beta: [1, c].
Var channel_norm(const Var& x, std::span<const double> mean,
                 std::span<const double> var, const Var& gamma,
                 const Var& beta, double eps = 1e-5);

// One GRU step. x_proj: [1, 3h] (input projection incl. input bias, gate
// order r|z|n), h: [1, h], w_h: [h, 3h], b_h: [1, 3h].
Var gru_step(const Var& x_proj, const Var& h, const Var& w_h, const Var& b_h);

}  // namespace multistyle::ag
