// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/autograd.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace multistyle::ag {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void check(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

std::string dims(const Var& v) {
  return "[" + std::to_string(v.rows()) + "," + std::to_string(v.cols()) + "]";
}

Var make(std::size_t rows, std::size_t cols, std::vector<double> value,
         std::vector<std::shared_ptr<Node>> parents,
         std::function<void(Node&)> fn) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(fn);
  }
  return Var(std::move(n));
}

ConstMapMat cmap(const Var& v) { return ConstMapMat(v.value().data(), v.rows(), v.cols()); }

}  // namespace

Var Var::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return leaf(rows, cols, std::move(values), false);
}

Var Var::zeros(std::size_t rows, std::size_t cols) {
  return leaf(rows, cols, std::vector<double>(rows * cols, 0.0), false);
}

Var Var::leaf(std::size_t rows, std::size_t cols, std::vector<double> values,
              bool requires_grad) {
  if (values.size() != rows * cols)
    throw std::invalid_argument("Var::leaf: value count does not match shape");
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

double Var::item() const {
  if (size() != 1) throw std::logic_error("Var::item on non-scalar " + dims(*this));
  return node_->value[0];
}

Var Var::detach() const { return constant(rows(), cols(), value()); }

void backward(const Var& loss, double seed) {
  Node* root = loss.node();
  if (!root->requires_grad) return;
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  auto& g = root->grad_buffer();
  for (auto& x : g) x += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) {
      n->backward_fn(*n);
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

Var matmul(const Var& a, const Var& b) {
  check(a.cols() == b.rows(), "matmul", dims(a) + " x " + dims(b));
  std::vector<double> out(a.rows() * b.cols());
  MapMat(out.data(), a.rows(), b.cols()).noalias() = cmap(a) * cmap(b);
  return make(a.rows(), b.cols(), std::move(out), {a.shared(), b.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMapMat g(self.grad.data(), self.rows, self.cols);
    if (pa.requires_grad) {
      MapMat(pa.grad_buffer().data(), pa.rows, pa.cols).noalias() +=
          g * ConstMapMat(pb.value.data(), pb.rows, pb.cols).transpose();
    }
    if (pb.requires_grad) {
      MapMat(pb.grad_buffer().data(), pb.rows, pb.cols).noalias() +=
          ConstMapMat(pa.value.data(), pa.rows, pa.cols).transpose() * g;
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  check(a.cols() == b.cols(), "matmul_nt", dims(a) + " x " + dims(b) + "^T");
  std::vector<double> out(a.rows() * b.rows());
  MapMat(out.data(), a.rows(), b.rows()).noalias() = cmap(a) * cmap(b).transpose();
  return make(a.rows(), b.rows(), std::move(out), {a.shared(), b.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMapMat g(self.grad.data(), self.rows, self.cols);
    if (pa.requires_grad) {
      MapMat(pa.grad_buffer().data(), pa.rows, pa.cols).noalias() +=
          g * ConstMapMat(pb.value.data(), pb.rows, pb.cols);
    }
    if (pb.requires_grad) {
      MapMat(pb.grad_buffer().data(), pb.rows, pb.cols).noalias() +=
          g.transpose() * ConstMapMat(pa.value.data(), pa.rows, pa.cols);
    }
  });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(const char* name, const Var& a, const Var& b, F f, DA da, DB db) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), name, dims(a) + " vs " + dims(b));
  std::vector<double> out(a.size());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  return make(a.rows(), a.cols(), std::move(out), {a.shared(), b.shared()},
              [da, db](Node& self) {
                Node& pa = *self.parents[0];
                Node& pb = *self.parents[1];
                if (pa.requires_grad) {
                  auto& g = pa.grad_buffer();
                  for (std::size_t i = 0; i < g.size(); ++i)
                    g[i] += self.grad[i] * da(pa.value[i], pb.value[i]);
                }
                if (pb.requires_grad) {
                  auto& g = pb.grad_buffer();
                  for (std::size_t i = 0; i < g.size(); ++i)
                    g[i] += self.grad[i] * db(pa.value[i], pb.value[i]);
                }
              });
}

// Elementwise unary op whose derivative is expressed via input x and output y.
template <typename F, typename D>
Var unary(const Var& a, F f, D d) {
  std::vector<double> out(a.size());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return make(a.rows(), a.cols(), std::move(out), {a.shared()}, [d](Node& self) {
    Node& pa = *self.parents[0];
    auto& g = pa.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * d(pa.value[i], self.value[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var scale(const Var& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var add_row(const Var& a, const Var& row) {
  check(row.rows() == 1 && row.cols() == a.cols(), "add_row", dims(a) + " + " + dims(row));
  std::vector<double> out(a.value());
  const std::size_t c = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += row.value()[i % c];
  return make(a.rows(), c, std::move(out), {a.shared(), row.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pr = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pr.requires_grad) {
      auto& g = pr.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % self.cols] += self.grad[i];
    }
  });
}

Var softmax_rows(const Var& a) {
  const std::size_t r = a.rows(), c = a.cols();
  check(c > 0, "softmax_rows", "empty row");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.value().data() + i * c;
    double* y = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= total;
  }
  return make(r, c, std::move(out), {a.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    auto& g = pa.grad_buffer();
    for (std::size_t i = 0; i < self.rows; ++i) {
      const double* y = self.value.data() + i * self.cols;
      const double* gy = self.grad.data() + i * self.cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < self.cols; ++j) dot += y[j] * gy[j];
      for (std::size_t j = 0; j < self.cols; ++j) g[i * self.cols + j] += y[j] * (gy[j] - dot);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  check(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    check(p.rows() == r, "concat_cols", "row mismatch " + dims(p));
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::vector<std::shared_ptr<Node>> parents;
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.value().data() + i * p.cols(), p.cols(), out.data() + i * c + off);
    off += p.cols();
    parents.push_back(p.shared());
  }
  return make(r, c, std::move(out), std::move(parents), [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < self.rows; ++i)
          for (std::size_t j = 0; j < p.cols; ++j)
            g[i * p.cols + j] += self.grad[i * self.cols + off + j];
      }
      off += p.cols;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  check(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    check(p.cols() == c, "concat_rows", "col mismatch " + dims(p));
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    out.insert(out.end(), p.value().begin(), p.value().end());
    parents.push_back(p.shared());
  }
  return make(r, c, std::move(out), std::move(parents), [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += p.value.size();
    }
  });
}

Var slice_rows(const Var& a, std::size_t start, std::size_t count) {
  check(start + count <= a.rows(), "slice_rows", "range exceeds " + dims(a));
  const std::size_t c = a.cols();
  std::vector<double> out(a.value().begin() + start * c, a.value().begin() + (start + count) * c);
  return make(count, c, std::move(out), {a.shared()}, [start](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * self.cols + i] += self.grad[i];
  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  check(start + count <= a.cols(), "slice_cols", "range exceeds " + dims(a));
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(a.value().data() + i * c + start, count, out.data() + i * count);
  return make(r, count, std::move(out), {a.shared()}, [start, c](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.rows; ++i)
      for (std::size_t j = 0; j < self.cols; ++j)
        g[i * c + start + j] += self.grad[i * self.cols + j];
  });
}

Var transpose(const Var& a) {
  std::vector<double> out(a.size());
  MapMat(out.data(), a.cols(), a.rows()) = cmap(a).transpose();
  return make(a.cols(), a.rows(), std::move(out), {a.shared()}, [](Node& self) {
    Node& p = *self.parents[0];
    MapMat(p.grad_buffer().data(), p.rows, p.cols) +=
        ConstMapMat(self.grad.data(), self.rows, self.cols).transpose();
  });
}

Var reshape(const Var& a, std::size_t rows, std::size_t cols) {
  check(rows * cols == a.size(), "reshape", dims(a) + " to " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
  return make(rows, cols, a.value(), {a.shared()}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value()) s += x;
  return make(1, 1, {s}, {a.shared()}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& x : g) x += self.grad[0];
  });
}

Var mean(const Var& a) {
  check(a.size() > 0, "mean", "empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var mse(const Var& a, const Var& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mse", dims(a) + " vs " + dims(b));
  check(a.size() > 0, "mse", "empty input");
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return make(1, 1, {s * inv_n}, {a.shared(), b.shared()}, [inv_n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double k = 2.0 * inv_n * self.grad[0];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * (pa.value[i] - pb.value[i]);
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= k * (pa.value[i] - pb.value[i]);
    }
  });
}

Var mae(const Var& a, const Var& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mae", dims(a) + " vs " + dims(b));
  check(a.size() > 0, "mae", "empty input");
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.value()[i] - b.value()[i]);
  return make(1, 1, {s * inv_n}, {a.shared(), b.shared()}, [inv_n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double k = inv_n * self.grad[0];
    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * sign(pa.value[i] - pb.value[i]);
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= k * sign(pa.value[i] - pb.value[i]);
    }
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> index) {
  const std::size_t c = table.cols();
  std::vector<double> out(index.size() * c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    check(index[i] < table.rows(), "gather_rows",
          "index " + std::to_string(index[i]) + " outside " + dims(table));
    std::copy_n(table.value().data() + index[i] * c, c, out.data() + i * c);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return make(index.size(), c, std::move(out), {table.shared()}, [idx](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < self.cols; ++j) g[idx[i] * self.cols + j] += self.grad[i * self.cols + j];
  });
}

Var repeat_rows(const Var& a, std::span<const std::size_t> counts) {
  check(counts.size() == a.rows(), "repeat_rows",
        std::to_string(counts.size()) + " counts for " + dims(a));
  std::vector<std::size_t> idx;
  for (std::size_t p = 0; p < counts.size(); ++p) idx.insert(idx.end(), counts[p], p);
  return gather_rows(a, idx);
}

Var shift_rows(const Var& a, long offset) {
  const long r = static_cast<long>(a.rows());
  const std::size_t c = a.cols();
  std::vector<double> out(a.size(), 0.0);
  for (long i = 0; i < r; ++i) {
    const long src = i - offset;
    if (src >= 0 && src < r)
      std::copy_n(a.value().data() + src * c, c, out.data() + i * c);
  }
  return make(a.rows(), c, std::move(out), {a.shared()}, [offset](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    const long r = static_cast<long>(self.rows);
    for (long i = 0; i < r; ++i) {
      const long src = i - offset;
      if (src >= 0 && src < r)
        for (std::size_t j = 0; j < self.cols; ++j) g[src * self.cols + j] += self.grad[i * self.cols + j];
    }
  });
}

Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps) {
  const std::size_t r = a.rows(), c = a.cols();
  check(gamma.cols() == c && beta.cols() == c, "layer_norm_rows", "gain/bias width");
  std::vector<double> out(a.size()), xhat(a.size()), inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.value().data() + i * c;
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < c; ++j) m += x[j];
    m /= static_cast<double>(c);
    for (std::size_t j = 0; j < c; ++j) v += (x[j] - m) * (x[j] - m);
    v /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(v + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (x[j] - m) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gamma.value()[j] + beta.value()[j];
    }
  }
  return make(r, c, std::move(out), {a.shared(), gamma.shared(), beta.shared()},
              [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                Node& pa = *self.parents[0];
                Node& pg = *self.parents[1];
                Node& pb = *self.parents[2];
                const std::size_t r = self.rows, c = self.cols;
                if (pg.requires_grad) {
                  auto& g = pg.grad_buffer();
                  for (std::size_t i = 0; i < r * c; ++i) g[i % c] += self.grad[i] * xhat[i];
                }
                if (pb.requires_grad) {
                  auto& g = pb.grad_buffer();
                  for (std::size_t i = 0; i < r * c; ++i) g[i % c] += self.grad[i];
                }
                if (pa.requires_grad) {
                  auto& g = pa.grad_buffer();
                  for (std::size_t i = 0; i < r; ++i) {
                    double s1 = 0.0, s2 = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                      const double dxh = self.grad[i * c + j] * pg.value[j];
                      s1 += dxh;
                      s2 += dxh * xhat[i * c + j];
                    }
                    for (std::size_t j = 0; j < c; ++j) {
                      const double dxh = self.grad[i * c + j] * pg.value[j];
                      g[i * c + j] += inv_std[i] / static_cast<double>(c) *
                                      (static_cast<double>(c) * dxh - s1 - xhat[i * c + j] * s2);
                    }
                  }
                }
              });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dGeometry& geom) {
  const std::size_t ci = geom.in_channels, co = geom.out_channels;
  const std::size_t h = geom.height, w = geom.width, k = geom.kernel;
  check(x.rows() == ci && x.cols() == h * w, "conv2d", "input " + dims(x));
  check(weight.rows() == co && weight.cols() == ci * k * k, "conv2d", "weight " + dims(weight));
  check(bias.rows() == 1 && bias.cols() == co, "conv2d", "bias " + dims(bias));
  const std::size_t oh = geom.out_height(), ow = geom.out_width();
  // im2col: [ci*k*k, oh*ow]
  RowMat cols = RowMat::Zero(static_cast<long>(ci * k * k), static_cast<long>(oh * ow));
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const std::size_t row = (c * k + ky) * k + kx;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long iy = static_cast<long>(oy * geom.stride + ky) - static_cast<long>(geom.pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox * geom.stride + kx) - static_cast<long>(geom.pad);
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            cols(static_cast<long>(row), static_cast<long>(oy * ow + ox)) =
                x.value()[c * h * w + static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)];
          }
        }
      }
  std::vector<double> out(co * oh * ow);
  MapMat o(out.data(), static_cast<long>(co), static_cast<long>(oh * ow));
  o.noalias() = cmap(weight) * cols;
  for (std::size_t c = 0; c < co; ++c) o.row(static_cast<long>(c)).array() += bias.value()[c];
  return make(co, oh * ow, std::move(out), {x.shared(), weight.shared(), bias.shared()},
              [geom, cols = std::move(cols)](Node& self) {
                Node& px = *self.parents[0];
                Node& pw = *self.parents[1];
                Node& pb = *self.parents[2];
                ConstMapMat g(self.grad.data(), self.rows, self.cols);
                if (pw.requires_grad)
                  MapMat(pw.grad_buffer().data(), pw.rows, pw.cols).noalias() += g * cols.transpose();
                if (pb.requires_grad) {
                  auto& gb = pb.grad_buffer();
                  for (std::size_t c = 0; c < self.rows; ++c) gb[c] += g.row(static_cast<long>(c)).sum();
                }
                if (px.requires_grad) {
                  RowMat dcols = ConstMapMat(pw.value.data(), pw.rows, pw.cols).transpose() * g;
                  auto& gx = px.grad_buffer();
                  const std::size_t k = geom.kernel, h = geom.height, w = geom.width;
                  const std::size_t oh = geom.out_height(), ow = geom.out_width();
                  for (std::size_t c = 0; c < geom.in_channels; ++c)
                    for (std::size_t ky = 0; ky < k; ++ky)
                      for (std::size_t kx = 0; kx < k; ++kx) {
                        const std::size_t row = (c * k + ky) * k + kx;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                          const long iy = static_cast<long>(oy * geom.stride + ky) - static_cast<long>(geom.pad);
                          if (iy < 0 || iy >= static_cast<long>(h)) continue;
                          for (std::size_t ox = 0; ox < ow; ++ox) {
                            const long ix = static_cast<long>(ox * geom.stride + kx) - static_cast<long>(geom.pad);
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            gx[c * h * w + static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)] +=
                                dcols(static_cast<long>(row), static_cast<long>(oy * ow + ox));
                          }
                        }
                      }
                }
              });
}

Var channel_norm(const Var& x, std::span<const double> mean, std::span<const double> var,
                 const Var& gamma, const Var& beta, double eps) {
  const std::size_t c = x.rows(), n = x.cols();
  check(mean.size() == c && var.size() == c, "channel_norm", "statistics width");
  check(gamma.cols() == c && beta.cols() == c, "channel_norm", "gain/bias width");
  std::vector<double> inv(c), xhat(x.size()), out(x.size());
  for (std::size_t i = 0; i < c; ++i) {
    inv[i] = 1.0 / std::sqrt(var[i] + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (x.value()[i * n + j] - mean[i]) * inv[i];
      out[i * n + j] = xhat[i * n + j] * gamma.value()[i] + beta.value()[i];
    }
  }
  return make(c, n, std::move(out), {x.shared(), gamma.shared(), beta.shared()},
              [inv = std::move(inv), xhat = std::move(xhat)](Node& self) {
                Node& px = *self.parents[0];
                Node& pg = *self.parents[1];
                Node& pb = *self.parents[2];
                const std::size_t c = self.rows, n = self.cols;
                for (std::size_t i = 0; i < c; ++i)
                  for (std::size_t j = 0; j < n; ++j) {
                    const double gy = self.grad[i * n + j];
                    if (px.requires_grad) px.grad_buffer()[i * n + j] += gy * pg.value[i] * inv[i];
                    if (pg.requires_grad) pg.grad_buffer()[i] += gy * xhat[i * n + j];
                    if (pb.requires_grad) pb.grad_buffer()[i] += gy;
                  }
              });
}

Var gru_step(const Var& x_proj, const Var& h, const Var& w_h, const Var& b_h) {
  const std::size_t d = h.cols();
  check(h.rows() == 1 && x_proj.rows() == 1 && x_proj.cols() == 3 * d, "gru_step",
        "x_proj " + dims(x_proj) + " h " + dims(h));
  check(w_h.rows() == d && w_h.cols() == 3 * d && b_h.cols() == 3 * d, "gru_step", "weights");
  // hh = h W_h + b_h
  std::vector<double> hh(3 * d);
  Eigen::Map<Eigen::RowVectorXd>(hh.data(), static_cast<long>(3 * d)).noalias() =
      Eigen::Map<const Eigen::RowVectorXd>(h.value().data(), static_cast<long>(d)) * cmap(w_h);
  for (std::size_t i = 0; i < 3 * d; ++i) hh[i] += b_h.value()[i];
  std::vector<double> r(d), z(d), nn(d), out(d);
  const auto& xp = x_proj.value();
  for (std::size_t i = 0; i < d; ++i) {
    r[i] = 1.0 / (1.0 + std::exp(-(xp[i] + hh[i])));
    z[i] = 1.0 / (1.0 + std::exp(-(xp[d + i] + hh[d + i])));
    nn[i] = std::tanh(xp[2 * d + i] + r[i] * hh[2 * d + i]);
    out[i] = (1.0 - z[i]) * nn[i] + z[i] * h.value()[i];
  }
  return make(1, d, std::move(out), {x_proj.shared(), h.shared(), w_h.shared(), b_h.shared()},
              [r = std::move(r), z = std::move(z), nn = std::move(nn), hh = std::move(hh)](Node& self) {
                Node& px = *self.parents[0];
                Node& ph = *self.parents[1];
                Node& pw = *self.parents[2];
                Node& pb = *self.parents[3];
                const std::size_t d = self.cols;
                // Pre-activation gradients: [r | z | n] for input side, and for hidden side
                // the n-gate gets multiplied by r.
                std::vector<double> dx(3 * d), dhh(3 * d);
                for (std::size_t i = 0; i < d; ++i) {
                  const double g = self.grad[i];
                  const double dn = g * (1.0 - z[i]) * (1.0 - nn[i] * nn[i]);
                  const double dz = g * (ph.value[i] - nn[i]) * z[i] * (1.0 - z[i]);
                  const double dr = dn * hh[2 * d + i] * r[i] * (1.0 - r[i]);
                  dx[i] = dr;
                  dx[d + i] = dz;
                  dx[2 * d + i] = dn;
                  dhh[i] = dr;
                  dhh[d + i] = dz;
                  dhh[2 * d + i] = dn * r[i];
                }
                if (px.requires_grad) {
                  auto& g = px.grad_buffer();
                  for (std::size_t i = 0; i < 3 * d; ++i) g[i] += dx[i];
                }
                if (pb.requires_grad) {
                  auto& g = pb.grad_buffer();
                  for (std::size_t i = 0; i < 3 * d; ++i) g[i] += dhh[i];
                }
                Eigen::Map<const Eigen::RowVectorXd> dhh_v(dhh.data(), static_cast<long>(3 * d));
                if (pw.requires_grad) {
                  MapMat(pw.grad_buffer().data(), pw.rows, pw.cols).noalias() +=
                      Eigen::Map<const Eigen::VectorXd>(ph.value.data(), static_cast<long>(d)) * dhh_v;
                }
                if (ph.requires_grad) {
                  auto& g = ph.grad_buffer();
                  Eigen::RowVectorXd back =
                      dhh_v * ConstMapMat(pw.value.data(), pw.rows, pw.cols).transpose();
                  for (std::size_t i = 0; i < d; ++i) g[i] += back[static_cast<long>(i)] + self.grad[i] * z[i];
                }
              });
}

}  // namespace multistyle::ag
