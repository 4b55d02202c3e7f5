// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameters and the small set of differentiable layers every model module
// is assembled from.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "multistyle/autograd.h"

namespace multistyle {

using Rng = std::mt19937_64;

// A named trainable array. The value storage is the autograd leaf itself, so
// toggling `trainable` decides whether gradients are routed here at all.
class Param {
 public:
  Param(std::string name, std::size_t rows, std::size_t cols, std::vector<double> values);

  const std::string& name() const { return name_; }
  const ag::Var& var() const { return var_; }
  std::size_t rows() const { return var_.rows(); }
  std::size_t cols() const { return var_.cols(); }
  std::vector<double>& values() { return var_.mutable_value(); }
  const std::vector<double>& values() const { return var_.value(); }
  // Empty when no gradient has reached the parameter since the last zero_grad.
  const std::vector<double>& grad() const { return var_.node()->grad; }
  void zero_grad() { var_.node()->grad.clear(); }
  bool trainable() const { return var_.node()->requires_grad; }
  void set_trainable(bool t) { var_.node()->requires_grad = t; }

 private:
  std::string name_;
  ag::Var var_;
};

// Non-differentiable state saved alongside parameters (running statistics).
struct Buffer {
  std::string name;
  std::vector<double> values;
};

class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Param& add(const std::string& name, std::size_t rows, std::size_t cols,
             std::vector<double> values);
  Buffer& add_buffer(const std::string& name, std::vector<double> values);

  Param* find(std::string_view name);
  const Param* find(std::string_view name) const;
  Buffer* find_buffer(std::string_view name);

  const std::vector<std::unique_ptr<Param>>& params() const { return params_; }
  const std::vector<std::unique_ptr<Buffer>>& buffers() const { return buffers_; }
  std::vector<Param*> with_prefix(std::string_view prefix) const;

  void set_trainable(std::string_view prefix, bool trainable);
  void set_all_trainable(bool trainable);
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::vector<std::unique_ptr<Buffer>> buffers_;
  std::map<std::string, Param*, std::less<>> index_;
  std::map<std::string, Buffer*, std::less<>> buffer_index_;
};

std::vector<double> uniform_init(std::size_t count, double limit, Rng& rng);
// Fan-in scaled uniform: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
std::vector<double> fan_in_init(std::size_t rows, std::size_t cols, Rng& rng);
// Row-major [n, n] orthogonal matrix (QR of a Gaussian draw).
std::vector<double> orthogonal_init(std::size_t n, Rng& rng);

enum class Activation { kNone, kTanh, kRelu };

ag::Var activate(const ag::Var& x, Activation act);

struct LayerSpec {
  enum class Kind { kLinear, kConv2d, kGru, kBiGru, kEmbedding, kScaledDotAttention,
                    kMultiHeadAttention };
  Kind kind = Kind::kLinear;
  std::vector<std::size_t> dims;
  Activation activation = Activation::kNone;
  std::size_t heads = 1;

  // Throws std::invalid_argument on zero dims or a head count that does not
  // divide the model width (dims[0] for attention kinds).
  void validate() const;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_out,
         Rng& rng, Activation act = Activation::kNone, bool bias = true);

  ag::Var operator()(const ag::Var& x) const;
  std::size_t in_dim() const { return weight_->rows(); }
  std::size_t out_dim() const { return weight_->cols(); }
  Param& weight() const { return *weight_; }
  Param* bias() const { return bias_; }

 private:
  Param* weight_ = nullptr;
  Param* bias_ = nullptr;
  Activation act_ = Activation::kNone;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim,
            Rng& rng, double scale = 1.0);
  ag::Var operator()(std::span<const std::size_t> ids) const;
  std::size_t vocab() const { return table_->rows(); }
  std::size_t dim() const { return table_->cols(); }
  Param& table() const { return *table_; }

 private:
  Param* table_ = nullptr;
};

enum class Direction { kForward, kBackward };

class Gru {
 public:
  Gru() = default;
  Gru(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden,
      Rng& rng);

  // inputs [t, d_in] -> states [t, d_hidden]. Backward direction consumes the
  // sequence in reverse but returns rows aligned with the input positions.
  ag::Var forward(const ag::Var& inputs, Direction dir = Direction::kForward,
                  const ag::Var* initial = nullptr) const;
  ag::Var step(const ag::Var& x, const ag::Var& h) const;
  ag::Var zero_state() const { return ag::Var::zeros(1, hidden()); }
  std::size_t hidden() const { return w_h_->rows(); }
  std::size_t in_dim() const { return w_i_->rows(); }

 private:
  Param* w_i_ = nullptr;
  Param* b_i_ = nullptr;
  Param* w_h_ = nullptr;
  Param* b_h_ = nullptr;
};

class BiGru {
 public:
  BiGru() = default;
  BiGru(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden,
        Rng& rng);
  // [t, d_in] -> [t, 2 * d_hidden], forward states then backward states.
  ag::Var operator()(const ag::Var& inputs) const;
  std::size_t out_dim() const { return 2 * fwd_.hidden(); }

 private:
  Gru fwd_;
  Gru bwd_;
};

struct AttentionOutput {
  ag::Var context;  // [n_queries, d_v]
  ag::Var weights;  // [n_queries, n_keys]
};

// softmax(q k^T / sqrt(d)) v. query [nq, d], keys [n, d], values [n, d_v].
AttentionOutput scaled_dot_attention(const ag::Var& query, const ag::Var& keys,
                                     const ag::Var& values);

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, std::size_t d_query,
                     std::size_t d_key, std::size_t d_model, std::size_t heads, Rng& rng,
                     bool output_projection = true);

  struct Output {
    ag::Var out;                   // [nq, d_model]
    std::vector<ag::Var> weights;  // per head [nq, nk]
  };
  Output operator()(const ag::Var& query, const ag::Var& keys, const ag::Var& values) const;
  std::size_t heads() const { return heads_; }

 private:
  Linear q_, k_, v_, o_;
  std::size_t heads_ = 1;
  bool output_projection_ = true;
};

// 2-D convolution stack over a [frames, bins] input treated as a one-channel
// image. Each layer: 3x3 conv, stride 2, per-channel normalization with
// running statistics, ReLU.
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(ParamStore& store, const std::string& name, std::size_t bins,
            std::vector<std::size_t> channels, Rng& rng);

  // mel [frames, bins] -> [frames', channels_last * bins'].
  // With update_stats the running statistics take one momentum step toward
  // this input's per-channel moments (after the forward pass used the old ones).
  ag::Var operator()(const ag::Var& mel, bool update_stats = false) const;
  std::size_t out_width() const;
  std::size_t out_frames(std::size_t frames) const;
  std::size_t bins() const { return bins_; }

  static constexpr double kMomentum = 0.1;

 private:
  struct Layer {
    Param* weight;
    Param* bias;
    Param* gamma;
    Param* beta;
    Buffer* running_mean;
    Buffer* running_var;
    std::size_t in_channels, out_channels;
  };
  std::vector<Layer> layers_;
  std::size_t bins_ = 0;
};

// Position-wise convolution along time (rows) with odd kernel, zero padded.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_out,
         std::size_t kernel, Rng& rng);
  ag::Var operator()(const ag::Var& x) const;

 private:
  Linear proj_;
  std::size_t kernel_ = 1;
};

// Feed-forward transformer block: self-attention + residual + layer norm, then
// conv1d FFN + residual + layer norm.
class FftBlock {
 public:
  FftBlock() = default;
  FftBlock(ParamStore& store, const std::string& name, std::size_t d_model, std::size_t heads,
           std::size_t d_ffn, Rng& rng);
  ag::Var operator()(const ag::Var& x) const;

 private:
  MultiHeadAttention attn_;
  Conv1d ffn_in_, ffn_out_;
  Param *ln1_g_ = nullptr, *ln1_b_ = nullptr, *ln2_g_ = nullptr, *ln2_b_ = nullptr;
};

// Sinusoidal position table [n, d].
ag::Var sinusoid_positions(std::size_t n, std::size_t d, std::size_t offset = 0);

}  // namespace multistyle
