// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/neural.h"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace multistyle {

Param::Param(std::string name, std::size_t rows, std::size_t cols, std::vector<double> values)
    : name_(std::move(name)), var_(ag::Var::leaf(rows, cols, std::move(values), true)) {}

Param& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols,
                       std::vector<double> values) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  if (rows == 0 || cols == 0) throw std::invalid_argument("zero-sized parameter: " + name);
  params_.push_back(std::make_unique<Param>(name, rows, cols, std::move(values)));
  index_[name] = params_.back().get();
  return *params_.back();
}

Buffer& ParamStore::add_buffer(const std::string& name, std::vector<double> values) {
  if (buffer_index_.count(name)) throw std::invalid_argument("duplicate buffer name: " + name);
  buffers_.push_back(std::make_unique<Buffer>(Buffer{name, std::move(values)}));
  buffer_index_[name] = buffers_.back().get();
  return *buffers_.back();
}

Param* ParamStore::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

const Param* ParamStore::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Buffer* ParamStore::find_buffer(std::string_view name) {
  auto it = buffer_index_.find(name);
  return it == buffer_index_.end() ? nullptr : it->second;
}

std::vector<Param*> ParamStore::with_prefix(std::string_view prefix) const {
  std::vector<Param*> out;
  for (const auto& p : params_)
    if (p->name().starts_with(prefix)) out.push_back(p.get());
  return out;
}

void ParamStore::set_trainable(std::string_view prefix, bool trainable) {
  for (auto* p : with_prefix(prefix)) p->set_trainable(trainable);
}

void ParamStore::set_all_trainable(bool trainable) {
  for (auto& p : params_) p->set_trainable(trainable);
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->values().size();
  return n;
}

std::vector<double> uniform_init(std::size_t count, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(count);
  for (auto& x : v) x = dist(rng);
  return v;
}

std::vector<double> fan_in_init(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_init(rows * cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
}

std::vector<double> orthogonal_init(std::size_t n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(static_cast<long>(i), static_cast<long>(j)) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix so the decomposition is unique.
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < n; ++j)
    if (r(static_cast<long>(j), static_cast<long>(j)) < 0) q.col(static_cast<long>(j)) *= -1.0;
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = q(static_cast<long>(i), static_cast<long>(j));
  return out;
}

ag::Var activate(const ag::Var& x, Activation act) {
  switch (act) {
    case Activation::kTanh: return ag::tanh(x);
    case Activation::kRelu: return ag::relu(x);
    case Activation::kNone: break;
  }
  return x;
}

void LayerSpec::validate() const {
  if (dims.empty()) throw std::invalid_argument("LayerSpec: no dims");
  for (auto d : dims)
    if (d == 0) throw std::invalid_argument("LayerSpec: dims must be positive");
  if (heads == 0) throw std::invalid_argument("LayerSpec: zero heads");
  if ((kind == Kind::kMultiHeadAttention || kind == Kind::kScaledDotAttention) &&
      dims[0] % heads != 0)
    throw std::invalid_argument("LayerSpec: head count " + std::to_string(heads) +
                                " does not divide width " + std::to_string(dims[0]));
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_out,
               Rng& rng, Activation act, bool bias)
    : act_(act) {
  LayerSpec{LayerSpec::Kind::kLinear, {d_in, d_out}, act}.validate();
  weight_ = &store.add(name + ".weight", d_in, d_out, fan_in_init(d_in, d_out, rng));
  if (bias)
    bias_ = &store.add(name + ".bias", 1, d_out,
                       uniform_init(d_out, 1.0 / std::sqrt(static_cast<double>(d_in)), rng));
}

ag::Var Linear::operator()(const ag::Var& x) const {
  if (x.cols() != weight_->rows())
    throw std::invalid_argument(weight_->name() + ": input width " + std::to_string(x.cols()) +
                                " != " + std::to_string(weight_->rows()));
  ag::Var y = ag::matmul(x, weight_->var());
  if (bias_) y = ag::add_row(y, bias_->var());
  return activate(y, act_);
}

Embedding::Embedding(ParamStore& store, const std::string& name, std::size_t vocab,
                     std::size_t dim, Rng& rng, double scale) {
  LayerSpec{LayerSpec::Kind::kEmbedding, {vocab, dim}}.validate();
  table_ = &store.add(name + ".table", vocab, dim, uniform_init(vocab * dim, scale, rng));
}

ag::Var Embedding::operator()(std::span<const std::size_t> ids) const {
  return ag::gather_rows(table_->var(), ids);
}

Gru::Gru(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden,
         Rng& rng) {
  LayerSpec{LayerSpec::Kind::kGru, {d_in, d_hidden}}.validate();
  const double lim = 1.0 / std::sqrt(static_cast<double>(d_hidden));
  w_i_ = &store.add(name + ".w_input", d_in, 3 * d_hidden, fan_in_init(d_in, 3 * d_hidden, rng));
  b_i_ = &store.add(name + ".b_input", 1, 3 * d_hidden, uniform_init(3 * d_hidden, lim, rng));
  // Recurrent kernel: one orthogonal block per gate, laid side by side.
  std::vector<double> wh(d_hidden * 3 * d_hidden);
  for (std::size_t g = 0; g < 3; ++g) {
    auto block = orthogonal_init(d_hidden, rng);
    for (std::size_t i = 0; i < d_hidden; ++i)
      for (std::size_t j = 0; j < d_hidden; ++j)
        wh[i * 3 * d_hidden + g * d_hidden + j] = block[i * d_hidden + j];
  }
  w_h_ = &store.add(name + ".w_hidden", d_hidden, 3 * d_hidden, std::move(wh));
  b_h_ = &store.add(name + ".b_hidden", 1, 3 * d_hidden, uniform_init(3 * d_hidden, lim, rng));
}

ag::Var Gru::step(const ag::Var& x, const ag::Var& h) const {
  ag::Var proj = ag::add_row(ag::matmul(x, w_i_->var()), b_i_->var());
  return ag::gru_step(proj, h, w_h_->var(), b_h_->var());
}

ag::Var Gru::forward(const ag::Var& inputs, Direction dir, const ag::Var* initial) const {
  const std::size_t t = inputs.rows();
  if (t == 0) throw std::invalid_argument("Gru::forward: empty sequence");
  if (inputs.cols() != w_i_->rows())
    throw std::invalid_argument("Gru::forward: input width mismatch");
  ag::Var proj = ag::add_row(ag::matmul(inputs, w_i_->var()), b_i_->var());
  ag::Var h = initial ? *initial : zero_state();
  std::vector<ag::Var> states(t);
  for (std::size_t s = 0; s < t; ++s) {
    const std::size_t i = dir == Direction::kForward ? s : t - 1 - s;
    h = ag::gru_step(ag::slice_rows(proj, i, 1), h, w_h_->var(), b_h_->var());
    states[i] = h;
  }
  return ag::concat_rows(states);
}

BiGru::BiGru(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden,
             Rng& rng)
    : fwd_(store, name + ".fwd", d_in, d_hidden, rng), bwd_(store, name + ".bwd", d_in, d_hidden, rng) {}

ag::Var BiGru::operator()(const ag::Var& inputs) const {
  std::vector<ag::Var> parts{fwd_.forward(inputs, Direction::kForward),
                             bwd_.forward(inputs, Direction::kBackward)};
  return ag::concat_cols(parts);
}

AttentionOutput scaled_dot_attention(const ag::Var& query, const ag::Var& keys,
                                     const ag::Var& values) {
  if (keys.rows() == 0) throw std::invalid_argument("scaled_dot_attention: no keys");
  if (keys.rows() != values.rows())
    throw std::invalid_argument("scaled_dot_attention: key/value count mismatch");
  const double inv = 1.0 / std::sqrt(static_cast<double>(query.cols()));
  ag::Var w = ag::softmax_rows(ag::scale(ag::matmul_nt(query, keys), inv));
  return {ag::matmul(w, values), w};
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name,
                                       std::size_t d_query, std::size_t d_key,
                                       std::size_t d_model, std::size_t heads, Rng& rng,
                                       bool output_projection)
    : heads_(heads), output_projection_(output_projection) {
  LayerSpec{LayerSpec::Kind::kMultiHeadAttention, {d_model, d_query, d_key}, Activation::kNone, heads}
      .validate();
  q_ = Linear(store, name + ".query", d_query, d_model, rng, Activation::kNone, false);
  k_ = Linear(store, name + ".key", d_key, d_model, rng, Activation::kNone, false);
  v_ = Linear(store, name + ".value", d_key, d_model, rng, Activation::kNone, false);
  if (output_projection_) o_ = Linear(store, name + ".out", d_model, d_model, rng);
}

MultiHeadAttention::Output MultiHeadAttention::operator()(const ag::Var& query,
                                                          const ag::Var& keys,
                                                          const ag::Var& values) const {
  ag::Var q = q_(query), k = k_(keys), v = v_(values);
  const std::size_t dh = q.cols() / heads_;
  Output result;
  std::vector<ag::Var> outs;
  for (std::size_t h = 0; h < heads_; ++h) {
    auto att = scaled_dot_attention(ag::slice_cols(q, h * dh, dh), ag::slice_cols(k, h * dh, dh),
                                    ag::slice_cols(v, h * dh, dh));
    outs.push_back(att.context);
    result.weights.push_back(att.weights);
  }
  result.out = heads_ == 1 ? outs[0] : ag::concat_cols(outs);
  if (output_projection_) result.out = o_(result.out);
  return result;
}

ConvStack::ConvStack(ParamStore& store, const std::string& name, std::size_t bins,
                     std::vector<std::size_t> channels, Rng& rng)
    : bins_(bins) {
  if (channels.empty()) throw std::invalid_argument("ConvStack: no layers");
  std::size_t in = 1;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    LayerSpec{LayerSpec::Kind::kConv2d, {in, channels[i], 3}}.validate();
    const std::string p = name + ".conv" + std::to_string(i);
    Layer l;
    l.in_channels = in;
    l.out_channels = channels[i];
    l.weight = &store.add(p + ".weight", channels[i], in * 9, fan_in_init(in * 9, channels[i], rng));
    l.bias = &store.add(p + ".bias", 1, channels[i], std::vector<double>(channels[i], 0.0));
    l.gamma = &store.add(p + ".norm_gain", 1, channels[i], std::vector<double>(channels[i], 1.0));
    l.beta = &store.add(p + ".norm_bias", 1, channels[i], std::vector<double>(channels[i], 0.0));
    l.running_mean = &store.add_buffer(p + ".running_mean", std::vector<double>(channels[i], 0.0));
    l.running_var = &store.add_buffer(p + ".running_var", std::vector<double>(channels[i], 1.0));
    layers_.push_back(l);
    in = channels[i];
  }
}

std::size_t ConvStack::out_width() const {
  std::size_t w = bins_;
  for (std::size_t i = 0; i < layers_.size(); ++i) w = (w + 1) / 2;
  return w * layers_.back().out_channels;
}

std::size_t ConvStack::out_frames(std::size_t frames) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) frames = (frames + 1) / 2;
  return frames;
}

ag::Var ConvStack::operator()(const ag::Var& mel, bool update_stats) const {
  if (mel.cols() != bins_)
    throw std::invalid_argument("ConvStack: expected " + std::to_string(bins_) + " bins, got " +
                                std::to_string(mel.cols()));
  ag::Var x = mel;
  if (x.rows() == 0) x = ag::Var::zeros(1, bins_);  // one silent frame
  std::size_t h = x.rows(), w = bins_;
  x = ag::reshape(x, 1, h * w);
  for (const auto& l : layers_) {
    ag::Conv2dGeometry g{l.in_channels, l.out_channels, h, w};
    ag::Var pre = ag::conv2d(x, l.weight->var(), l.bias->var(), g);
    h = g.out_height();
    w = g.out_width();
    // Normalize with the statistics as they stand, then move them toward
    // this input's per-channel moments.
    x = ag::channel_norm(pre, l.running_mean->values, l.running_var->values, l.gamma->var(),
                         l.beta->var());
    if (update_stats) {
      const std::size_t n = h * w;
      for (std::size_t c = 0; c < l.out_channels; ++c) {
        const double* row = pre.value().data() + c * n;
        double m = 0.0, v = 0.0;
        for (std::size_t j = 0; j < n; ++j) m += row[j];
        m /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) v += (row[j] - m) * (row[j] - m);
        v /= static_cast<double>(n);
        l.running_mean->values[c] = (1 - kMomentum) * l.running_mean->values[c] + kMomentum * m;
        l.running_var->values[c] = (1 - kMomentum) * l.running_var->values[c] + kMomentum * v;
      }
    }
    x = ag::relu(x);
  }
  // [c, h*w] -> [h, w*c]: one row per remaining time step.
  x = ag::transpose(x);  // [h*w, c]
  return ag::reshape(x, h, w * layers_.back().out_channels);
}

Conv1d::Conv1d(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_out,
               std::size_t kernel, Rng& rng)
    : kernel_(kernel) {
  if (kernel % 2 == 0) throw std::invalid_argument("Conv1d: kernel must be odd");
  proj_ = Linear(store, name, d_in * kernel, d_out, rng);
}

ag::Var Conv1d::operator()(const ag::Var& x) const {
  if (kernel_ == 1) return proj_(x);
  std::vector<ag::Var> taps;
  const long half = static_cast<long>(kernel_ / 2);
  for (long o = half; o >= -half; --o) taps.push_back(o == 0 ? x : ag::shift_rows(x, o));
  return proj_(ag::concat_cols(taps));
}

FftBlock::FftBlock(ParamStore& store, const std::string& name, std::size_t d_model,
                   std::size_t heads, std::size_t d_ffn, Rng& rng) {
  attn_ = MultiHeadAttention(store, name + ".attn", d_model, d_model, d_model, heads, rng);
  ffn_in_ = Conv1d(store, name + ".ffn_in", d_model, d_ffn, 3, rng);
  ffn_out_ = Conv1d(store, name + ".ffn_out", d_ffn, d_model, 1, rng);
  ln1_g_ = &store.add(name + ".ln1_gain", 1, d_model, std::vector<double>(d_model, 1.0));
  ln1_b_ = &store.add(name + ".ln1_bias", 1, d_model, std::vector<double>(d_model, 0.0));
  ln2_g_ = &store.add(name + ".ln2_gain", 1, d_model, std::vector<double>(d_model, 1.0));
  ln2_b_ = &store.add(name + ".ln2_bias", 1, d_model, std::vector<double>(d_model, 0.0));
}

ag::Var FftBlock::operator()(const ag::Var& x) const {
  ag::Var a = attn_(x, x, x).out;
  ag::Var h = ag::layer_norm_rows(ag::add(x, a), ln1_g_->var(), ln1_b_->var());
  ag::Var f = ffn_out_(ag::relu(ffn_in_(h)));
  return ag::layer_norm_rows(ag::add(h, f), ln2_g_->var(), ln2_b_->var());
}

ag::Var sinusoid_positions(std::size_t n, std::size_t d, std::size_t offset) {
  std::vector<double> v(n * d);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double a = static_cast<double>(p + offset) * rate;
      v[p * d + i] = (i % 2 == 0) ? std::sin(a) : std::cos(a);
    }
  return ag::Var::constant(n, d, std::move(v));
}

}  // namespace multistyle
