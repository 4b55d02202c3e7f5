// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/style_predictor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace multistyle {

namespace {

constexpr const char* kLevelNames[3] = {"global", "sentence", "subword"};

ag::Var cat(std::initializer_list<ag::Var> parts) {
  std::vector<ag::Var> v(parts);
  return ag::concat_cols(v);
}

ag::Var broadcast(const ag::Var& row, std::size_t n) {
  std::vector<std::size_t> counts{n};
  return ag::repeat_rows(row, counts);
}

void zero_weights(Linear& l) {
  auto& w = l.weight().values();
  std::fill(w.begin(), w.end(), 0.0);
  if (Param* b = l.bias()) std::fill(b->values().begin(), b->values().end(), 0.0);
}

}  // namespace

StylePredictor::StylePredictor(ParamStore& store, const std::string& name, std::size_t d_ctx,
                               std::size_t d_style, bool autoregressive, Rng& rng)
    : autoregressive_(autoregressive), d_style_(d_style) {
  f_g_ = Linear(store, name + ".f_g", d_ctx, d_style, rng, Activation::kNone);
  f_s_ = Linear(store, name + ".f_s", d_ctx + d_style, d_style, rng, Activation::kNone);
  f_w_ = Linear(store, name + ".f_w", d_ctx + d_style, d_style, rng, Activation::kNone);
  if (autoregressive) {
    sentence_cell_ = Gru(store, name + ".ar_sentence.cell", d_ctx + 2 * d_style, d_style, rng);
    sentence_out_ = Linear(store, name + ".ar_sentence.out", d_style, d_style, rng, Activation::kNone);
    subword_cell_ = Gru(store, name + ".ar_subword.cell", d_ctx + 2 * d_style, d_style, rng);
    subword_out_ = Linear(store, name + ".ar_subword.out", d_style, d_style, rng, Activation::kNone);
  }
  for (std::size_t l = 0; l < 3; ++l) {
    const std::string level = kLevelNames[l];
    center_[l] = &store.add_buffer(name + ".target_center." + level, std::vector<double>(d_style, 0.0));
    scale_[l] = &store.add_buffer(name + ".target_scale." + level, std::vector<double>(d_style, 1.0));
  }
  // Output projections start at zero so the initial prediction is the center.
  for (Linear* l : {&f_g_, &f_s_, &f_w_}) zero_weights(*l);
  if (autoregressive) {
    zero_weights(sentence_out_);
    zero_weights(subword_out_);
  }
}

void StylePredictor::set_target_statistics(const std::array<TargetStatistics, 3>& stats) {
  for (std::size_t l = 0; l < 3; ++l) {
    if (stats[l].center.size() != d_style_ || stats[l].scale.size() != d_style_)
      throw std::invalid_argument("set_target_statistics: width mismatch");
    center_[l]->values = stats[l].center;
    scale_[l]->values = stats[l].scale;
  }
}

ag::Var StylePredictor::output(const ag::Var& z, std::size_t level) const {
  const ag::Var scale = broadcast(ag::Var::constant(1, d_style_, scale_[level]->values), z.rows());
  const ag::Var center = ag::Var::constant(1, d_style_, center_[level]->values);
  return ag::tanh(ag::add_row(ag::mul(z, scale), center));
}

PredictedStyles StylePredictor::predict(const ContextEmbeddings& ctx) const {
  if (ctx.current >= ctx.C_w.size()) throw std::invalid_argument("predict: no current sentence");
  PredictedStyles p;
  p.S_g = output(f_g_(ctx.C_g), 0);
  p.S_s = output(f_s_(cat({ctx.current_C_s(), p.S_g})), 1);
  const ag::Var c_w = ctx.current_C_w();
  const ag::Var cond = broadcast(ag::add(p.S_g, p.S_s), c_w.rows());
  p.S_w = output(f_w_(cat({c_w, cond})), 2);
  return p;
}

std::vector<PredictedStyles> StylePredictor::predict_paragraph(
    const std::vector<ContextEmbeddings>& ctx_seq,
    const std::vector<PredictedStyles>* previous) const {
  if (ctx_seq.empty()) throw std::invalid_argument("predict_paragraph: empty document");
  if (!autoregressive_) {
    std::vector<PredictedStyles> out;
    for (const auto& c : ctx_seq) out.push_back(predict(c));
    return out;
  }
  if (previous && previous->size() != ctx_seq.size())
    throw std::invalid_argument("predict_paragraph: teacher sequence length mismatch");
  std::vector<PredictedStyles> out;
  ag::Var h_s = sentence_cell_.zero_state();
  ag::Var h_w = subword_cell_.zero_state();
  ag::Var prev_s = ag::Var::zeros(1, d_style_);
  ag::Var prev_w = ag::Var::zeros(1, d_style_);
  for (std::size_t t = 0; t < ctx_seq.size(); ++t) {
    const auto& ctx = ctx_seq[t];
    if (t > 0 && previous) {
      prev_s = (*previous)[t - 1].S_s;
      const ag::Var& w = (*previous)[t - 1].S_w;
      prev_w = ag::slice_rows(w, w.rows() - 1, 1);
    }
    PredictedStyles p;
    p.S_g = output(f_g_(ctx.C_g), 0);
    h_s = sentence_cell_.step(cat({ctx.current_C_s(), p.S_g, prev_s}), h_s);
    p.S_s = output(sentence_out_(h_s), 1);
    const ag::Var cond = ag::add(p.S_g, p.S_s);
    const ag::Var c_w = ctx.current_C_w();
    std::vector<ag::Var> rows;
    for (std::size_t i = 0; i < c_w.rows(); ++i) {
      if (i > 0 && previous) prev_w = ag::slice_rows((*previous)[t].S_w, i - 1, 1);
      h_w = subword_cell_.step(cat({ag::slice_rows(c_w, i, 1), cond, prev_w}), h_w);
      rows.push_back(output(subword_out_(h_w), 2));
      if (!previous) prev_w = rows.back();
    }
    p.S_w = ag::concat_rows(rows);
    if (!previous) prev_s = p.S_s;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace multistyle
