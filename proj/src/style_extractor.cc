// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/style_extractor.h"

#include <stdexcept>

namespace multistyle {

const char* level_name(Level level) {
  switch (level) {
    case Level::kGlobal: return "global";
    case Level::kSentence: return "sentence";
    case Level::kSubword: return "subword";
  }
  return "?";
}

Level parse_level(const std::string& name) {
  for (Level l : kLevels)
    if (name == level_name(l)) return l;
  throw std::invalid_argument("unknown style level '" + name + "'");
}

ResidualEmbeddings compute_residuals(const ReferenceEmbeddings& e) {
  if (e.E_g.cols() != e.E_s.cols() || e.E_w.cols() != e.E_s.cols())
    throw std::invalid_argument("compute_residuals: width mismatch");
  return {e.E_g, ag::sub(e.E_s, e.E_g), ag::add_row(e.E_w, ag::scale(e.E_s, -1.0))};
}

ReferenceEncoder::ReferenceEncoder(ParamStore& store, const std::string& name, std::size_t bins,
                                   std::vector<std::size_t> channels, std::size_t d_ref, Rng& rng)
    : conv_(store, name + ".conv", bins, std::move(channels), rng),
      rnn_(store, name + ".rnn", conv_.out_width(), d_ref, rng) {}

ag::Var ReferenceEncoder::operator()(const ag::Var& mel, bool update_stats) const {
  ag::Var states = rnn_.forward(conv_(mel, update_stats));
  return ag::slice_rows(states, states.rows() - 1, 1);
}

StyleTokenLayer::StyleTokenLayer(ParamStore& store, const std::string& name, std::size_t d_ref,
                                 std::size_t d_style, std::size_t tokens, std::size_t heads,
                                 Rng& rng) {
  if (tokens == 0) throw std::invalid_argument("StyleTokenLayer: need at least one token");
  if (heads == 0 || d_style % heads != 0)
    throw std::invalid_argument("StyleTokenLayer: heads must divide d_style");
  const std::size_t d_token = d_style / heads;
  tokens_ = &store.add(name + ".tokens", tokens, d_token, uniform_init(tokens * d_token, 0.5, rng));
  attention_ = MultiHeadAttention(store, name + ".attention", d_ref, d_token, d_style, heads, rng,
                                  false);
}

StyleTokenLayer::Output StyleTokenLayer::operator()(const ag::Var& residual) const {
  ag::Var keys = ag::tanh(tokens_->var());
  auto att = attention_(residual, keys, keys);
  return {att.out, att.weights};
}

ag::Var mel_var(const Matrix& mel) { return ag::Var::constant(mel.rows, mel.cols, mel.data); }

ag::Var window_mel(const ContextWindow& window) {
  std::vector<ag::Var> parts;
  for (const auto* s : window.sentences) parts.push_back(mel_var(s->mel));
  return parts.size() == 1 ? parts[0] : ag::concat_rows(parts);
}

StyleExtractor::StyleExtractor(ParamStore& store, const std::string& name,
                               const ExtractorConfig& c, Rng& rng)
    : name_(name), store_(&store), config_(c) {
  for (Level l : kLevels) {
    const auto i = static_cast<std::size_t>(l);
    encoders_[i] = ReferenceEncoder(store, level_prefix(l) + ".encoder", c.mel_bins, c.conv_channels,
                                    c.d_ref, rng);
    tokens_[i] = StyleTokenLayer(store, level_prefix(l) + ".tokens", c.d_ref, c.d_style, c.tokens,
                                 c.heads, rng);
  }
}

bool StyleExtractor::level_trainable(Level l) const {
  for (const Param* p : store_->with_prefix(level_prefix(l) + "."))
    if (p->trainable()) return true;
  return false;
}

ReferenceEmbeddings StyleExtractor::extract_reference(const ContextWindow& window, bool train) const {
  const AlignedUtterance& cur = window.current();
  if (cur.mel.rows == 0) throw std::invalid_argument("extract_reference: empty mel for " + cur.key());
  auto update = [&](Level l) { return train && level_trainable(l); };
  ReferenceEmbeddings e;
  e.E_g = encoders_[0](window_mel(window), update(Level::kGlobal));
  const ag::Var mel = mel_var(cur.mel);
  e.E_s = encoders_[1](mel, update(Level::kSentence));
  const auto spans = subword_spans(cur.durations, cur.subword_phoneme_counts);
  std::vector<ag::Var> rows;
  for (const auto& [start, end] : spans) {
    ag::Var slice = end > start ? ag::slice_rows(mel, start, end - start)
                                : ag::Var::zeros(1, cur.mel.cols);
    rows.push_back(encoders_[2](slice, update(Level::kSubword)));
  }
  e.E_w = ag::concat_rows(rows);
  return e;
}

StyleEmbeddings StyleExtractor::style_tokens(const ResidualEmbeddings& r) const {
  StyleEmbeddings s;
  auto g = tokens_[0](r.R_g);
  auto se = tokens_[1](r.R_s);
  auto w = tokens_[2](r.R_w);
  s.S_g = g.style;
  s.S_s = se.style;
  s.S_w = w.style;
  s.token_weights = {g.weights, se.weights, w.weights};
  return s;
}

StyleEmbeddings StyleExtractor::extract(const ContextWindow& window, bool train) const {
  return style_tokens(compute_residuals(extract_reference(window, train)));
}

}  // namespace multistyle
