// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/context_encoder.h"

#include <stdexcept>

namespace multistyle {

ContextEncoder::ContextEncoder(ParamStore& store, const std::string& name, std::size_t d_sem,
                               std::size_t d_ctx, Rng& rng)
    : d_ctx_(d_ctx) {
  if (d_ctx == 0 || d_ctx % 2 != 0) throw std::invalid_argument("ContextEncoder: d_ctx must be even");
  input_ = Linear(store, name + ".input", d_sem, d_ctx, rng);
  subword_rnn_ = BiGru(store, name + ".subword_rnn", d_ctx, d_ctx / 2, rng);
  sentence_rnn_ = BiGru(store, name + ".sentence_rnn", d_ctx, d_ctx / 2, rng);
  subword_query_ = &store.add(name + ".subword_query", 1, d_ctx, fan_in_init(d_ctx, 1, rng));
  sentence_query_ = &store.add(name + ".sentence_query", 1, d_ctx, fan_in_init(d_ctx, 1, rng));
}

SubwordEncoding ContextEncoder::encode_subwords(const ag::Var& emb) const {
  if (emb.rows() == 0) throw std::invalid_argument("encode_subwords: empty sentence");
  ag::Var c_w = subword_rnn_(input_(emb));
  auto att = scaled_dot_attention(subword_query_->var(), c_w, c_w);
  return {c_w, att.context, att.weights};
}

SentenceEncoding ContextEncoder::encode_sentences(const ag::Var& vectors, std::size_t current) const {
  if (vectors.rows() == 0) throw std::invalid_argument("encode_sentences: no sentences");
  if (current >= vectors.rows()) throw std::invalid_argument("encode_sentences: current out of range");
  ag::Var c_s = sentence_rnn_(vectors);
  // The current sentence joins the learned query, so the window is read
  // relative to it.
  const ag::Var query = ag::add(sentence_query_->var(), ag::slice_rows(c_s, current, 1));
  auto att = scaled_dot_attention(query, c_s, c_s);
  return {c_s, att.context, att.weights};
}

ContextEmbeddings ContextEncoder::encode(const SemanticSequence& sem,
                                         const ContextWindow& window) const {
  if (sem.offsets.size() != window.size())
    throw std::invalid_argument("encode_context: semantic sequence covers " +
                                std::to_string(sem.offsets.size()) + " sentences, window has " +
                                std::to_string(window.size()));
  ContextEmbeddings out;
  std::vector<ag::Var> vectors;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (sem.offsets[i].second != window.sentences[i]->subwords.size())
      throw std::invalid_argument("encode_context: offset mismatch for sentence " +
                                  window.sentences[i]->key());
    auto enc = encode_subwords(sem.sentence(i));
    out.C_w.push_back(enc.C_w);
    out.subword_weights.push_back(enc.weights);
    vectors.push_back(enc.sentence_vector);
  }
  out.sentence_vectors = vectors.size() == 1 ? vectors[0] : ag::concat_rows(vectors);
  auto sent = encode_sentences(out.sentence_vectors, window.current_offset);
  out.C_s = sent.C_s;
  out.C_g = sent.C_g;
  out.inter_sentence_weights = sent.weights;
  out.current = window.current_offset;
  return out;
}

}  // namespace multistyle
