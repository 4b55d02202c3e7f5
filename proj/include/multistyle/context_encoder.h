// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical context encoder: a subword-level module turns each sentence's
// semantic embeddings into C_w and one sentence vector; a sentence-level
// module turns the window's sentence vectors into C_s and one global vector C_g.

#pragma once

#include <string>
#include <vector>

#include "multistyle/autograd.h"
#include "multistyle/corpus.h"
#include "multistyle/neural.h"
#include "multistyle/semantic.h"

namespace multistyle {

struct SubwordEncoding {
  ag::Var C_w;              // [n, d_ctx]
  ag::Var sentence_vector;  // [1, d_ctx]
  ag::Var weights;          // [1, n]
};

struct SentenceEncoding {
  ag::Var C_s;      // [m, d_ctx]
  ag::Var C_g;      // [1, d_ctx]
  ag::Var weights;  // [1, m]
};

struct ContextEmbeddings {
  std::vector<ag::Var> C_w;          // per sentence [n_i, d_ctx]
  std::vector<ag::Var> subword_weights;
  ag::Var sentence_vectors;          // [m, d_ctx]
  ag::Var C_s;                       // [m, d_ctx]
  ag::Var C_g;                       // [1, d_ctx]
  ag::Var inter_sentence_weights;    // [1, m]
  std::size_t current = 0;

  ag::Var current_C_w() const { return C_w.at(current); }
  ag::Var current_C_s() const { return ag::slice_rows(C_s, current, 1); }
};

class ContextEncoder {
 public:
  ContextEncoder() = default;
  ContextEncoder(ParamStore& store, const std::string& name, std::size_t d_sem, std::size_t d_ctx,
                 Rng& rng);

  SubwordEncoding encode_subwords(const ag::Var& sentence_embeddings) const;
  // The attention query is a learned vector plus C_s[current].
  SentenceEncoding encode_sentences(const ag::Var& sentence_vectors, std::size_t current) const;
  ContextEmbeddings encode(const SemanticSequence& sem, const ContextWindow& window) const;
  std::size_t d_ctx() const { return d_ctx_; }

 private:
  Linear input_;
  BiGru subword_rnn_, sentence_rnn_;
  Param* subword_query_ = nullptr;
  Param* sentence_query_ = nullptr;
  std::size_t d_ctx_ = 0;
};

}  // namespace multistyle
