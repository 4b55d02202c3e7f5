// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-subword semantic embeddings for a concatenated context window. The
// providers stand in for a pretrained language model.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "multistyle/autograd.h"
#include "multistyle/corpus.h"
#include "multistyle/neural.h"

namespace multistyle {

struct SemanticSequence {
  ag::Var embeddings;                                       // [total_subwords, d_sem]
  std::vector<std::pair<std::size_t, std::size_t>> offsets;  // per sentence (start, length)
  std::size_t d_sem = 0;

  std::size_t total() const { return embeddings.rows(); }
  ag::Var sentence(std::size_t i) const;
};

class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;
  // Embeds every sentence of the window as one concatenated sequence.
  virtual SemanticSequence embed(const ContextWindow& window) const = 0;
  virtual nlohmann::json describe() const = 0;
};

// Seeded pseudo-random projection of each token, optionally mixed with a
// sinusoidal code of its position in the concatenated sequence. With
// `separator`, one position is reserved between consecutive sentences.
class HashProvider : public SemanticProvider {
 public:
  HashProvider(std::uint64_t seed, std::size_t d_sem, bool position_mixing, bool separator = false);
  std::string kind() const override { return "hash"; }
  std::size_t dim() const override { return d_sem_; }
  SemanticSequence embed(const ContextWindow& window) const override;
  nlohmann::json describe() const override;
  std::vector<double> token_vector(const std::string& token) const;

 private:
  std::uint64_t seed_;
  std::size_t d_sem_;
  bool position_mixing_;
  bool separator_;
};

// Arrays stored per utterance: <dir>/index.json maps "doc:idx" to a
// TensorFile of shape [n_subwords, d_sem].
class PrecomputedProvider : public SemanticProvider {
 public:
  explicit PrecomputedProvider(std::filesystem::path store);
  std::string kind() const override { return "precomputed"; }
  std::size_t dim() const override { return d_sem_; }
  SemanticSequence embed(const ContextWindow& window) const override;
  nlohmann::json describe() const override;

  // Writes a store from any provider, one sentence-only window per utterance.
  static void export_store(const SemanticProvider& source, const Corpus& corpus,
                           const std::filesystem::path& store);

 private:
  std::filesystem::path store_;
  std::size_t d_sem_ = 0;
  std::map<std::string, std::string> files_;
};

// Learnable lookup table; row 0 is reserved for unknown tokens.
class TrainableProvider : public SemanticProvider {
 public:
  TrainableProvider(ParamStore& store, const std::string& name, std::vector<std::string> vocab,
                    std::size_t d_sem, Rng& rng);
  std::string kind() const override { return "trainable"; }
  std::size_t dim() const override { return table_.dim(); }
  SemanticSequence embed(const ContextWindow& window) const override;
  nlohmann::json describe() const override;
  std::size_t token_id(const std::string& token) const;
  const Embedding& table() const { return table_; }

 private:
  std::vector<std::string> vocab_;
  std::map<std::string, std::size_t> ids_;
  Embedding table_;
};

SemanticSequence embed_context(const ContextWindow& window, const SemanticProvider& provider);

// Sorted, de-duplicated subword inventory of a corpus.
std::vector<std::string> corpus_vocabulary(const Corpus& corpus);

}  // namespace multistyle
