// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <numeric>

#include "grad_cases.h"
#include "multistyle/context_encoder.h"
#include "multistyle/optimizer.h"
#include "multistyle/semantic.h"

namespace fs = std::filesystem;
using namespace multistyle;
using multistyle::testing::random_leaf;

namespace {

AlignedUtterance sentence(std::size_t idx, std::vector<std::string> subwords) {
  AlignedUtterance u;
  u.document_id = "d";
  u.sentence_index = idx;
  u.subwords = std::move(subwords);
  u.phonemes.assign(u.subwords.size(), "p");
  u.subword_phoneme_counts.assign(u.subwords.size(), 1);
  u.durations.assign(u.subwords.size(), 1);
  u.mel = Matrix(u.subwords.size(), 2);
  u.pitch_frame.assign(u.subwords.size(), 100.0);
  u.energy_frame.assign(u.subwords.size(), 1.0);
  return u;
}

Corpus three_sentences() {
  FeatureConfig f;
  f.mel_bins = 2;
  return Corpus(f, {sentence(0, {"a", "b"}), sentence(1, {"c", "d", "e"}), sentence(2, {"f"})});
}

}  // namespace

TEST_CASE("window embeddings concatenate sentences with offsets", "[semantic]") {
  const Corpus c = three_sentences();
  const HashProvider p(3, 16, true);
  const auto seq = embed_context(c.window("d", 1, 1), p);
  CHECK(seq.embeddings.rows() == 6);
  CHECK(seq.embeddings.cols() == 16);
  using O = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(seq.offsets == O{{0, 2}, {2, 3}, {5, 1}});
  CHECK(seq.sentence(1).rows() == 3);
}

TEST_CASE("hash provider is deterministic", "[semantic]") {
  const Corpus c = three_sentences();
  const auto w = c.window("d", 1, 1);
  CHECK(HashProvider(3, 16, true).embed(w).embeddings.value() ==
        HashProvider(3, 16, true).embed(w).embeddings.value());
  CHECK(HashProvider(3, 16, true).token_vector("c") == HashProvider(3, 16, false).token_vector("c"));
  CHECK(HashProvider(3, 16, true).token_vector("c") != HashProvider(4, 16, true).token_vector("c"));
}

TEST_CASE("position mixing separates repeated tokens", "[semantic]") {
  FeatureConfig f;
  f.mel_bins = 2;
  const Corpus c(f, {sentence(0, {"x", "y", "x"})});
  const auto w = c.window("d", 0, 0);
  const auto mixed = HashProvider(1, 8, true).embed(w).embeddings;
  const auto plain = HashProvider(1, 8, false).embed(w).embeddings;
  bool differs = false;
  for (std::size_t k = 0; k < 8; ++k) {
    differs |= mixed.at(0, k) != mixed.at(2, k);
    CHECK(plain.at(0, k) == plain.at(2, k));
  }
  CHECK(differs);
}

TEST_CASE("precomputed provider returns the stored arrays verbatim", "[semantic]") {
  const Corpus c = three_sentences();
  const fs::path store = fs::temp_directory_path() / "multistyle_precomputed";
  fs::remove_all(store);
  const HashProvider source(5, 12, false);
  PrecomputedProvider::export_store(source, c, store);
  const PrecomputedProvider p(store);
  CHECK(p.dim() == 12);
  const auto w = c.window("d", 1, 0);
  CHECK(p.embed(w).embeddings.value() == source.embed(w).embeddings.value());
}

TEST_CASE("trainable provider updates only the rows it used", "[semantic]") {
  const Corpus c = three_sentences();
  ParamStore store;
  Rng rng(2);
  TrainableProvider p(store, "sem", {"a", "b", "c"}, 4, rng);
  const auto before = p.table().table().values();
  const auto seq = p.embed(c.window("d", 0, 0));  // tokens a, b
  store.zero_grad();
  ag::backward(ag::sum(seq.embeddings));
  Adam adam;
  adam.step(store, 0.1);
  const auto& after = p.table().table().values();
  for (std::size_t row = 0; row < 4; ++row) {
    const bool used = row == p.token_id("a") || row == p.token_id("b");
    for (std::size_t k = 0; k < 4; ++k) CHECK((after[row * 4 + k] != before[row * 4 + k]) == used);
  }
  CHECK(p.token_id("zzz") == 0);
}

TEST_CASE("single-subword sentence attends to itself", "[context]") {
  ParamStore store;
  Rng rng(3);
  ContextEncoder enc(store, "ctx", 6, 8, rng);
  const auto e = enc.encode_subwords(random_leaf(1, 6, rng));
  CHECK(e.weights.value() == std::vector<double>{1.0});
  CHECK(e.sentence_vector.value() == e.C_w.value());
}

TEST_CASE("subword and sentence encodings have the documented shapes", "[context]") {
  ParamStore store;
  Rng rng(4);
  ContextEncoder enc(store, "ctx", 6, 16, rng);
  const auto e = enc.encode_subwords(random_leaf(7, 6, rng));
  CHECK(e.C_w.rows() == 7);
  CHECK(e.C_w.cols() == 16);
  CHECK(e.sentence_vector.cols() == 16);
  const auto s = enc.encode_sentences(random_leaf(5, 16, rng), 2);
  CHECK(s.C_s.rows() == 5);
  CHECK(s.weights.cols() == 5);
  const double total = std::accumulate(s.weights.value().begin(), s.weights.value().end(), 0.0);
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
  const auto one = enc.encode_sentences(random_leaf(1, 16, rng), 0);
  CHECK(one.weights.value() == std::vector<double>{1.0});
  CHECK(one.C_g.value() == one.C_s.value());
}

TEST_CASE("zeroed recurrent layer with identical inputs gives uniform subword weights", "[context]") {
  ParamStore store;
  Rng rng(5);
  ContextEncoder enc(store, "ctx", 4, 8, rng);
  for (const auto& p : store.params())
    if (p->name().find("subword_rnn") != std::string::npos) std::fill(p->values().begin(), p->values().end(), 0.0);
  std::vector<double> row{0.1, -0.4, 0.7, 0.2}, rows;
  for (int i = 0; i < 4; ++i) rows.insert(rows.end(), row.begin(), row.end());
  const auto e = enc.encode_subwords(ag::Var::constant(4, 4, rows));
  for (double w : e.weights.value()) CHECK(w == Catch::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("encoding a window yields one block per sentence", "[context]") {
  const Corpus c = multistyle::testing::tiny_corpus(1, 6);
  ParamStore store;
  Rng rng(6);
  ContextEncoder enc(store, "ctx", 8, 8, rng);
  const HashProvider p(1, 8, true);
  const auto w = c.window(c.document_ids()[0], 2, 2);
  const auto ctx = enc.encode(p.embed(w), w);
  CHECK(ctx.C_w.size() == 5);
  CHECK(ctx.C_s.rows() == 5);
  CHECK(ctx.C_g.rows() == 1);
  CHECK(ctx.current == 2);
  const auto w0 = c.window(c.document_ids()[0], 2, 0);
  const auto solo = enc.encode(p.embed(w0), w0);
  CHECK(solo.C_g.value() == solo.C_s.value());
}

TEST_CASE("semantic sequence that does not cover the window is rejected", "[context]") {
  const Corpus c = three_sentences();
  ParamStore store;
  Rng rng(7);
  ContextEncoder enc(store, "ctx", 8, 8, rng);
  const HashProvider p(1, 8, true);
  CHECK_THROWS_AS(enc.encode(p.embed(c.window("d", 1, 0)), c.window("d", 1, 1)), std::invalid_argument);
}
