// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/semantic.h"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "multistyle/tensor_file.h"

namespace multistyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_sentences(const ContextWindow& window) {
  if (window.sentences.empty()) throw std::invalid_argument("embed_context: empty window");
  for (const auto* s : window.sentences)
    if (s->subwords.empty())
      throw std::invalid_argument("embed_context: sentence " + s->key() + " has no subwords");
}

std::vector<std::pair<std::size_t, std::size_t>> window_offsets(const ContextWindow& window) {
  std::vector<std::pair<std::size_t, std::size_t>> offsets;
  std::size_t start = 0;
  for (const auto* s : window.sentences) {
    offsets.emplace_back(start, s->subwords.size());
    start += s->subwords.size();
  }
  return offsets;
}

}  // namespace

ag::Var SemanticSequence::sentence(std::size_t i) const {
  return ag::slice_rows(embeddings, offsets.at(i).first, offsets.at(i).second);
}

HashProvider::HashProvider(std::uint64_t seed, std::size_t d_sem, bool position_mixing, bool separator)
    : seed_(seed), d_sem_(d_sem), position_mixing_(position_mixing), separator_(separator) {
  if (d_sem == 0) throw std::invalid_argument("HashProvider: d_sem must be positive");
}

std::vector<double> HashProvider::token_vector(const std::string& token) const {
  std::uint64_t state = fnv1a(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL);
  std::vector<double> v(d_sem_);
  for (auto& x : v) x = static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  return v;
}

SemanticSequence HashProvider::embed(const ContextWindow& window) const {
  check_sentences(window);
  SemanticSequence seq;
  seq.d_sem = d_sem_;
  seq.offsets = window_offsets(window);
  std::vector<double> values;
  std::size_t position = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < window.sentences.size(); ++s) {
    if (separator_ && s > 0) ++position;
    for (const auto& tok : window.sentences[s]->subwords) {
      auto v = token_vector(tok);
      if (position_mixing_) {
        for (std::size_t i = 0; i < d_sem_; ++i) {
          const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_sem_));
          const double a = static_cast<double>(position) * rate;
          v[i] += 0.5 * (i % 2 == 0 ? std::sin(a) : std::cos(a));
        }
      }
      values.insert(values.end(), v.begin(), v.end());
      ++position;
      ++total;
    }
  }
  seq.embeddings = ag::Var::constant(total, d_sem_, std::move(values));
  return seq;
}

json HashProvider::describe() const {
  return {{"kind", "hash"},
          {"seed", seed_},
          {"d_sem", d_sem_},
          {"position_mixing", position_mixing_},
          {"separator", separator_}};
}

PrecomputedProvider::PrecomputedProvider(fs::path store) : store_(std::move(store)) {
  std::ifstream in(store_ / "index.json");
  if (!in) throw std::runtime_error("precomputed store has no index.json: " + store_.string());
  const json index = json::parse(in);
  d_sem_ = index.at("d_sem");
  files_ = index.at("entries").get<std::map<std::string, std::string>>();
}

SemanticSequence PrecomputedProvider::embed(const ContextWindow& window) const {
  check_sentences(window);
  SemanticSequence seq;
  seq.d_sem = d_sem_;
  seq.offsets = window_offsets(window);
  std::vector<ag::Var> blocks;
  for (const auto* s : window.sentences) {
    auto it = files_.find(s->key());
    if (it == files_.end()) throw std::runtime_error("precomputed store has no entry for " + s->key());
    NdArray a = read_tensor(store_ / it->second);
    if (a.dims.size() != 2 || a.dims[0] != s->subwords.size() || a.dims[1] != d_sem_)
      throw std::runtime_error("precomputed entry " + s->key() + " has the wrong shape");
    blocks.push_back(ag::Var::constant(a.dims[0], a.dims[1], std::move(a.values)));
  }
  seq.embeddings = blocks.size() == 1 ? blocks[0] : ag::concat_rows(blocks);
  return seq;
}

json PrecomputedProvider::describe() const {
  return {{"kind", "precomputed"}, {"store", store_.string()}, {"d_sem", d_sem_}};
}

void PrecomputedProvider::export_store(const SemanticProvider& source, const Corpus& corpus,
                                       const fs::path& store) {
  fs::create_directories(store);
  json entries = json::object();
  for (const auto* u : corpus.utterances()) {
    ContextWindow w{{u}, 0, 0};
    const auto seq = source.embed(w);
    std::string file = u->document_id + "_" + std::to_string(u->sentence_index) + ".mst";
    write_tensor(store / file, NdArray{{seq.embeddings.rows(), seq.embeddings.cols()},
                                       seq.embeddings.value(), DType::kFloat64});
    entries[u->key()] = file;
  }
  std::ofstream out(store / "index.json", std::ios::trunc);
  out << json{{"d_sem", source.dim()}, {"entries", entries}}.dump(1) << "\n";
}

TrainableProvider::TrainableProvider(ParamStore& store, const std::string& name,
                                     std::vector<std::string> vocab, std::size_t d_sem, Rng& rng)
    : vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_[vocab_[i]] = i + 1;
  table_ = Embedding(store, name, vocab_.size() + 1, d_sem, rng);
}

std::size_t TrainableProvider::token_id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? 0 : it->second;
}

SemanticSequence TrainableProvider::embed(const ContextWindow& window) const {
  check_sentences(window);
  SemanticSequence seq;
  seq.d_sem = dim();
  seq.offsets = window_offsets(window);
  std::vector<std::size_t> ids;
  for (const auto* s : window.sentences)
    for (const auto& tok : s->subwords) ids.push_back(token_id(tok));
  seq.embeddings = table_(ids);
  return seq;
}

json TrainableProvider::describe() const {
  return {{"kind", "trainable"}, {"d_sem", dim()}, {"vocab", vocab_}};
}

SemanticSequence embed_context(const ContextWindow& window, const SemanticProvider& provider) {
  return provider.embed(window);
}

std::vector<std::string> corpus_vocabulary(const Corpus& corpus) {
  std::set<std::string> tokens;
  for (const auto* u : corpus.utterances())
    tokens.insert(u->subwords.begin(), u->subwords.end());
  return {tokens.begin(), tokens.end()};
}

}  // namespace multistyle
