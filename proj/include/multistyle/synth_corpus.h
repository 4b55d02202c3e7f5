// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic audiobook corpus with planted style factors.
//
// Each document (chapter) carries a pitch offset of +/- chapter_offset_hz,
// balanced across documents, and draws content words from a topic set tied
// to that sign. Each sentence opens with a mood marker token (m-, m0, m+)
// for mood m in {-1, 0, 1}; the realized sentence factor is
//   f_t = m_t + neighbor_weight * (m_{t-1} + m_{t+1})
// and scales tempo and energy. Each subword token carries a fixed lexical
// tone and a stress flag; stressed tokens get a local pitch excursion and
// longer phonemes. Mel frames are a smooth function of phoneme identity,
// pitch and energy.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "multistyle/corpus.h"

namespace multistyle {

struct SynthConfig {
  std::size_t documents = 8;
  std::size_t sentences_per_document = 12;
  std::size_t min_subwords = 4;  // content subwords, excluding the mood marker
  std::size_t max_subwords = 7;
  std::size_t min_phonemes_per_subword = 1;
  std::size_t max_phonemes_per_subword = 3;
  std::size_t mel_bins = 20;
  std::size_t phoneme_inventory = 24;
  std::size_t common_vocab = 30;
  std::size_t topic_vocab = 12;  // per topic set
  double topic_probability = 0.3;
  double chapter_offset_hz = 30.0;
  double neighbor_weight = 0.5;
  double stress_probability = 0.35;
  double stress_excursion_hz = 40.0;
  double base_pitch_hz = 140.0;
  std::size_t test_every = 6;  // sentence_index % test_every == test_every - 1 -> test

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct SentenceFactors {
  std::string document_id;
  std::size_t sentence_index = 0;
  int mood = 0;
  double factor = 0.0;
  std::vector<int> stress;  // per subword, 0 or 1
};

struct DocumentFactors {
  std::string document_id;
  int chapter_sign = 1;
  double chapter_offset_hz = 0.0;
};

struct PlantedFactors {
  std::vector<DocumentFactors> documents;
  std::vector<SentenceFactors> sentences;

  const DocumentFactors& document(const std::string& id) const;
  const SentenceFactors& sentence(const std::string& id, std::size_t index) const;

  static PlantedFactors load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SynthCorpus {
  FeatureConfig features;
  std::vector<AlignedUtterance> utterances;
  PlantedFactors factors;
};

SynthCorpus synthesize_corpus(const SynthConfig& config, std::uint64_t seed);

inline constexpr const char* kManifestName = "manifest.jsonl";
inline constexpr const char* kFactorsName = "factors.jsonl";

// Writes manifest.jsonl, feats/ and factors.jsonl under out_dir and returns
// the manifest path.
std::filesystem::path generate_synthetic_corpus(const SynthConfig& config, std::uint64_t seed,
                                                const std::filesystem::path& out_dir);

}  // namespace multistyle
