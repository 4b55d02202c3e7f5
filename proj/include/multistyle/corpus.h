// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Aligned utterances, the corpus manifest, and context windows.
//
// Manifest format (one JSON object per line):
//   {"kind":"header","version":1,"feature_config":{"mel_bins":80,
//    "sample_rate_hz":24000,"frame_size_samples":1200,"hop_size_samples":240}}
//   {"kind":"utterance","document_id":"doc00","sentence_index":0,
//    "text":"m+ w3 w17","subwords":["m+","w3","w17"],"phonemes":[...],
//    "subword_phoneme_counts":[...],"durations":[...],"split":"train",
//    "mel":"feats/doc00_0000.mel.mst","pitch":"...","energy":"..."}
// Tensor paths are relative to the manifest's directory.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multistyle/matrix.h"

namespace multistyle {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureConfig {
  std::size_t mel_bins = 80;
  double sample_rate_hz = 24000.0;
  std::size_t frame_size_samples = 1200;
  std::size_t hop_size_samples = 240;
};

struct AlignedUtterance {
  std::string document_id;
  std::size_t sentence_index = 0;
  std::vector<std::string> subwords;
  std::vector<std::string> phonemes;
  std::vector<std::size_t> subword_phoneme_counts;
  std::vector<std::size_t> durations;  // frames per phoneme
  Matrix mel;                          // [frames, mel_bins], log amplitude
  std::vector<double> pitch_frame;     // Hz, 0 = unvoiced
  std::vector<double> energy_frame;    // linear
  std::string split = "train";

  std::size_t frames() const { return mel.rows; }
  std::string key() const;
  std::string text() const;
  // Per-phoneme index of the owning subword.
  std::vector<std::size_t> subword_of_phoneme() const;
  // Throws CorpusError describing the first violated invariant.
  void validate() const;
};

using FrameSpan = std::pair<std::size_t, std::size_t>;  // [start, end)

// Frame range covered by each subword's phonemes; a partition of
// [0, sum(durations)). Subwords whose phonemes all last zero frames get an
// empty span (start == end).
std::vector<FrameSpan> subword_spans(const std::vector<std::size_t>& durations,
                                     const std::vector<std::size_t>& subword_phoneme_counts);

// Mean of the frames in each phoneme's span. Zero-duration phonemes yield 0.
// With exclude_unvoiced, zero-valued frames are left out of the mean and an
// all-zero phoneme yields 0 (pitch convention).
std::vector<double> phone_level_average(const std::vector<double>& frame_values,
                                        const std::vector<std::size_t>& durations,
                                        bool exclude_unvoiced = false);

struct ContextWindow {
  std::vector<const AlignedUtterance*> sentences;
  std::size_t current_offset = 0;
  std::size_t radius = 0;

  const AlignedUtterance& current() const { return *sentences.at(current_offset); }
  std::size_t size() const { return sentences.size(); }
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(FeatureConfig features, std::vector<AlignedUtterance> utterances);

  static Corpus load(const std::filesystem::path& manifest_path);

  const FeatureConfig& features() const { return features_; }
  const std::vector<std::string>& document_ids() const { return doc_ids_; }
  const std::vector<AlignedUtterance>& document(const std::string& id) const;
  const AlignedUtterance& utterance(const std::string& document_id, std::size_t sentence_index) const;
  bool contains(const std::string& document_id, std::size_t sentence_index) const;
  std::size_t size() const;
  // Every utterance in document order, optionally restricted to one split.
  std::vector<const AlignedUtterance*> utterances(const std::string& split = "") const;

  // Current sentence plus up to `radius` neighbours on each side, clamped to
  // the document and never crossing a gap in sentence indices.
  ContextWindow window(const std::string& document_id, std::size_t sentence_index,
                       std::size_t radius) const;

 private:
  FeatureConfig features_;
  std::vector<std::string> doc_ids_;
  std::map<std::string, std::vector<AlignedUtterance>> docs_;
};

ContextWindow build_context_window(const Corpus& corpus, const std::string& document_id,
                                   std::size_t sentence_index, std::size_t radius);

// Writes a manifest plus tensors under `root`; tensor paths are
// feats/<document>_<index>.{mel,pitch,energy}.mst.
void write_corpus(const std::filesystem::path& root, const std::string& manifest_name,
                  const FeatureConfig& features, const std::vector<AlignedUtterance>& utterances);

}  // namespace multistyle
