// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end operations shared by the command line tool and the bindings:
// staged training with ordering checks and resume, sentence and paragraph
// synthesis, and style export.

#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multistyle/config.h"
#include "multistyle/corpus.h"
#include "multistyle/evaluation.h"
#include "multistyle/model.h"
#include "multistyle/training.h"

namespace multistyle {

// A request that cannot run as asked: bad flags, missing prerequisite
// stage, unknown utterance, mode mismatch.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "1", "2", "3" or "all".
std::vector<int> parse_stages(const std::string& s);

struct TrainResult {
  std::filesystem::path out_dir;
  std::vector<TrainLogRecord> history;  // records produced by this call
};

// Runs `stages` in order under resolve_output(config.output_dir). Stage k > 1
// starts from <out>/stage<k-1>; a resume checkpoint replaces the starting
// point of the stage it was taken in.
TrainResult run_training(const RunConfig& config, const std::vector<int>& stages,
                         const std::filesystem::path& resume = {}, std::ostream* progress = nullptr);

bool stage_complete(const std::filesystem::path& out_dir, int stage);

struct Synthesis {
  std::string key;
  FrameContours frames;
};

Synthesis synthesize_utterance(const MultiStyleModel& model, const Corpus& corpus, const AlignedUtterance& u,
                               bool use_extractor);

struct ParagraphSynthesis {
  std::vector<Synthesis> sentences;
  Matrix mel;  // sentence mels stacked in order
  bool autoregressive = false;
};

// Styles for the whole document come from predict_paragraph; `count` keeps
// the first sentences only (0 keeps all).
ParagraphSynthesis synthesize_paragraph(const MultiStyleModel& model, const Corpus& corpus,
                                        const std::string& document, std::size_t count = 0);

// "doc:7" -> "doc_0007".
std::string file_stem(const std::string& document_id, std::size_t sentence_index);

// <dir>/<stem>.{mel,pitch,energy}.mst; returns the mel path.
std::filesystem::path write_synthesis(const std::filesystem::path& dir, const AlignedUtterance& u,
                                      const Synthesis& s);

// Per utterance <dir>/<stem>.{global,sentence,subword}.mst plus index.json.
void export_styles(const MultiStyleModel& model, const Corpus& corpus, StyleSource source,
                   const std::filesystem::path& dir);

std::pair<std::string, std::size_t> parse_utterance_key(const std::string& key);

}  // namespace multistyle
