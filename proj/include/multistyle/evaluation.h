// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Objective metrics on DTW-aligned mel-spectrograms, attention dumps, and
// linear probes relating extracted styles to planted corpus factors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "multistyle/corpus.h"
#include "multistyle/matrix.h"
#include "multistyle/model.h"
#include "multistyle/synth_corpus.h"

namespace multistyle {

struct DtwPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};

// Minimal-cost monotone alignment under per-frame Euclidean distance. Ties
// prefer the diagonal step, then (1,0).
DtwPath dtw_align(const Matrix& a, const Matrix& b);

// Orthonormal DCT-II of one log-mel frame.
std::vector<double> mel_cepstrum(std::span<const double> log_mel);

inline constexpr std::size_t kDefaultCepstra = 13;

// Mean over aligned pairs of (10 / ln 10) * sqrt(2 * sum_{k=1..K} (c_k - c'_k)^2).
double mcd(const Matrix& a, const Matrix& b, const DtwPath& path, std::size_t K = kDefaultCepstra);

// RMSE over aligned pairs, skipping pairs where both frames are unvoiced (0).
double f0_rmse(std::span<const double> a, std::span<const double> b, const DtwPath& path);
double energy_rmse(std::span<const double> a, std::span<const double> b, const DtwPath& path);

// MSE between log(frames + 1) sequences.
double duration_mse(std::span<const double> pred_log, std::span<const double> true_log);
std::vector<double> log_durations(std::span<const std::size_t> frames);

struct UtteranceMetrics {
  std::string key;
  double mcd = 0, f0_rmse = 0, energy_rmse = 0, duration_mse = 0;
  std::optional<double> style_mse;
};

struct MetricReport {
  std::string mode;
  std::vector<UtteranceMetrics> utterances;
  UtteranceMetrics aggregate;  // means of the per-utterance values

  void finalize();
  void write(const std::filesystem::path& jsonl, const std::filesystem::path& summary) const;
  nlohmann::json aggregate_json() const;
};

enum class StyleSource { kPredicted, kExtracted, kCopy };
StyleSource parse_style_source(const std::string& s);
const char* to_string(StyleSource s);

// Frames of pitch below this are treated as unvoiced when expanding
// predicted phone pitch to frames.
inline constexpr double kVoicingThresholdHz = 30.0;

// Frame-level view of a synthesis: phone pitch and energy repeated by the
// regulated durations, pitch below the voicing threshold set to 0.
struct FrameContours {
  Matrix mel;
  std::vector<double> pitch, energy, log_duration;
};
FrameContours frame_contours(const MultiStyleModel& model, const AcousticOutput& out);

// Synthesizes every utterance of `split` free-running and scores it against
// the ground truth. kCopy scores the ground truth against itself.
MetricReport evaluate_split(const MultiStyleModel* model, const Corpus& corpus, const std::string& split,
                            StyleSource source);

// Inter-sentence attention rows for utterances whose window holds exactly
// window_size sentences, up to `samples` of them drawn with `seed`.
struct AttentionDump {
  Matrix weights;  // [samples, window_size]
  std::vector<std::string> keys;
  std::vector<std::size_t> current_offset;
};
AttentionDump dump_attention(const MultiStyleModel& model, const Corpus& corpus, std::size_t samples,
                             std::size_t window_size, std::uint64_t seed = 0, const std::string& split = "");

struct ProbeResult {
  double accuracy = 0;  // sign agreement for +/-1 labels
  double r2 = 0;
  double chance = 0;    // majority-class rate on the evaluation set
  std::size_t train_count = 0, test_count = 0;
};

// Ridge least squares with an intercept, fitted on (x_train, y_train) and
// scored on (x_test, y_test).
ProbeResult linear_probe(const Matrix& x_train, std::span<const double> y_train, const Matrix& x_test,
                         std::span<const double> y_test, double ridge = 1e-3);

struct ScaleSeparation {
  ProbeResult global_chapter, sentence_factor, subword_stress, subword_chapter, sentence_chapter;
  nlohmann::json to_json() const;
};

ScaleSeparation scale_separation_probe(const MultiStyleModel& model, const Corpus& corpus,
                                       const PlantedFactors& factors, double ridge = 1e-3);

}  // namespace multistyle
