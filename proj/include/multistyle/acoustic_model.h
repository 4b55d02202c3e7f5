// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Non-autoregressive acoustic model. Phoneme encoder, style injection, a
// phoneme-level variance adaptor (pitch, energy), then the duration
// predictor and length regulator, then the mel decoder.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "multistyle/autograd.h"
#include "multistyle/neural.h"

namespace multistyle {

struct AcousticConfig {
  std::size_t phoneme_count = 0;
  std::size_t mel_bins = 80;
  std::size_t d_model = 128;
  std::size_t heads = 2;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t d_ffn = 256;
  std::size_t variance_channels = 128;
  std::size_t variance_bins = 64;
  double pitch_min = 0.0;
  double pitch_max = 600.0;
  double energy_min = 0.0;
  double energy_max = 1.0;
  // Pitch and energy predictors work on z-scored phone-level values.
  double pitch_mean = 0.0, pitch_std = 1.0;
  double energy_mean = 0.0, energy_std = 1.0;
};

// Linear bins over [lo, hi]; values at or beyond the ends land in the first
// and last bin.
std::size_t bucketize(double value, double lo, double hi, std::size_t bins);

// Per-phoneme style rows S_g + S_s + S_w[subword_of[p]].
ag::Var replicate_styles(const ag::Var& S_g, const ag::Var& S_s, const ag::Var& S_w,
                         std::span<const std::size_t> subword_of);

// Row p of hidden repeated durations[p] times.
ag::Var length_regulate(const ag::Var& hidden, std::span<const std::size_t> durations);

// round(exp(log_duration) - 1), floored at zero.
std::size_t duration_from_log(double log_duration);

struct VarianceTargets {
  std::vector<double> pitch;   // Hz, per phoneme
  std::vector<double> energy;  // linear, per phoneme
  std::vector<std::size_t> durations;
};

struct VarianceOutput {
  ag::Var hidden;        // [n, d_model] after pitch/energy embeddings
  ag::Var pitch_z;       // [n, 1]
  ag::Var energy_z;      // [n, 1]
  ag::Var log_duration;  // [n, 1]
};

struct VariancePredictions {
  std::vector<double> pitch;   // Hz
  std::vector<double> energy;  // linear
  std::vector<double> log_duration;
};

struct AcousticOutput {
  ag::Var mel;  // [frames, mel_bins]
  VarianceOutput variance;
  std::vector<std::size_t> durations;  // frames used by the length regulator
};

class VariancePredictor {
 public:
  VariancePredictor() = default;
  VariancePredictor(ParamStore& store, const std::string& name, std::size_t d_model,
                    std::size_t channels, Rng& rng);
  ag::Var operator()(const ag::Var& hidden) const;  // [n, 1]

 private:
  Conv1d conv1_, conv2_;
  Param *ln1_g_ = nullptr, *ln1_b_ = nullptr, *ln2_g_ = nullptr, *ln2_b_ = nullptr;
  Linear out_;
};

class AcousticModel {
 public:
  AcousticModel() = default;
  AcousticModel(ParamStore& store, const std::string& name, const AcousticConfig& config, Rng& rng);

  ag::Var encode_phonemes(std::span<const std::size_t> ids) const;
  // With targets, the embeddings use ground-truth pitch and energy.
  VarianceOutput variance_adapt(const ag::Var& hidden, const VarianceTargets* targets) const;
  ag::Var decode_mel(const ag::Var& frames_hidden) const;

  // style_rows: [n, d_model] per-phoneme style (see replicate_styles).
  // With targets, durations and variances are teacher forced.
  AcousticOutput synthesize(std::span<const std::size_t> ids, const ag::Var& style_rows,
                            const VarianceTargets* targets) const;

  VariancePredictions denormalize(const VarianceOutput& v) const;
  double normalize_pitch(double hz) const { return (hz - config_.pitch_mean) / config_.pitch_std; }
  double normalize_energy(double e) const { return (e - config_.energy_mean) / config_.energy_std; }
  const AcousticConfig& config() const { return config_; }

 private:
  AcousticConfig config_;
  Embedding phoneme_embedding_;
  std::vector<FftBlock> encoder_, decoder_;
  VariancePredictor pitch_, energy_, duration_;
  Embedding pitch_embedding_, energy_embedding_;
  Linear mel_out_;
};

}  // namespace multistyle
