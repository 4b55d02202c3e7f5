// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/acoustic_model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace multistyle {

std::size_t bucketize(double value, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double pos = std::floor((value - lo) / (hi - lo) * static_cast<double>(bins));
  if (pos <= 0) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

ag::Var replicate_styles(const ag::Var& S_g, const ag::Var& S_s, const ag::Var& S_w,
                         std::span<const std::size_t> subword_of) {
  for (std::size_t s : subword_of)
    if (s >= S_w.rows())
      throw std::out_of_range("replicate_styles: subword index " + std::to_string(s) +
                              " out of range for " + std::to_string(S_w.rows()) + " subwords");
  return ag::add_row(ag::gather_rows(S_w, subword_of), ag::add(S_g, S_s));
}

ag::Var length_regulate(const ag::Var& hidden, std::span<const std::size_t> durations) {
  if (durations.size() != hidden.rows())
    throw std::invalid_argument("length_regulate: duration count does not match phoneme count");
  if (std::all_of(durations.begin(), durations.end(), [](std::size_t d) { return d == 0; }))
    throw std::invalid_argument("length_regulate: all durations are zero");
  return ag::repeat_rows(hidden, durations);
}

std::size_t duration_from_log(double log_duration) {
  const double frames = std::round(std::exp(log_duration) - 1.0);
  return frames > 0 ? static_cast<std::size_t>(frames) : 0;
}

VariancePredictor::VariancePredictor(ParamStore& store, const std::string& name,
                                     std::size_t d_model, std::size_t channels, Rng& rng) {
  conv1_ = Conv1d(store, name + ".conv1", d_model, channels, 3, rng);
  conv2_ = Conv1d(store, name + ".conv2", channels, channels, 3, rng);
  ln1_g_ = &store.add(name + ".ln1_gain", 1, channels, std::vector<double>(channels, 1.0));
  ln1_b_ = &store.add(name + ".ln1_bias", 1, channels, std::vector<double>(channels, 0.0));
  ln2_g_ = &store.add(name + ".ln2_gain", 1, channels, std::vector<double>(channels, 1.0));
  ln2_b_ = &store.add(name + ".ln2_bias", 1, channels, std::vector<double>(channels, 0.0));
  out_ = Linear(store, name + ".out", channels, 1, rng);
}

ag::Var VariancePredictor::operator()(const ag::Var& hidden) const {
  ag::Var h = ag::layer_norm_rows(ag::relu(conv1_(hidden)), ln1_g_->var(), ln1_b_->var());
  h = ag::layer_norm_rows(ag::relu(conv2_(h)), ln2_g_->var(), ln2_b_->var());
  return out_(h);
}

AcousticModel::AcousticModel(ParamStore& store, const std::string& name, const AcousticConfig& c,
                             Rng& rng)
    : config_(c) {
  if (c.phoneme_count == 0) throw std::invalid_argument("AcousticModel: empty phoneme inventory");
  phoneme_embedding_ = Embedding(store, name + ".phoneme_embedding", c.phoneme_count, c.d_model, rng);
  for (std::size_t i = 0; i < c.encoder_layers; ++i)
    encoder_.emplace_back(store, name + ".encoder" + std::to_string(i), c.d_model, c.heads, c.d_ffn, rng);
  pitch_ = VariancePredictor(store, name + ".pitch_predictor", c.d_model, c.variance_channels, rng);
  energy_ = VariancePredictor(store, name + ".energy_predictor", c.d_model, c.variance_channels, rng);
  pitch_embedding_ = Embedding(store, name + ".pitch_embedding", c.variance_bins, c.d_model, rng, 0.1);
  energy_embedding_ = Embedding(store, name + ".energy_embedding", c.variance_bins, c.d_model, rng, 0.1);
  duration_ = VariancePredictor(store, name + ".duration_predictor", c.d_model, c.variance_channels, rng);
  for (std::size_t i = 0; i < c.decoder_layers; ++i)
    decoder_.emplace_back(store, name + ".decoder" + std::to_string(i), c.d_model, c.heads, c.d_ffn, rng);
  mel_out_ = Linear(store, name + ".mel_out", c.d_model, c.mel_bins, rng);
}

ag::Var AcousticModel::encode_phonemes(std::span<const std::size_t> ids) const {
  if (ids.empty()) throw std::invalid_argument("encode_phonemes: empty sequence");
  for (std::size_t id : ids)
    if (id >= config_.phoneme_count) throw std::out_of_range("encode_phonemes: unknown id " + std::to_string(id));
  ag::Var h = ag::add(phoneme_embedding_(ids), sinusoid_positions(ids.size(), config_.d_model));
  for (const auto& block : encoder_) h = block(h);
  return h;
}

VarianceOutput AcousticModel::variance_adapt(const ag::Var& hidden,
                                             const VarianceTargets* targets) const {
  VarianceOutput out;
  out.pitch_z = pitch_(hidden);
  out.energy_z = energy_(hidden);
  const std::size_t n = hidden.rows();
  std::vector<std::size_t> pitch_bins(n), energy_bins(n);
  if (targets && (targets->pitch.size() != n || targets->energy.size() != n))
    throw std::invalid_argument("variance_adapt: target length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const double p = targets ? targets->pitch[i]
                             : out.pitch_z.value()[i] * config_.pitch_std + config_.pitch_mean;
    const double e = targets ? targets->energy[i]
                             : out.energy_z.value()[i] * config_.energy_std + config_.energy_mean;
    pitch_bins[i] = bucketize(p, config_.pitch_min, config_.pitch_max, config_.variance_bins);
    energy_bins[i] = bucketize(e, config_.energy_min, config_.energy_max, config_.variance_bins);
  }
  out.hidden = ag::add(ag::add(hidden, pitch_embedding_(pitch_bins)), energy_embedding_(energy_bins));
  out.log_duration = duration_(out.hidden);
  return out;
}

ag::Var AcousticModel::decode_mel(const ag::Var& frames_hidden) const {
  ag::Var h = ag::add(frames_hidden, sinusoid_positions(frames_hidden.rows(), config_.d_model));
  for (const auto& block : decoder_) h = block(h);
  return mel_out_(h);
}

AcousticOutput AcousticModel::synthesize(std::span<const std::size_t> ids, const ag::Var& style_rows,
                                         const VarianceTargets* targets) const {
  if (style_rows.rows() != ids.size() || style_rows.cols() != config_.d_model)
    throw std::invalid_argument("synthesize: style rows must be [n_phonemes, d_model]");
  AcousticOutput out;
  ag::Var h = ag::add(encode_phonemes(ids), style_rows);
  out.variance = variance_adapt(h, targets);
  if (targets) {
    if (targets->durations.size() != ids.size())
      throw std::invalid_argument("synthesize: duration target length mismatch");
    out.durations = targets->durations;
  } else {
    const auto& ld = out.variance.log_duration.value();
    for (double v : ld) out.durations.push_back(duration_from_log(v));
    // An all-silent prediction still yields one frame, on the longest phoneme.
    if (std::all_of(out.durations.begin(), out.durations.end(), [](std::size_t d) { return d == 0; }))
      out.durations[static_cast<std::size_t>(std::max_element(ld.begin(), ld.end()) - ld.begin())] = 1;
  }
  out.mel = decode_mel(length_regulate(out.variance.hidden, out.durations));
  return out;
}

VariancePredictions AcousticModel::denormalize(const VarianceOutput& v) const {
  VariancePredictions p;
  for (double z : v.pitch_z.value()) p.pitch.push_back(z * config_.pitch_std + config_.pitch_mean);
  for (double z : v.energy_z.value()) p.energy.push_back(z * config_.energy_std + config_.energy_mean);
  p.log_duration = v.log_duration.value();
  return p;
}

}  // namespace multistyle
