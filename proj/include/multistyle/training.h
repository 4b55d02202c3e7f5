// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Three-stage schedule:
//   1. extractor + acoustic model, one extractor level trainable at a time
//      (global, then sentence, then subword), acoustic model throughout;
//   2. predictor distilled from frozen extractor outputs;
//   3. predictor + acoustic model fine-tuned together at a reduced rate.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "multistyle/corpus.h"
#include "multistyle/model.h"
#include "multistyle/optimizer.h"

namespace multistyle {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t stage1_per_level = 600;
  std::size_t stage2_steps = 200;
  std::size_t stage3_steps = 200;
  double base_lr = 1e-3;
  std::size_t warmup_steps = 40;
  AdamConfig adam;
  double stage3_lr_scale = 0.1;
  double style_loss_weight = 1.0;
  std::uint64_t seed = 7;
  bool mel_loss_mae = true;  // false: squared error
  // Stage 1: let levels whose sub-phase has not come yet contribute their
  // (frozen, untrained) styles. Off replaces them with zeros.
  bool include_untrained_levels = false;
  std::size_t paragraph_length = 4;  // AR mode: sentences per training paragraph
  std::size_t checkpoint_every = 0;  // mid-stage resume snapshots; 0 disables
  double style_target_clamp = 0.999;

  std::size_t stage1_steps() const { return 3 * stage1_per_level; }
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LossComponents {
  double mel = 0, pitch = 0, energy = 0, duration = 0, style = 0, total = 0;
};

struct AcousticLoss {
  ag::Var total;
  LossComponents parts;
};

AcousticLoss acoustic_loss(const MultiStyleModel& model, const AcousticOutput& out,
                           const AlignedUtterance& truth, bool mel_mae = true);

struct StyleLoss {
  ag::Var total;
  double global = 0, sentence = 0, subword = 0;
};

// Targets are clamped to [-clamp, clamp] before the squared error.
StyleLoss style_loss(const PredictedStyles& pred, const PredictedStyles& target, double clamp = 0.999);

// Detached extractor outputs for every utterance, keyed by "doc:idx".
using StyleTargets = std::map<std::string, PredictedStyles>;
StyleTargets extract_targets(const MultiStyleModel& model, const Corpus& corpus);

// Per-level, per-dimension mean and standard deviation of atanh(target) over
// the given utterances, with targets clamped to [-clamp, clamp].
inline constexpr double kMinTargetScale = 1e-4;
std::array<StylePredictor::TargetStatistics, 3> target_statistics(
    const StyleTargets& targets, std::span<const AlignedUtterance* const> utterances, double clamp);

struct StageInfo {
  int stage = 0;
  std::size_t step = 0;  // completed steps within the stage
};

// Stage-1 sub-phase in effect at 0-based step `step`.
Level active_level(std::size_t step, std::size_t per_level);

struct TrainLogRecord {
  int stage = 0;
  std::size_t step = 0;  // 1-based within the stage
  std::string level;     // stage 1 only
  double lr = 0;
  LossComponents loss;
};

class Trainer {
 public:
  using SubphaseHook = std::function<void(Level, const MultiStyleModel&)>;

  Trainer(const Corpus& corpus, TrainConfig config, std::filesystem::path out_dir);

  // Each stage starts from `start` completed steps (0 for a fresh stage) and
  // leaves its final checkpoint under <out>/stage<k>.
  void stage1(MultiStyleModel& model, Adam& adam, std::size_t start = 0);
  void stage2(MultiStyleModel& model, Adam& adam, std::size_t start = 0);
  void stage3(MultiStyleModel& model, Adam& adam, std::size_t start = 0);

  void set_subphase_hook(SubphaseHook hook) { subphase_hook_ = std::move(hook); }
  void set_log_path(std::filesystem::path p) { log_path_ = std::move(p); }
  const std::vector<TrainLogRecord>& history() const { return history_; }

  std::filesystem::path stage_dir(int stage) const;
  std::filesystem::path resume_dir(int stage) const;

  // Per-step trainable sets.
  static void configure_stage1(MultiStyleModel& model, Level active);
  static void configure_stage2(MultiStyleModel& model);
  static void configure_stage3(MultiStyleModel& model);

 private:
  std::vector<const AlignedUtterance*> sample_batch(int stage, std::size_t step) const;
  std::vector<std::vector<const AlignedUtterance*>> sample_paragraphs(int stage, std::size_t step) const;
  void record(const TrainLogRecord& r);
  void maybe_snapshot(const MultiStyleModel& model, const Adam& adam, int stage, std::size_t step,
                      std::size_t total);
  void ensure_targets(const MultiStyleModel& model);

  const Corpus& corpus_;
  TrainConfig config_;
  std::filesystem::path out_;
  std::filesystem::path log_path_;
  std::vector<const AlignedUtterance*> train_;
  std::vector<std::vector<const AlignedUtterance*>> runs_;  // consecutive train sentences
  std::optional<StyleTargets> targets_;
  SubphaseHook subphase_hook_;
  std::vector<TrainLogRecord> history_;
};

// Rewrites a JSONL training log keeping earlier stages and the first `step`
// records of `stage`; used when resuming.
void truncate_log(const std::filesystem::path& log, int stage, std::size_t step);

}  // namespace multistyle
