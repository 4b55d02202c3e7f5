// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical style predictor. Coarser predictions condition finer ones:
//   S_g = f_g(C_g)
//   S_s = f_s([C_s[cur], S_g])
//   S_w[i] = f_w([C_w[cur][i], S_g + S_s])
// The paragraph variant replaces f_s and f_w with GRU cells whose state and
// previous output carry from one sentence (and subword) to the next.
// Each level's output is tanh(center + scale * z), where z is the learned
// projection and center/scale are per-dimension statistics of the
// pre-activation targets, so z is learned on a unit scale.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multistyle/context_encoder.h"
#include "multistyle/neural.h"
#include "multistyle/style_extractor.h"

namespace multistyle {

struct PredictedStyles {
  ag::Var S_g;  // [1, d_style]
  ag::Var S_s;  // [1, d_style]
  ag::Var S_w;  // [n_subwords, d_style]
};

class StylePredictor {
 public:
  StylePredictor() = default;
  StylePredictor(ParamStore& store, const std::string& name, std::size_t d_ctx,
                 std::size_t d_style, bool autoregressive, Rng& rng);

  PredictedStyles predict(const ContextEmbeddings& ctx) const;

  // One PredictedStyles per sentence, in order. With `previous` (teacher
  // forcing), sentence t conditions on previous[t-1] instead of its own
  // prediction for t-1.
  std::vector<PredictedStyles> predict_paragraph(
      const std::vector<ContextEmbeddings>& ctx_seq,
      const std::vector<PredictedStyles>* previous = nullptr) const;

  struct TargetStatistics {
    std::vector<double> center, scale;  // per dimension, pre-activation
  };
  // Level order: global, sentence, subword.
  void set_target_statistics(const std::array<TargetStatistics, 3>& stats);

  bool autoregressive() const { return autoregressive_; }
  std::size_t d_style() const { return d_style_; }

 private:
  ag::Var output(const ag::Var& z, std::size_t level) const;

  Linear f_g_, f_s_, f_w_;
  Gru sentence_cell_, subword_cell_;
  Linear sentence_out_, subword_out_;
  std::array<Buffer*, 3> center_{}, scale_{};
  bool autoregressive_ = false;
  std::size_t d_style_ = 0;
};

}  // namespace multistyle
