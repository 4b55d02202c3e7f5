// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-scale style extractor. Three reference encoders summarize the window
// mel (global), the current sentence mel, and each subword's mel slice. Each
// finer level keeps only what the coarser one does not explain:
//   R_g = E_g,  R_s = E_s - E_g,  R_w[i] = E_w[i] - E_s
// and each residual attends over its level's style tokens.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "multistyle/autograd.h"
#include "multistyle/corpus.h"
#include "multistyle/neural.h"

namespace multistyle {

enum class Level { kGlobal = 0, kSentence = 1, kSubword = 2 };
inline constexpr std::array<Level, 3> kLevels{Level::kGlobal, Level::kSentence, Level::kSubword};
const char* level_name(Level level);
Level parse_level(const std::string& name);

struct ReferenceEmbeddings {
  ag::Var E_g;  // [1, d_ref]
  ag::Var E_s;  // [1, d_ref]
  ag::Var E_w;  // [n_subwords, d_ref]
};

struct ResidualEmbeddings {
  ag::Var R_g, R_s, R_w;
};

struct StyleEmbeddings {
  ag::Var S_g;  // [1, d_style]
  ag::Var S_s;  // [1, d_style]
  ag::Var S_w;  // [n_subwords, d_style]
  // Per level, per head [n_queries, K].
  std::array<std::vector<ag::Var>, 3> token_weights;
};

ResidualEmbeddings compute_residuals(const ReferenceEmbeddings& e);

// Conv stack followed by a GRU; the final recurrent state is the embedding.
class ReferenceEncoder {
 public:
  ReferenceEncoder() = default;
  ReferenceEncoder(ParamStore& store, const std::string& name, std::size_t bins,
                   std::vector<std::size_t> channels, std::size_t d_ref, Rng& rng);
  ag::Var operator()(const ag::Var& mel, bool update_stats = false) const;  // -> [1, d_ref]

 private:
  ConvStack conv_;
  Gru rnn_;
};

class StyleTokenLayer {
 public:
  StyleTokenLayer() = default;
  StyleTokenLayer(ParamStore& store, const std::string& name, std::size_t d_ref,
                  std::size_t d_style, std::size_t tokens, std::size_t heads, Rng& rng);
  struct Output {
    ag::Var style;                 // [n, d_style]
    std::vector<ag::Var> weights;  // per head [n, K]
  };
  Output operator()(const ag::Var& residual) const;
  std::size_t token_count() const { return tokens_->rows(); }

 private:
  Param* tokens_ = nullptr;
  MultiHeadAttention attention_;
};

struct ExtractorConfig {
  std::size_t mel_bins = 80;
  std::vector<std::size_t> conv_channels{32, 32, 64, 64, 128, 128};
  std::size_t d_ref = 128;
  std::size_t d_style = 128;
  std::size_t tokens = 10;
  std::size_t heads = 4;
};

class StyleExtractor {
 public:
  StyleExtractor() = default;
  StyleExtractor(ParamStore& store, const std::string& name, const ExtractorConfig& config, Rng& rng);

  // `train` lets running statistics of trainable levels move.
  ReferenceEmbeddings extract_reference(const ContextWindow& window, bool train = false) const;
  StyleEmbeddings style_tokens(const ResidualEmbeddings& r) const;
  StyleEmbeddings extract(const ContextWindow& window, bool train = false) const;

  const ReferenceEncoder& encoder(Level l) const { return encoders_[static_cast<int>(l)]; }
  const StyleTokenLayer& token_layer(Level l) const { return tokens_[static_cast<int>(l)]; }
  // Parameter name prefix of one level's encoder and token layer.
  std::string level_prefix(Level l) const { return name_ + "." + level_name(l); }

 private:
  bool level_trainable(Level l) const;

  std::string name_;
  const ParamStore* store_ = nullptr;
  ExtractorConfig config_;
  std::array<ReferenceEncoder, 3> encoders_;
  std::array<StyleTokenLayer, 3> tokens_;
};

// Mel rows of the window sentences, concatenated in time.
ag::Var window_mel(const ContextWindow& window);
ag::Var mel_var(const Matrix& mel);

}  // namespace multistyle
