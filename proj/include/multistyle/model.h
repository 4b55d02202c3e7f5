// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full system: semantic provider, context encoder and style predictor,
// style extractor, and acoustic model over one parameter store.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "multistyle/acoustic_model.h"
#include "multistyle/context_encoder.h"
#include "multistyle/corpus.h"
#include "multistyle/neural.h"
#include "multistyle/optimizer.h"
#include "multistyle/semantic.h"
#include "multistyle/style_extractor.h"
#include "multistyle/style_predictor.h"

namespace multistyle {

enum class PredictorMode { kHierarchical, kAutoregressive };
std::string to_string(PredictorMode mode);
PredictorMode parse_mode(const std::string& s);

struct ProviderConfig {
  std::string kind = "hash";  // hash | precomputed | trainable
  std::uint64_t seed = 17;
  std::size_t d_sem = 768;
  bool position_mixing = true;
  bool separator = false;
  std::string store;  // precomputed only
  bool trainable = false;  // unfreeze the trainable table while the predictor trains
};

struct ModelConfig {
  std::size_t mel_bins = 80;
  std::size_t d_model = 128;  // also reference and style width
  std::size_t d_ctx = 128;
  std::vector<std::size_t> conv_channels{32, 32, 64, 64, 128, 128};
  std::size_t style_tokens = 10;
  std::size_t token_heads = 4;
  std::size_t acoustic_heads = 2;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t d_ffn = 256;
  std::size_t variance_channels = 128;
  std::size_t variance_bins = 64;
  double pitch_min = 0.0;
  double pitch_max = 600.0;
  std::size_t context_radius = 2;    // predictor text context, L
  std::size_t reference_radius = 2;  // global-level extractor mel context
  PredictorMode mode = PredictorMode::kHierarchical;
  ProviderConfig provider;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Values a model derives from its training corpus.
struct CorpusStats {
  std::vector<std::string> phonemes;
  std::vector<std::string> vocabulary;
  double pitch_mean = 0, pitch_std = 1, energy_mean = 0, energy_std = 1;
  double energy_min = 0, energy_max = 1;

  static CorpusStats from_corpus(const Corpus& corpus);
};

nlohmann::json to_json(const CorpusStats& s);
CorpusStats corpus_stats_from_json(const nlohmann::json& j);

inline constexpr const char* kExtractorPrefix = "extractor";
inline constexpr const char* kContextPrefix = "predictor.context";
inline constexpr const char* kPredictorPrefix = "predictor.styles";
inline constexpr const char* kSemanticPrefix = "semantic";
inline constexpr const char* kAcousticPrefix = "acoustic";

class MultiStyleModel {
 public:
  MultiStyleModel(ModelConfig config, CorpusStats stats);
  MultiStyleModel(const MultiStyleModel&) = delete;
  MultiStyleModel& operator=(const MultiStyleModel&) = delete;

  static std::unique_ptr<MultiStyleModel> create(const ModelConfig& config, const Corpus& corpus);
  static std::unique_ptr<MultiStyleModel> load(const std::filesystem::path& dir,
                                               nlohmann::json* meta = nullptr,
                                               AdamState* adam = nullptr);
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object(),
            const AdamState* adam = nullptr) const;

  const ModelConfig& config() const { return config_; }
  const CorpusStats& stats() const { return stats_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }
  const StyleExtractor& extractor() const { return extractor_; }
  const ContextEncoder& context_encoder() const { return context_; }
  const StylePredictor& predictor() const { return predictor_; }
  StylePredictor& predictor() { return predictor_; }
  const AcousticModel& acoustic() const { return acoustic_; }
  const SemanticProvider& provider() const { return *provider_; }

  std::vector<std::size_t> phoneme_ids(const AlignedUtterance& u) const;
  VarianceTargets variance_targets(const AlignedUtterance& u) const;
  // Text context seen by the predictor and mel context seen by the
  // global-level extractor.
  ContextWindow window(const Corpus& corpus, const AlignedUtterance& u) const;
  ContextWindow reference_window(const Corpus& corpus, const AlignedUtterance& u) const;

  StyleEmbeddings extract(const ContextWindow& window, bool train = false) const;
  StyleEmbeddings extract(const Corpus& corpus, const AlignedUtterance& u, bool train = false) const;
  ContextEmbeddings context(const ContextWindow& window) const;
  PredictedStyles predict(const ContextWindow& window) const;
  PredictedStyles predict(const Corpus& corpus, const AlignedUtterance& u) const;
  std::vector<PredictedStyles> predict_paragraph(const Corpus& corpus, const std::string& document,
                                                 const std::vector<PredictedStyles>* previous = nullptr) const;

  AcousticOutput synthesize(const AlignedUtterance& u, const ag::Var& S_g, const ag::Var& S_s,
                            const ag::Var& S_w, bool teacher_forced) const;

 private:
  ModelConfig config_;
  CorpusStats stats_;
  ParamStore store_;
  std::unique_ptr<SemanticProvider> provider_;
  StyleExtractor extractor_;
  ContextEncoder context_;
  StylePredictor predictor_;
  AcousticModel acoustic_;
  std::map<std::string, std::size_t> phoneme_index_;
};

}  // namespace multistyle
