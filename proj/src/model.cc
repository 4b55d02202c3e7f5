// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/model.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "multistyle/checkpoint.h"

namespace multistyle {

using nlohmann::json;

std::string to_string(PredictorMode mode) {
  return mode == PredictorMode::kAutoregressive ? "ar" : "hierarchical";
}

PredictorMode parse_mode(const std::string& s) {
  if (s == "hierarchical") return PredictorMode::kHierarchical;
  if (s == "ar") return PredictorMode::kAutoregressive;
  throw std::invalid_argument("mode must be 'hierarchical' or 'ar', got '" + s + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v == 0) throw std::invalid_argument(std::string("model.") + field + " must be positive");
  };
  positive(mel_bins, "mel_bins");
  positive(d_model, "d_model");
  positive(d_ctx, "d_ctx");
  positive(style_tokens, "style_tokens");
  positive(d_ffn, "d_ffn");
  positive(variance_channels, "variance_channels");
  positive(variance_bins, "variance_bins");
  positive(provider.d_sem, "provider.d_sem");
  if (conv_channels.empty()) throw std::invalid_argument("model.conv_channels must not be empty");
  for (auto c : conv_channels) positive(c, "conv_channels");
  if (d_ctx % 2) throw std::invalid_argument("model.d_ctx must be even");
  if (token_heads == 0 || d_model % token_heads)
    throw std::invalid_argument("model.token_heads must divide d_model");
  if (acoustic_heads == 0 || d_model % acoustic_heads)
    throw std::invalid_argument("model.acoustic_heads must divide d_model");
  if (!(pitch_max > pitch_min)) throw std::invalid_argument("model.pitch_max must exceed pitch_min");
  if (provider.kind != "hash" && provider.kind != "precomputed" && provider.kind != "trainable")
    throw std::invalid_argument("model.provider.kind must be hash, precomputed or trainable");
}

json to_json(const ModelConfig& c) {
  return {{"mel_bins", c.mel_bins},
          {"d_model", c.d_model},
          {"d_ctx", c.d_ctx},
          {"conv_channels", c.conv_channels},
          {"style_tokens", c.style_tokens},
          {"token_heads", c.token_heads},
          {"acoustic_heads", c.acoustic_heads},
          {"encoder_layers", c.encoder_layers},
          {"decoder_layers", c.decoder_layers},
          {"d_ffn", c.d_ffn},
          {"variance_channels", c.variance_channels},
          {"variance_bins", c.variance_bins},
          {"pitch_min", c.pitch_min},
          {"pitch_max", c.pitch_max},
          {"context_radius", c.context_radius},
          {"reference_radius", c.reference_radius},
          {"mode", to_string(c.mode)},
          {"seed", c.seed},
          {"provider",
           {{"kind", c.provider.kind},
            {"seed", c.provider.seed},
            {"d_sem", c.provider.d_sem},
            {"position_mixing", c.provider.position_mixing},
            {"separator", c.provider.separator},
            {"store", c.provider.store},
            {"trainable", c.provider.trainable}}}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("mel_bins", c.mel_bins);
  get("d_model", c.d_model);
  get("d_ctx", c.d_ctx);
  get("conv_channels", c.conv_channels);
  get("style_tokens", c.style_tokens);
  get("token_heads", c.token_heads);
  get("acoustic_heads", c.acoustic_heads);
  get("encoder_layers", c.encoder_layers);
  get("decoder_layers", c.decoder_layers);
  get("d_ffn", c.d_ffn);
  get("variance_channels", c.variance_channels);
  get("variance_bins", c.variance_bins);
  get("pitch_min", c.pitch_min);
  get("pitch_max", c.pitch_max);
  get("context_radius", c.context_radius);
  get("reference_radius", c.reference_radius);
  get("seed", c.seed);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode"));
  if (j.contains("provider")) {
    const json& p = j.at("provider");
    auto pget = [&](const char* key, auto& field) {
      if (p.contains(key)) field = p.at(key).get<std::decay_t<decltype(field)>>();
    };
    pget("kind", c.provider.kind);
    pget("seed", c.provider.seed);
    pget("d_sem", c.provider.d_sem);
    pget("position_mixing", c.provider.position_mixing);
    pget("separator", c.provider.separator);
    pget("store", c.provider.store);
    pget("trainable", c.provider.trainable);
  }
  return c;
}

CorpusStats CorpusStats::from_corpus(const Corpus& corpus) {
  CorpusStats s;
  std::set<std::string> phonemes;
  for (const auto* u : corpus.utterances()) phonemes.insert(u->phonemes.begin(), u->phonemes.end());
  s.phonemes.assign(phonemes.begin(), phonemes.end());
  s.vocabulary = corpus_vocabulary(corpus);
  auto source = corpus.utterances("train");
  if (source.empty()) source = corpus.utterances();
  std::vector<double> pitch, energy;
  for (const auto* u : source) {
    auto p = phone_level_average(u->pitch_frame, u->durations, true);
    auto e = phone_level_average(u->energy_frame, u->durations);
    pitch.insert(pitch.end(), p.begin(), p.end());
    energy.insert(energy.end(), e.begin(), e.end());
  }
  auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(std::max<std::size_t>(1, v.size()));
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(std::max<std::size_t>(1, v.size())));
    if (sd < 1e-6) sd = 1.0;
  };
  moments(pitch, s.pitch_mean, s.pitch_std);
  moments(energy, s.energy_mean, s.energy_std);
  if (!energy.empty()) {
    s.energy_min = *std::min_element(energy.begin(), energy.end());
    s.energy_max = *std::max_element(energy.begin(), energy.end());
    if (!(s.energy_max > s.energy_min)) s.energy_max = s.energy_min + 1.0;
  }
  return s;
}

json to_json(const CorpusStats& s) {
  return {{"phonemes", s.phonemes},       {"vocabulary", s.vocabulary},
          {"pitch_mean", s.pitch_mean},   {"pitch_std", s.pitch_std},
          {"energy_mean", s.energy_mean}, {"energy_std", s.energy_std},
          {"energy_min", s.energy_min},   {"energy_max", s.energy_max}};
}

CorpusStats corpus_stats_from_json(const json& j) {
  CorpusStats s;
  s.phonemes = j.at("phonemes").get<std::vector<std::string>>();
  s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  s.pitch_mean = j.at("pitch_mean");
  s.pitch_std = j.at("pitch_std");
  s.energy_mean = j.at("energy_mean");
  s.energy_std = j.at("energy_std");
  s.energy_min = j.at("energy_min");
  s.energy_max = j.at("energy_max");
  return s;
}

MultiStyleModel::MultiStyleModel(ModelConfig config, CorpusStats stats)
    : config_(std::move(config)), stats_(std::move(stats)) {
  config_.validate();
  Rng rng(config_.seed);
  const auto& pc = config_.provider;
  if (pc.kind == "hash") {
    provider_ = std::make_unique<HashProvider>(pc.seed, pc.d_sem, pc.position_mixing, pc.separator);
  } else if (pc.kind == "precomputed") {
    provider_ = std::make_unique<PrecomputedProvider>(pc.store);
    config_.provider.d_sem = provider_->dim();
  } else {
    Rng prng(pc.seed);
    provider_ = std::make_unique<TrainableProvider>(store_, kSemanticPrefix, stats_.vocabulary, pc.d_sem, prng);
  }

  ExtractorConfig ec;
  ec.mel_bins = config_.mel_bins;
  ec.conv_channels = config_.conv_channels;
  ec.d_ref = ec.d_style = config_.d_model;
  ec.tokens = config_.style_tokens;
  ec.heads = config_.token_heads;
  extractor_ = StyleExtractor(store_, kExtractorPrefix, ec, rng);
  context_ = ContextEncoder(store_, kContextPrefix, provider_->dim(), config_.d_ctx, rng);
  predictor_ = StylePredictor(store_, kPredictorPrefix, config_.d_ctx, config_.d_model,
                              config_.mode == PredictorMode::kAutoregressive, rng);

  AcousticConfig ac;
  ac.phoneme_count = stats_.phonemes.size();
  ac.mel_bins = config_.mel_bins;
  ac.d_model = config_.d_model;
  ac.heads = config_.acoustic_heads;
  ac.encoder_layers = config_.encoder_layers;
  ac.decoder_layers = config_.decoder_layers;
  ac.d_ffn = config_.d_ffn;
  ac.variance_channels = config_.variance_channels;
  ac.variance_bins = config_.variance_bins;
  ac.pitch_min = config_.pitch_min;
  ac.pitch_max = config_.pitch_max;
  ac.energy_min = stats_.energy_min;
  ac.energy_max = stats_.energy_max;
  ac.pitch_mean = stats_.pitch_mean;
  ac.pitch_std = stats_.pitch_std;
  ac.energy_mean = stats_.energy_mean;
  ac.energy_std = stats_.energy_std;
  acoustic_ = AcousticModel(store_, kAcousticPrefix, ac, rng);

  for (std::size_t i = 0; i < stats_.phonemes.size(); ++i) phoneme_index_[stats_.phonemes[i]] = i;
  if (pc.kind == "trainable") store_.set_trainable(kSemanticPrefix, pc.trainable);
}

std::unique_ptr<MultiStyleModel> MultiStyleModel::create(const ModelConfig& config, const Corpus& corpus) {
  ModelConfig c = config;
  if (c.mel_bins != corpus.features().mel_bins) {
    c.mel_bins = corpus.features().mel_bins;
  }
  return std::make_unique<MultiStyleModel>(c, CorpusStats::from_corpus(corpus));
}

void MultiStyleModel::save(const std::filesystem::path& dir, const json& extra,
                           const AdamState* adam) const {
  json meta = extra;
  meta["model"] = to_json(config_);
  meta["stats"] = to_json(stats_);
  save_checkpoint(dir, store_, meta, adam);
}

std::unique_ptr<MultiStyleModel> MultiStyleModel::load(const std::filesystem::path& dir, json* meta,
                                                       AdamState* adam) {
  const json m = read_checkpoint_meta(dir);
  if (!m.contains("model") || !m.contains("stats"))
    throw CheckpointError("checkpoint " + dir.string() + " carries no model description");
  auto model = std::make_unique<MultiStyleModel>(model_config_from_json(m.at("model")),
                                                 corpus_stats_from_json(m.at("stats")));
  load_checkpoint(dir, model->store_, adam);
  if (meta) *meta = m;
  return model;
}

std::vector<std::size_t> MultiStyleModel::phoneme_ids(const AlignedUtterance& u) const {
  std::vector<std::size_t> ids;
  for (const auto& p : u.phonemes) {
    auto it = phoneme_index_.find(p);
    if (it == phoneme_index_.end())
      throw std::invalid_argument("phoneme '" + p + "' in " + u.key() + " is not in the model inventory");
    ids.push_back(it->second);
  }
  return ids;
}

VarianceTargets MultiStyleModel::variance_targets(const AlignedUtterance& u) const {
  return {phone_level_average(u.pitch_frame, u.durations, true),
          phone_level_average(u.energy_frame, u.durations), u.durations};
}

ContextWindow MultiStyleModel::window(const Corpus& corpus, const AlignedUtterance& u) const {
  return corpus.window(u.document_id, u.sentence_index, config_.context_radius);
}

ContextWindow MultiStyleModel::reference_window(const Corpus& corpus, const AlignedUtterance& u) const {
  return corpus.window(u.document_id, u.sentence_index, config_.reference_radius);
}

StyleEmbeddings MultiStyleModel::extract(const ContextWindow& window, bool train) const {
  return extractor_.extract(window, train);
}

ContextEmbeddings MultiStyleModel::context(const ContextWindow& window) const {
  return context_.encode(embed_context(window, *provider_), window);
}

PredictedStyles MultiStyleModel::predict(const ContextWindow& window) const {
  return predictor_.predict(context(window));
}

StyleEmbeddings MultiStyleModel::extract(const Corpus& corpus, const AlignedUtterance& u, bool train) const {
  return extract(reference_window(corpus, u), train);
}

PredictedStyles MultiStyleModel::predict(const Corpus& corpus, const AlignedUtterance& u) const {
  return predict(window(corpus, u));
}

std::vector<PredictedStyles> MultiStyleModel::predict_paragraph(
    const Corpus& corpus, const std::string& document,
    const std::vector<PredictedStyles>* previous) const {
  std::vector<ContextEmbeddings> ctx;
  for (const auto& u : corpus.document(document)) ctx.push_back(context(window(corpus, u)));
  return predictor_.predict_paragraph(ctx, previous);
}

AcousticOutput MultiStyleModel::synthesize(const AlignedUtterance& u, const ag::Var& S_g,
                                           const ag::Var& S_s, const ag::Var& S_w,
                                           bool teacher_forced) const {
  const auto ids = phoneme_ids(u);
  const auto rows = replicate_styles(S_g, S_s, S_w, u.subword_of_phoneme());
  if (teacher_forced) {
    const auto targets = variance_targets(u);
    return acoustic_.synthesize(ids, rows, &targets);
  }
  return acoustic_.synthesize(ids, rows, nullptr);
}

}  // namespace multistyle
