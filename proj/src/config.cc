// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/config.h"

#include <cstdlib>
#include <fstream>
#include <set>

namespace multistyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one section, rejecting unknown keys and ill-typed values.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  void count(const char* key, std::size_t& field) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
    if (v.get<long long>() < 0) throw ConfigError(path(key) + ": must be non-negative");
    field = v.get<std::size_t>();
  }
  void integer(const char* key, std::uint64_t& field) {
    std::size_t v = field;
    count(key, v);
    field = v;
  }
  void number(const char* key, double& field) {
    if (!take(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(path(key) + ": expected a number");
    field = j_.at(key).get<double>();
  }
  void flag(const char* key, bool& field) {
    if (!take(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    field = j_.at(key).get<bool>();
  }
  void text(const char* key, std::string& field) {
    if (!take(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(path(key) + ": expected a string");
    field = j_.at(key).get<std::string>();
  }
  void counts(const char* key, std::vector<std::size_t>& field) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path(key) + ": expected an array");
    field.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() <= 0)
        throw ConfigError(path(key) + ": expected positive integers");
      field.push_back(e.get<std::size_t>());
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const json& sub(const char* key) {
    take(key);
    return j_.at(key);
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name_ + "." + it.key() + ": unknown field");
  }
  std::string path(const char* key) const { return name_ + "." + key; }

 private:
  bool take(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename F>
void guarded(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  Section s(j, "synth");
  s.count("documents", c.documents);
  s.count("sentences_per_document", c.sentences_per_document);
  s.count("min_subwords", c.min_subwords);
  s.count("max_subwords", c.max_subwords);
  s.count("min_phonemes_per_subword", c.min_phonemes_per_subword);
  s.count("max_phonemes_per_subword", c.max_phonemes_per_subword);
  s.count("mel_bins", c.mel_bins);
  s.count("phoneme_inventory", c.phoneme_inventory);
  s.count("common_vocab", c.common_vocab);
  s.count("topic_vocab", c.topic_vocab);
  s.number("topic_probability", c.topic_probability);
  s.number("chapter_offset_hz", c.chapter_offset_hz);
  s.number("neighbor_weight", c.neighbor_weight);
  s.number("stress_probability", c.stress_probability);
  s.number("stress_excursion_hz", c.stress_excursion_hz);
  s.number("base_pitch_hz", c.base_pitch_hz);
  s.count("test_every", c.test_every);
  s.finish();
  guarded([&] { c.validate(); });
  return c;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
  RunConfig rc;
  Section top(j, "config");
  if (top.has("version")) {
    const json& v = top.sub("version");
    if (v != 1) throw ConfigError("config.version: unsupported version " + v.dump());
  }
  top.integer("seed", rc.seed);
  rc.train.seed = rc.seed;
  if (top.has("corpus")) {
    Section c(top.sub("corpus"), "corpus");
    std::string manifest, factors;
    c.text("manifest", manifest);
    c.text("factors", factors);
    c.finish();
    rc.manifest = resolve(base, manifest);
    rc.factors = resolve(base, factors);
    if (rc.factors.empty() && !rc.manifest.empty()) rc.factors = rc.manifest.parent_path() / kFactorsName;
  }
  if (top.has("synth")) rc.synth = synth_config_from_json(top.sub("synth"));
  if (top.has("model")) {
    Section m(top.sub("model"), "model");
    auto& c = rc.model;
    m.count("mel_bins", c.mel_bins);
    m.count("d_model", c.d_model);
    m.count("d_ctx", c.d_ctx);
    m.counts("conv_channels", c.conv_channels);
    m.count("style_tokens", c.style_tokens);
    m.count("token_heads", c.token_heads);
    m.count("acoustic_heads", c.acoustic_heads);
    m.count("encoder_layers", c.encoder_layers);
    m.count("decoder_layers", c.decoder_layers);
    m.count("d_ffn", c.d_ffn);
    m.count("variance_channels", c.variance_channels);
    m.count("variance_bins", c.variance_bins);
    m.number("pitch_min", c.pitch_min);
    m.number("pitch_max", c.pitch_max);
    m.count("context_radius", c.context_radius);
    m.count("reference_radius", c.reference_radius);
    m.integer("seed", c.seed);
    std::string mode = to_string(c.mode);
    m.text("mode", mode);
    guarded([&] { c.mode = parse_mode(mode); });
    if (m.has("provider")) {
      Section p(m.sub("provider"), "model.provider");
      p.text("kind", c.provider.kind);
      p.integer("seed", c.provider.seed);
      p.count("d_sem", c.provider.d_sem);
      p.flag("position_mixing", c.provider.position_mixing);
      p.flag("separator", c.provider.separator);
      std::string store;
      p.text("store", store);
      c.provider.store = resolve(base, store).string();
      p.flag("trainable", c.provider.trainable);
      p.finish();
    }
    m.finish();
    guarded([&] { c.validate(); });
  }
  if (top.has("train")) {
    Section t(top.sub("train"), "train");
    auto& c = rc.train;
    t.count("batch_size", c.batch_size);
    t.count("stage1_per_level", c.stage1_per_level);
    t.count("stage2_steps", c.stage2_steps);
    t.count("stage3_steps", c.stage3_steps);
    t.number("base_lr", c.base_lr);
    t.count("warmup_steps", c.warmup_steps);
    t.number("beta1", c.adam.beta1);
    t.number("beta2", c.adam.beta2);
    t.number("epsilon", c.adam.epsilon);
    t.number("stage3_lr_scale", c.stage3_lr_scale);
    t.number("style_loss_weight", c.style_loss_weight);
    t.integer("seed", c.seed);
    std::string mel_loss = c.mel_loss_mae ? "mae" : "mse";
    t.text("mel_loss", mel_loss);
    if (mel_loss != "mae" && mel_loss != "mse") throw ConfigError("train.mel_loss: expected mae or mse");
    c.mel_loss_mae = mel_loss == "mae";
    t.flag("include_untrained_levels", c.include_untrained_levels);
    t.count("paragraph_length", c.paragraph_length);
    t.count("checkpoint_every", c.checkpoint_every);
    t.number("style_target_clamp", c.style_target_clamp);
    t.finish();
    guarded([&] { c.validate(); });
  }
  if (top.has("output")) {
    Section o(top.sub("output"), "output");
    std::string dir;
    o.text("dir", dir);
    o.finish();
    if (!dir.empty()) rc.output_dir = fs::path(dir).is_absolute() ? fs::path(dir) : base / dir;
  }
  top.finish();
  return rc;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json synth = {{"documents", this->synth.documents},
                {"sentences_per_document", this->synth.sentences_per_document},
                {"min_subwords", this->synth.min_subwords},
                {"max_subwords", this->synth.max_subwords},
                {"min_phonemes_per_subword", this->synth.min_phonemes_per_subword},
                {"max_phonemes_per_subword", this->synth.max_phonemes_per_subword},
                {"mel_bins", this->synth.mel_bins},
                {"phoneme_inventory", this->synth.phoneme_inventory},
                {"common_vocab", this->synth.common_vocab},
                {"topic_vocab", this->synth.topic_vocab},
                {"topic_probability", this->synth.topic_probability},
                {"chapter_offset_hz", this->synth.chapter_offset_hz},
                {"neighbor_weight", this->synth.neighbor_weight},
                {"stress_probability", this->synth.stress_probability},
                {"stress_excursion_hz", this->synth.stress_excursion_hz},
                {"base_pitch_hz", this->synth.base_pitch_hz},
                {"test_every", this->synth.test_every}};
  return {{"version", 1},
          {"seed", seed},
          {"corpus", {{"manifest", manifest.string()}, {"factors", factors.string()}}},
          {"synth", synth},
          {"model", multistyle::to_json(model)},
          {"train", multistyle::to_json(train)},
          {"output", {{"dir", output_dir.string()}}}};
}

fs::path resolve_output(const fs::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("MULTISTYLE_OUTPUT_ROOT"); root && *root) return fs::path(root) / dir;
  return dir;
}

}  // namespace multistyle
