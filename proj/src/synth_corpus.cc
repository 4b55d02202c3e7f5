// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/synth_corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace multistyle {
namespace {

using nlohmann::json;

// Library-independent draws so the corpus is identical across toolchains.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 rng_;
};

struct PhonemeDef {
  std::string symbol;
  bool voiced;
  double base_frames;
  double energy;
  double formant[2];
  double width[2];
};

struct TokenDef {
  std::string text;
  std::vector<std::size_t> phonemes;
  double tone_level;
  double tone_slope;
  bool stressed;
};

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw std::invalid_argument(std::string("synth.") + field + ": " + why);
}

}  // namespace

void SynthConfig::validate() const {
  require(documents >= 1, "documents", "must be at least 1");
  require(sentences_per_document >= 1, "sentences_per_document", "must be at least 1");
  require(min_subwords >= 1, "min_subwords", "must be at least 1");
  require(max_subwords >= min_subwords, "max_subwords", "must be >= min_subwords");
  require(min_phonemes_per_subword >= 1, "min_phonemes_per_subword", "must be at least 1");
  require(max_phonemes_per_subword >= min_phonemes_per_subword, "max_phonemes_per_subword",
          "must be >= min_phonemes_per_subword");
  require(mel_bins >= 4, "mel_bins", "must be at least 4");
  require(phoneme_inventory >= 4, "phoneme_inventory", "must be at least 4");
  require(common_vocab >= 1, "common_vocab", "must be at least 1");
  require(topic_vocab >= 1, "topic_vocab", "must be at least 1");
  require(topic_probability >= 0 && topic_probability <= 1, "topic_probability", "must lie in [0, 1]");
  require(stress_probability >= 0 && stress_probability <= 1, "stress_probability",
          "must lie in [0, 1]");
  require(chapter_offset_hz >= 0 && std::isfinite(chapter_offset_hz), "chapter_offset_hz",
          "must be finite and non-negative");
  require(std::isfinite(neighbor_weight), "neighbor_weight", "must be finite");
  require(base_pitch_hz > chapter_offset_hz, "base_pitch_hz", "must exceed chapter_offset_hz");
  require(test_every >= 2, "test_every", "must be at least 2");
}

const DocumentFactors& PlantedFactors::document(const std::string& id) const {
  for (const auto& d : documents)
    if (d.document_id == id) return d;
  throw CorpusError("no planted factors for document " + id);
}

const SentenceFactors& PlantedFactors::sentence(const std::string& id, std::size_t index) const {
  for (const auto& s : sentences)
    if (s.document_id == id && s.sentence_index == index) return s;
  throw CorpusError("no planted factors for " + id + ":" + std::to_string(index));
}

void PlantedFactors::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& d : documents)
    out << json{{"kind", "document"},
                {"document_id", d.document_id},
                {"chapter_sign", d.chapter_sign},
                {"chapter_offset_hz", d.chapter_offset_hz}}
               .dump()
        << "\n";
  for (const auto& s : sentences)
    out << json{{"kind", "sentence"},
                {"document_id", s.document_id},
                {"sentence_index", s.sentence_index},
                {"mood", s.mood},
                {"factor", s.factor},
                {"stress", s.stress}}
               .dump()
        << "\n";
}

PlantedFactors PlantedFactors::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("missing factor side file " + path.string());
  PlantedFactors f;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("kind") == "document") {
      f.documents.push_back({j.at("document_id"), j.at("chapter_sign"), j.at("chapter_offset_hz")});
    } else {
      SentenceFactors s;
      s.document_id = j.at("document_id");
      s.sentence_index = j.at("sentence_index");
      s.mood = j.at("mood");
      s.factor = j.at("factor");
      s.stress = j.at("stress").get<std::vector<int>>();
      f.sentences.push_back(std::move(s));
    }
  }
  return f;
}

SynthCorpus synthesize_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Draw draw(seed);

  std::vector<PhonemeDef> inventory;
  for (std::size_t p = 0; p < cfg.phoneme_inventory; ++p) {
    PhonemeDef d;
    d.symbol = "p" + std::to_string(p);
    d.voiced = p % 4 != 3;
    d.base_frames = draw.uniform(3.0, 6.0);
    d.energy = draw.uniform(0.6, 1.4);
    for (int k = 0; k < 2; ++k) {
      d.formant[k] = draw.uniform(0.45 * k + 0.05, 0.45 * k + 0.5);
      d.width[k] = draw.uniform(0.05, 0.12);
    }
    inventory.push_back(d);
  }

  auto make_token = [&](const std::string& text) {
    TokenDef t;
    t.text = text;
    const std::size_t n = draw.between(cfg.min_phonemes_per_subword, cfg.max_phonemes_per_subword);
    for (std::size_t i = 0; i < n; ++i) t.phonemes.push_back(draw.index(inventory.size()));
    t.tone_level = draw.uniform(-40.0, 40.0);
    t.tone_slope = draw.uniform(-30.0, 30.0);
    t.stressed = draw.chance(cfg.stress_probability);
    return t;
  };
  std::vector<TokenDef> moods{make_token("m-"), make_token("m0"), make_token("m+")};
  for (auto& m : moods) m.stressed = false;
  std::vector<TokenDef> common, topic[2];
  for (std::size_t i = 0; i < cfg.common_vocab; ++i) common.push_back(make_token("w" + std::to_string(i)));
  for (std::size_t i = 0; i < cfg.topic_vocab; ++i) topic[0].push_back(make_token("a" + std::to_string(i)));
  for (std::size_t i = 0; i < cfg.topic_vocab; ++i) topic[1].push_back(make_token("b" + std::to_string(i)));

  // Balanced chapter signs in a seeded order.
  std::vector<int> signs(cfg.documents);
  for (std::size_t d = 0; d < cfg.documents; ++d) signs[d] = d % 2 == 0 ? 1 : -1;
  for (std::size_t d = cfg.documents; d-- > 1;) std::swap(signs[d], signs[draw.index(d + 1)]);

  SynthCorpus out;
  out.features.mel_bins = cfg.mel_bins;
  const std::size_t B = cfg.mel_bins;

  for (std::size_t d = 0; d < cfg.documents; ++d) {
    char id[32];
    std::snprintf(id, sizeof(id), "doc%02zu", d);
    const int sign = signs[d];
    const double offset = sign * cfg.chapter_offset_hz;
    out.factors.documents.push_back({id, sign, offset});
    const auto& topic_set = topic[sign > 0 ? 0 : 1];

    const std::size_t n_sent = cfg.sentences_per_document;
    std::vector<int> mood(n_sent);
    for (auto& m : mood) m = static_cast<int>(draw.index(3)) - 1;

    for (std::size_t t = 0; t < n_sent; ++t) {
      const double prev = t > 0 ? mood[t - 1] : 0.0;
      const double next = t + 1 < n_sent ? mood[t + 1] : 0.0;
      const double f = mood[t] + cfg.neighbor_weight * (prev + next);

      std::vector<const TokenDef*> tokens{&moods[static_cast<std::size_t>(mood[t] + 1)]};
      const std::size_t n_words = draw.between(cfg.min_subwords, cfg.max_subwords);
      for (std::size_t w = 0; w < n_words; ++w) {
        if (draw.chance(cfg.topic_probability))
          tokens.push_back(&topic_set[draw.index(topic_set.size())]);
        else
          tokens.push_back(&common[draw.index(common.size())]);
      }

      AlignedUtterance u;
      u.document_id = id;
      u.sentence_index = t;
      u.split = t % cfg.test_every == cfg.test_every - 1 ? "test" : "train";
      SentenceFactors sf{id, t, mood[t], f, {}};

      // Frame-level pitch before centering, and per-frame phoneme index.
      std::vector<double> local;
      std::vector<std::size_t> frame_phone;
      std::vector<double> frame_pos_in_phone;
      std::vector<bool> voiced;
      for (const TokenDef* tok : tokens) {
        u.subwords.push_back(tok->text);
        u.subword_phoneme_counts.push_back(tok->phonemes.size());
        sf.stress.push_back(tok->stressed ? 1 : 0);
        std::vector<std::size_t> durs;
        for (std::size_t p : tok->phonemes) {
          double frames = inventory[p].base_frames * (1.0 - 0.15 * f);
          if (tok->stressed) frames *= 1.25;
          durs.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frames))));
        }
        std::size_t tok_frames = 0;
        for (auto x : durs) tok_frames += x;
        std::size_t k = 0;
        for (std::size_t i = 0; i < tok->phonemes.size(); ++i) {
          const std::size_t p = tok->phonemes[i];
          u.phonemes.push_back(inventory[p].symbol);
          u.durations.push_back(durs[i]);
          for (std::size_t j = 0; j < durs[i]; ++j, ++k) {
            const double pos = (static_cast<double>(k) + 0.5) / static_cast<double>(tok_frames);
            double v = tok->tone_level + tok->tone_slope * (pos - 0.5);
            if (tok->stressed) v += cfg.stress_excursion_hz * std::sin(std::numbers::pi * pos);
            local.push_back(v);
            frame_phone.push_back(p);
            frame_pos_in_phone.push_back((static_cast<double>(j) + 0.5) / static_cast<double>(durs[i]));
            voiced.push_back(inventory[p].voiced);
          }
        }
      }
      const std::size_t frames = local.size();
      double centre = 0.0;
      std::size_t n_voiced = 0;
      for (std::size_t i = 0; i < frames; ++i)
        if (voiced[i]) {
          centre += local[i];
          ++n_voiced;
        }
      centre = n_voiced ? centre / static_cast<double>(n_voiced) : 0.0;

      u.mel = Matrix(frames, B);
      u.pitch_frame.resize(frames);
      u.energy_frame.resize(frames);
      const double energy_scale = std::exp(0.3 * f);
      for (std::size_t i = 0; i < frames; ++i) {
        const PhonemeDef& ph = inventory[frame_phone[i]];
        const double pitch = ph.voiced ? cfg.base_pitch_hz + offset + local[i] - centre : 0.0;
        const double energy =
            ph.energy * energy_scale * (0.8 + 0.2 * std::sin(std::numbers::pi * frame_pos_in_phone[i]));
        if (ph.voiced && pitch < 30.0)
          throw std::invalid_argument("synth.base_pitch_hz: too low for the configured pitch excursions");
        u.pitch_frame[i] = pitch;
        u.energy_frame[i] = energy;
        for (std::size_t b = 0; b < B; ++b) {
          const double x = static_cast<double>(b) / static_cast<double>(B - 1);
          double env = 0.1;
          for (int k = 0; k < 2; ++k) {
            const double z = (x - ph.formant[k]) / ph.width[k];
            env += std::exp(-0.5 * z * z);
          }
          if (ph.voiced) {
            const double z = (x - pitch / 500.0) / 0.05;
            env += 0.8 * std::exp(-0.5 * z * z);
          }
          u.mel(i, b) = std::log(energy * env + 1e-4);
        }
      }
      out.factors.sentences.push_back(std::move(sf));
      out.utterances.push_back(std::move(u));
    }
  }
  return out;
}

std::filesystem::path generate_synthetic_corpus(const SynthConfig& config, std::uint64_t seed,
                                                const std::filesystem::path& out_dir) {
  SynthCorpus c = synthesize_corpus(config, seed);
  std::filesystem::create_directories(out_dir);
  write_corpus(out_dir, kManifestName, c.features, c.utterances);
  c.factors.save(out_dir / kFactorsName);
  return out_dir / kManifestName;
}

}  // namespace multistyle
