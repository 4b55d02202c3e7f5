// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/corpus.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "multistyle/tensor_file.h"

namespace multistyle {

using nlohmann::json;

std::string AlignedUtterance::key() const {
  return document_id + ":" + std::to_string(sentence_index);
}

std::string AlignedUtterance::text() const {
  std::string out;
  for (std::size_t i = 0; i < subwords.size(); ++i) out += (i ? " " : "") + subwords[i];
  return out;
}

std::vector<std::size_t> AlignedUtterance::subword_of_phoneme() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < subword_phoneme_counts.size(); ++s)
    out.insert(out.end(), subword_phoneme_counts[s], s);
  return out;
}

void AlignedUtterance::validate() const {
  const std::string where = "utterance " + key() + ": ";
  if (subwords.size() != subword_phoneme_counts.size())
    throw CorpusError(where + "subword count does not match subword_phoneme_counts");
  const std::size_t nph = std::accumulate(subword_phoneme_counts.begin(), subword_phoneme_counts.end(),
                                          std::size_t{0});
  if (nph != phonemes.size())
    throw CorpusError(where + "subword_phoneme_counts sum to " + std::to_string(nph) + " but there are " +
                      std::to_string(phonemes.size()) + " phonemes");
  if (durations.size() != phonemes.size())
    throw CorpusError(where + "duration count does not match phoneme count");
  const std::size_t total = std::accumulate(durations.begin(), durations.end(), std::size_t{0});
  if (total == 0) throw CorpusError(where + "all durations are zero");
  if (total != mel.rows)
    throw CorpusError(where + "shape mismatch: durations sum to " + std::to_string(total) +
                      " frames but mel has " + std::to_string(mel.rows));
  if (pitch_frame.size() != total || energy_frame.size() != total)
    throw CorpusError(where + "shape mismatch: pitch/energy frame counts differ from durations");
}

std::vector<FrameSpan> subword_spans(const std::vector<std::size_t>& durations,
                                     const std::vector<std::size_t>& subword_phoneme_counts) {
  const std::size_t nph = std::accumulate(subword_phoneme_counts.begin(), subword_phoneme_counts.end(),
                                          std::size_t{0});
  if (nph != durations.size())
    throw CorpusError("subword_spans: counts sum to " + std::to_string(nph) + " but " +
                      std::to_string(durations.size()) + " durations given");
  std::vector<FrameSpan> spans;
  std::size_t frame = 0, ph = 0;
  for (std::size_t count : subword_phoneme_counts) {
    const std::size_t start = frame;
    for (std::size_t k = 0; k < count; ++k) frame += durations[ph++];
    spans.emplace_back(start, frame);
  }
  return spans;
}

std::vector<double> phone_level_average(const std::vector<double>& frame_values,
                                        const std::vector<std::size_t>& durations,
                                        bool exclude_unvoiced) {
  const std::size_t total = std::accumulate(durations.begin(), durations.end(), std::size_t{0});
  if (total != frame_values.size())
    throw CorpusError("phone_level_average: " + std::to_string(frame_values.size()) +
                      " frames but durations sum to " + std::to_string(total));
  std::vector<double> out(durations.size(), 0.0);
  std::size_t frame = 0;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < durations[p]; ++k, ++frame) {
      const double v = frame_values[frame];
      if (exclude_unvoiced && v == 0.0) continue;
      s += v;
      ++n;
    }
    out[p] = n ? s / static_cast<double>(n) : 0.0;
  }
  return out;
}

Corpus::Corpus(FeatureConfig features, std::vector<AlignedUtterance> utterances)
    : features_(features) {
  std::set<std::pair<std::string, std::size_t>> seen;
  for (auto& u : utterances) {
    u.validate();
    if (u.mel.cols != features_.mel_bins)
      throw CorpusError("utterance " + u.key() + ": mel has " + std::to_string(u.mel.cols) +
                        " bins, feature_config says " + std::to_string(features_.mel_bins));
    if (!seen.emplace(u.document_id, u.sentence_index).second)
      throw CorpusError("duplicate utterance " + u.key());
    if (!docs_.count(u.document_id)) doc_ids_.push_back(u.document_id);
    docs_[u.document_id].push_back(std::move(u));
  }
  std::sort(doc_ids_.begin(), doc_ids_.end());
  for (auto& [id, list] : docs_)
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return a.sentence_index < b.sentence_index;
    });
}

namespace {

Matrix load_matrix(const std::filesystem::path& p, std::size_t cols_hint) {
  NdArray a = read_tensor(p);
  if (a.dims.size() == 2) return Matrix(a.dims[0], a.dims[1], std::move(a.values));
  if (a.dims.size() == 1 && cols_hint == 1) return Matrix(a.dims[0], 1, std::move(a.values));
  throw CorpusError(p.string() + ": unexpected rank " + std::to_string(a.dims.size()));
}

std::vector<double> load_vector(const std::filesystem::path& p) {
  NdArray a = read_tensor(p);
  if (a.dims.size() != 1) throw CorpusError(p.string() + ": expected a 1-D array");
  return std::move(a.values);
}

template <typename T>
T field(const json& j, const char* name, std::size_t line) {
  if (!j.contains(name))
    throw CorpusError("manifest line " + std::to_string(line) + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw CorpusError("manifest line " + std::to_string(line) + ": field '" + name + "': " + e.what());
  }
}

}  // namespace

Corpus Corpus::load(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw CorpusError("cannot open manifest " + manifest_path.string());
  const auto root = manifest_path.parent_path();
  FeatureConfig features;
  bool have_header = false;
  std::vector<AlignedUtterance> utts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorpusError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto kind = field<std::string>(j, "kind", lineno);
    if (kind == "header") {
      const auto version = field<int>(j, "version", lineno);
      if (version != 1) throw CorpusError("unsupported manifest version " + std::to_string(version));
      const json& fc = j.at("feature_config");
      features.mel_bins = field<std::size_t>(fc, "mel_bins", lineno);
      features.sample_rate_hz = field<double>(fc, "sample_rate_hz", lineno);
      features.frame_size_samples = field<std::size_t>(fc, "frame_size_samples", lineno);
      features.hop_size_samples = field<std::size_t>(fc, "hop_size_samples", lineno);
      have_header = true;
      continue;
    }
    if (kind != "utterance") throw CorpusError("manifest line " + std::to_string(lineno) + ": unknown kind " + kind);
    AlignedUtterance u;
    u.document_id = field<std::string>(j, "document_id", lineno);
    u.sentence_index = field<std::size_t>(j, "sentence_index", lineno);
    u.subwords = field<std::vector<std::string>>(j, "subwords", lineno);
    u.phonemes = field<std::vector<std::string>>(j, "phonemes", lineno);
    u.subword_phoneme_counts = field<std::vector<std::size_t>>(j, "subword_phoneme_counts", lineno);
    u.durations = field<std::vector<std::size_t>>(j, "durations", lineno);
    if (j.contains("split")) u.split = j.at("split").get<std::string>();
    for (const char* name : {"mel", "pitch", "energy"}) {
      const auto p = root / field<std::string>(j, name, lineno);
      if (!std::filesystem::exists(p))
        throw CorpusError("utterance " + u.key() + ": missing tensor file " + p.string());
    }
    u.mel = load_matrix(root / field<std::string>(j, "mel", lineno), 0);
    u.pitch_frame = load_vector(root / field<std::string>(j, "pitch", lineno));
    u.energy_frame = load_vector(root / field<std::string>(j, "energy", lineno));
    utts.push_back(std::move(u));
  }
  if (!have_header) throw CorpusError("manifest has no header record with feature_config");
  return Corpus(features, std::move(utts));
}

const std::vector<AlignedUtterance>& Corpus::document(const std::string& id) const {
  auto it = docs_.find(id);
  if (it == docs_.end()) throw CorpusError("unknown document " + id);
  return it->second;
}

bool Corpus::contains(const std::string& document_id, std::size_t sentence_index) const {
  auto it = docs_.find(document_id);
  if (it == docs_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const auto& u) { return u.sentence_index == sentence_index; });
}

const AlignedUtterance& Corpus::utterance(const std::string& document_id,
                                          std::size_t sentence_index) const {
  for (const auto& u : document(document_id))
    if (u.sentence_index == sentence_index) return u;
  throw CorpusError("unknown utterance " + document_id + ":" + std::to_string(sentence_index));
}

std::size_t Corpus::size() const {
  std::size_t n = 0;
  for (const auto& [id, list] : docs_) n += list.size();
  return n;
}

std::vector<const AlignedUtterance*> Corpus::utterances(const std::string& split) const {
  std::vector<const AlignedUtterance*> out;
  for (const auto& id : doc_ids_)
    for (const auto& u : docs_.at(id))
      if (split.empty() || u.split == split) out.push_back(&u);
  return out;
}

ContextWindow Corpus::window(const std::string& document_id, std::size_t sentence_index,
                             std::size_t radius) const {
  const auto& doc = document(document_id);
  std::size_t pos = doc.size();
  for (std::size_t i = 0; i < doc.size(); ++i)
    if (doc[i].sentence_index == sentence_index) pos = i;
  if (pos == doc.size())
    throw CorpusError("unknown utterance " + document_id + ":" + std::to_string(sentence_index));
  std::size_t lo = pos, hi = pos;
  while (pos - lo < radius && lo > 0 && doc[lo - 1].sentence_index + 1 == doc[lo].sentence_index) --lo;
  while (hi - pos < radius && hi + 1 < doc.size() &&
         doc[hi].sentence_index + 1 == doc[hi + 1].sentence_index)
    ++hi;
  ContextWindow w;
  for (std::size_t i = lo; i <= hi; ++i) w.sentences.push_back(&doc[i]);
  w.current_offset = pos - lo;
  w.radius = radius;
  return w;
}

ContextWindow build_context_window(const Corpus& corpus, const std::string& document_id,
                                   std::size_t sentence_index, std::size_t radius) {
  return corpus.window(document_id, sentence_index, radius);
}

void write_corpus(const std::filesystem::path& root, const std::string& manifest_name,
                  const FeatureConfig& features, const std::vector<AlignedUtterance>& utterances) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "feats");
  std::ofstream out(root / manifest_name, std::ios::trunc);
  if (!out) throw CorpusError("cannot write manifest in " + root.string());
  json header = {{"kind", "header"},
                 {"version", 1},
                 {"feature_config",
                  {{"mel_bins", features.mel_bins},
                   {"sample_rate_hz", features.sample_rate_hz},
                   {"frame_size_samples", features.frame_size_samples},
                   {"hop_size_samples", features.hop_size_samples}}}};
  out << header.dump() << "\n";
  for (const auto& u : utterances) {
    u.validate();
    char stem[256];
    std::snprintf(stem, sizeof(stem), "feats/%s_%04zu", u.document_id.c_str(), u.sentence_index);
    const std::string base(stem);
    write_tensor(root / (base + ".mel.mst"), NdArray::from_matrix(u.mel));
    write_tensor(root / (base + ".pitch.mst"), NdArray::from_vector(u.pitch_frame));
    write_tensor(root / (base + ".energy.mst"), NdArray::from_vector(u.energy_frame));
    json j = {{"kind", "utterance"},
              {"document_id", u.document_id},
              {"sentence_index", u.sentence_index},
              {"text", u.text()},
              {"subwords", u.subwords},
              {"phonemes", u.phonemes},
              {"subword_phoneme_counts", u.subword_phoneme_counts},
              {"durations", u.durations},
              {"split", u.split},
              {"mel", base + ".mel.mst"},
              {"pitch", base + ".pitch.mst"},
              {"energy", base + ".energy.mst"}};
    out << j.dump() << "\n";
  }
  if (!out) throw CorpusError("manifest write failed in " + root.string());
}

}  // namespace multistyle
