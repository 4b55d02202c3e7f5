// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/pipeline.h"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "multistyle/checkpoint.h"
#include "multistyle/tensor_file.h"

namespace multistyle {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> parse_stages(const std::string& s) {
  if (s == "all") return {1, 2, 3};
  if (s == "1" || s == "2" || s == "3") return {s[0] - '0'};
  throw UsageError("--stage: expected 1, 2, 3 or all, got '" + s + "'");
}

bool stage_complete(const fs::path& out_dir, int stage) {
  const fs::path dir = out_dir / ("stage" + std::to_string(stage));
  if (!is_checkpoint(dir)) return false;
  const json meta = read_checkpoint_meta(dir);
  return meta.value("complete", false) && meta.value("stage", 0) == stage;
}

namespace {

void run_stage(Trainer& trainer, int stage, MultiStyleModel& model, Adam& adam, std::size_t start) {
  switch (stage) {
    case 1: trainer.stage1(model, adam, start); break;
    case 2: trainer.stage2(model, adam, start); break;
    default: trainer.stage3(model, adam, start); break;
  }
}

}  // namespace

TrainResult run_training(const RunConfig& config, const std::vector<int>& stages, const fs::path& resume,
                         std::ostream* progress) {
  if (stages.empty()) throw UsageError("no stages requested");
  const fs::path out = resolve_output(config.output_dir);
  if (config.manifest.empty()) throw ConfigError("corpus.manifest: required for training");
  const Corpus corpus = Corpus::load(config.manifest);

  int resume_stage = 0;
  std::size_t resume_step = 0;
  if (!resume.empty()) {
    if (!is_checkpoint(resume)) throw UsageError("--resume: no checkpoint at " + resume.string());
    const json meta = read_checkpoint_meta(resume);
    resume_stage = meta.value("stage", 0);
    resume_step = meta.value("step", std::size_t{0});
    if (resume_stage != stages.front())
      throw UsageError("--resume: checkpoint was taken in stage " + std::to_string(resume_stage) +
                       " but the first requested stage is " + std::to_string(stages.front()));
  }
  for (int k = 1; k < stages.front(); ++k)
    if (!stage_complete(out, k))
      throw UsageError("stage " + std::to_string(stages.front()) + " requires a completed stage-" +
                       std::to_string(k) + " checkpoint in " + (out / ("stage" + std::to_string(k))).string());

  fs::create_directories(out);
  {
    std::ofstream cfg(out / "config.json");
    cfg << config.to_json().dump(2) << "\n";
  }
  Trainer trainer(corpus, config.train, out);
  const fs::path log = out / "train_log.jsonl";
  for (int stage : stages) {
    std::unique_ptr<MultiStyleModel> model;
    Adam adam(config.train.adam);
    std::size_t start = 0;
    if (stage == resume_stage) {
      model = MultiStyleModel::load(resume, nullptr, &adam.state());
      start = resume_step;
    } else if (stage == 1) {
      model = MultiStyleModel::create(config.model, corpus);
    } else {
      model = MultiStyleModel::load(trainer.stage_dir(stage - 1));
    }
    truncate_log(log, stage, start);
    if (progress) *progress << "stage " << stage << ": starting at step " << start << "\n";
    run_stage(trainer, stage, *model, adam, start);
    if (progress) {
      const auto& h = trainer.history();
      if (!h.empty() && h.back().stage == stage)
        *progress << "stage " << stage << ": done, final loss " << h.back().loss.total << " -> "
                  << trainer.stage_dir(stage).string() << "\n";
      else
        *progress << "stage " << stage << ": already complete -> " << trainer.stage_dir(stage).string() << "\n";
    }
  }
  return {out, trainer.history()};
}

Synthesis synthesize_utterance(const MultiStyleModel& model, const Corpus& corpus, const AlignedUtterance& u,
                               bool use_extractor) {
  AcousticOutput out;
  if (use_extractor) {
    const StyleEmbeddings s = model.extract(corpus, u, false);
    out = model.synthesize(u, s.S_g, s.S_s, s.S_w, false);
  } else {
    const PredictedStyles p = model.predict(corpus, u);
    out = model.synthesize(u, p.S_g, p.S_s, p.S_w, false);
  }
  return {u.key(), frame_contours(model, out)};
}

ParagraphSynthesis synthesize_paragraph(const MultiStyleModel& model, const Corpus& corpus,
                                        const std::string& document, std::size_t count) {
  const auto& sentences = corpus.document(document);
  const auto styles = model.predict_paragraph(corpus, document);
  const std::size_t n = count == 0 ? sentences.size() : std::min(count, sentences.size());
  ParagraphSynthesis p;
  p.autoregressive = model.config().mode == PredictorMode::kAutoregressive;
  std::vector<double> stacked;
  std::size_t bins = 0, frames = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = sentences[i];
    const auto out = model.synthesize(u, styles[i].S_g, styles[i].S_s, styles[i].S_w, false);
    Synthesis s{u.key(), frame_contours(model, out)};
    bins = s.frames.mel.cols;
    frames += s.frames.mel.rows;
    stacked.insert(stacked.end(), s.frames.mel.data.begin(), s.frames.mel.data.end());
    p.sentences.push_back(std::move(s));
  }
  p.mel = Matrix(frames, bins, std::move(stacked));
  return p;
}

std::string file_stem(const std::string& document_id, std::size_t sentence_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu", sentence_index);
  return document_id + buf;
}

fs::path write_synthesis(const fs::path& dir, const AlignedUtterance& u, const Synthesis& s) {
  fs::create_directories(dir);
  const std::string stem = file_stem(u.document_id, u.sentence_index);
  const fs::path mel = dir / (stem + ".mel.mst");
  write_tensor(mel, NdArray::from_matrix(s.frames.mel, DType::kFloat32));
  write_tensor(dir / (stem + ".pitch.mst"), NdArray::from_vector(s.frames.pitch, DType::kFloat32));
  write_tensor(dir / (stem + ".energy.mst"), NdArray::from_vector(s.frames.energy, DType::kFloat32));
  return mel;
}

void export_styles(const MultiStyleModel& model, const Corpus& corpus, StyleSource source, const fs::path& dir) {
  if (source == StyleSource::kCopy) throw UsageError("export-styles: source must be extracted or predicted");
  fs::create_directories(dir);
  json index = {{"source", to_string(source)}, {"d_style", model.config().d_model}, {"entries", json::object()}};
  for (const auto* u : corpus.utterances()) {
    PredictedStyles s;
    if (source == StyleSource::kExtracted) {
      const auto e = model.extract(corpus, *u, false);
      s = {e.S_g, e.S_s, e.S_w};
    } else {
      s = model.predict(corpus, *u);
    }
    const std::string stem = file_stem(u->document_id, u->sentence_index);
    const std::pair<const char*, const ag::Var*> levels[] = {
        {"global", &s.S_g}, {"sentence", &s.S_s}, {"subword", &s.S_w}};
    json files = json::object();
    for (const auto& [name, v] : levels) {
      const std::string file = stem + "." + name + ".mst";
      write_tensor(dir / file, NdArray::from_matrix(Matrix(v->rows(), v->cols(), v->value()), DType::kFloat64));
      files[name] = file;
    }
    index["entries"][u->key()] = files;
  }
  std::ofstream out(dir / "index.json");
  out << index.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir / "index.json").string());
}

std::pair<std::string, std::size_t> parse_utterance_key(const std::string& key) {
  const auto colon = key.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == key.size())
    throw UsageError("utterance key must look like DOC:IDX, got '" + key + "'");
  std::size_t idx = 0;
  const char* first = key.data() + colon + 1;
  const char* last = key.data() + key.size();
  const auto [ptr, ec] = std::from_chars(first, last, idx);
  if (ec != std::errc() || ptr != last) throw UsageError("utterance key index is not a number: '" + key + "'");
  return {key.substr(0, colon), idx};
}

}  // namespace multistyle
