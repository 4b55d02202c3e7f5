// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// multistyle: corpus generation, staged training, synthesis, evaluation and
// figures. Exit codes: 0 ok, 1 I/O, 2 usage or config, 3 divergence.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "multistyle/checkpoint.h"
#include "multistyle/config.h"
#include "multistyle/evaluation.h"
#include "multistyle/optimizer.h"
#include "multistyle/pipeline.h"
#include "multistyle/plot.h"
#include "multistyle/synth_corpus.h"
#include "multistyle/tensor_file.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace multistyle;

namespace {

enum Exit { kOk = 0, kIo = 1, kUsage = 2, kDiverged = 3 };

fs::path output_path(const std::string& flag) { return resolve_output(fs::path(flag)); }

Corpus load_corpus(const std::string& manifest) {
  if (manifest.empty()) throw UsageError("--corpus is required");
  return Corpus::load(manifest);
}

std::unique_ptr<MultiStyleModel> load_model(const std::string& dir) {
  if (dir.empty()) throw UsageError("--ckpt is required");
  if (!is_checkpoint(dir)) throw CheckpointError("no checkpoint at " + dir);
  return MultiStyleModel::load(dir);
}

const AlignedUtterance& find_utterance(const Corpus& corpus, const std::string& key) {
  const auto [doc, idx] = parse_utterance_key(key);
  if (!corpus.contains(doc, idx)) throw UsageError("unknown utterance " + key);
  return corpus.utterance(doc, idx);
}

void check_document(const Corpus& corpus, const std::string& doc) {
  for (const auto& d : corpus.document_ids())
    if (d == doc) return;
  throw UsageError("unknown document " + doc);
}

void check_mode(const MultiStyleModel& model, const std::string& expected) {
  if (expected.empty()) return;
  const PredictorMode want = parse_mode(expected);
  if (want != model.config().mode)
    throw UsageError("mode mismatch: checkpoint is " + to_string(model.config().mode) + ", command asked for " +
                     expected);
}

// Runs the external inversion command once per mel file; "{mel}" in the
// template is replaced by the path.
void invert(const std::string& tmpl, const fs::path& mel) {
  if (tmpl.empty()) return;
  std::string cmd = tmpl;
  const std::string quoted = "'" + mel.string() + "'";
  if (auto pos = cmd.find("{mel}"); pos != std::string::npos)
    cmd.replace(pos, 5, quoted);
  else
    cmd += " " + quoted;
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("inversion command failed: " + cmd);
}

struct Options {
  std::string config, out, ckpt, corpus, utterance, document, split = "test", mode, source = "predicted";
  std::string stage, resume, invert_cmd, input, log;
  std::optional<std::uint64_t> seed;
  bool use_extractor = false;
  std::size_t count = 0, samples = 32, window = 5;
};

int gen_corpus(const Options& o) {
  SynthConfig synth;
  std::uint64_t seed = 7;
  fs::path out = "corpus";
  if (!o.config.empty()) {
    const RunConfig rc = RunConfig::load(o.config);
    synth = rc.synth;
    seed = rc.seed;
    if (!rc.manifest.empty()) out = rc.manifest.parent_path();
  }
  if (o.seed) seed = *o.seed;
  if (!o.out.empty()) out = output_path(o.out);
  const fs::path manifest = generate_synthetic_corpus(synth, seed, out);
  const Corpus corpus = Corpus::load(manifest);
  std::size_t frames = 0;
  for (const auto* u : corpus.utterances()) frames += u->frames();
  std::cout << manifest.string() << "\n"
            << "documents " << corpus.document_ids().size() << ", utterances " << corpus.size() << " (train "
            << corpus.utterances("train").size() << ", test " << corpus.utterances("test").size() << "), frames "
            << frames << ", mel bins " << corpus.features().mel_bins << "\n";
  return kOk;
}

int train(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  RunConfig rc = RunConfig::load(o.config);
  if (o.seed) rc.seed = rc.train.seed = *o.seed;
  if (!o.corpus.empty()) rc.manifest = o.corpus;
  if (!o.out.empty()) rc.output_dir = o.out;
  const auto result = run_training(rc, parse_stages(o.stage), o.resume, &std::cout);
  std::cout << "log " << (result.out_dir / "train_log.jsonl").string() << "\n";
  return kOk;
}

int synthesize(const Options& o) {
  const Corpus corpus = load_corpus(o.corpus);
  const auto model = load_model(o.ckpt);
  check_mode(*model, o.mode);
  const auto& u = find_utterance(corpus, o.utterance);
  const Synthesis s = synthesize_utterance(*model, corpus, u, o.use_extractor);
  const fs::path mel = write_synthesis(output_path(o.out.empty() ? "synth" : o.out), u, s);
  std::cout << mel.string() << " (" << s.frames.mel.rows << " frames, "
            << (o.use_extractor ? "extracted" : "predicted") << " styles)\n";
  invert(o.invert_cmd, mel);
  return kOk;
}

int synthesize_paragraph_cmd(const Options& o) {
  const Corpus corpus = load_corpus(o.corpus);
  const auto model = load_model(o.ckpt);
  check_mode(*model, o.mode);
  check_document(corpus, o.document);
  if (model->config().mode != PredictorMode::kAutoregressive)
    std::cerr << "warning: checkpoint is " << to_string(model->config().mode)
              << "; falling back to per-sentence windowed prediction\n";
  const ParagraphSynthesis p = synthesize_paragraph(*model, corpus, o.document, o.count);
  const fs::path dir = output_path(o.out.empty() ? "synth" : o.out);
  const auto& sentences = corpus.document(o.document);
  for (std::size_t i = 0; i < p.sentences.size(); ++i) {
    const fs::path mel = write_synthesis(dir, sentences[i], p.sentences[i]);
    invert(o.invert_cmd, mel);
  }
  const fs::path combined = dir / (o.document + ".paragraph.mel.mst");
  write_tensor(combined, NdArray::from_matrix(p.mel, DType::kFloat32));
  std::cout << combined.string() << " (" << p.sentences.size() << " sentences, " << p.mel.rows << " frames)\n";
  invert(o.invert_cmd, combined);
  return kOk;
}

int evaluate(const Options& o) {
  const StyleSource source = parse_style_source(o.source);
  const Corpus corpus = load_corpus(o.corpus);
  std::unique_ptr<MultiStyleModel> model;
  if (source != StyleSource::kCopy) model = load_model(o.ckpt);
  const MetricReport report = evaluate_split(model.get(), corpus, o.split, source);
  const fs::path out = output_path(o.out.empty() ? "report" : o.out);
  fs::path jsonl = out, summary = out;
  jsonl += ".jsonl";
  summary += ".txt";
  report.write(jsonl, summary);
  std::ifstream in(summary);
  std::cout << in.rdbuf();
  return kOk;
}

int inspect_attention(const Options& o) {
  const Corpus corpus = load_corpus(o.corpus);
  const auto model = load_model(o.ckpt);
  const AttentionDump d =
      dump_attention(*model, corpus, o.samples, o.window, o.seed.value_or(0), o.split == "all" ? "" : o.split);
  const fs::path out = output_path(o.out.empty() ? "attention" : o.out);
  fs::path tensor = out, meta = out;
  tensor += ".mst";
  meta += ".json";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_tensor(tensor, NdArray::from_matrix(d.weights, DType::kFloat64));
  json j = {{"keys", d.keys}, {"current_offset", d.current_offset}, {"window", o.window}};
  std::ofstream(meta) << j.dump(2) << "\n";
  double worst = 0;
  std::vector<double> mean(d.weights.cols, 0.0);
  for (std::size_t r = 0; r < d.weights.rows; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < d.weights.cols; ++c) {
      sum += d.weights(r, c);
      mean[c] += d.weights(r, c) / static_cast<double>(d.weights.rows);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  std::cout << tensor.string() << " (" << d.weights.rows << " x " << d.weights.cols
            << "), max |row sum - 1| = " << worst << "\nmean weight by position:";
  for (double m : mean) std::cout << " " << m;
  std::cout << "\n";
  return kOk;
}

std::vector<std::string> position_labels(std::size_t cols) {
  std::vector<std::string> labels;
  const long radius = static_cast<long>(cols / 2);
  for (std::size_t c = 0; c < cols; ++c) {
    const long off = static_cast<long>(c) - radius;
    labels.push_back(off == 0 ? "t" : (off > 0 ? "t+" : "t") + std::to_string(off));
  }
  return labels;
}

int plot_attention(const Options& o) {
  if (o.input.empty()) throw UsageError("plot attention: --input is required");
  const Matrix w = read_tensor(o.input).to_matrix();
  std::vector<std::string> rows;
  fs::path meta = o.input;
  meta.replace_extension(".json");
  if (fs::exists(meta)) rows = json::parse(std::ifstream(meta)).at("keys").get<std::vector<std::string>>();
  const fs::path out = output_path(o.out.empty() ? "attention.svg" : o.out);
  write_heatmap_svg(out, w, {"Inter-sentence attention", "context position", "sample"}, rows,
                    position_labels(w.cols));
  std::cout << out.string() << "\n";
  return kOk;
}

int plot_losses(const Options& o) {
  if (o.log.empty()) throw UsageError("plot losses: --log is required");
  std::ifstream in(o.log);
  if (!in) throw std::runtime_error("cannot read " + o.log);
  std::map<int, Series> by_stage;
  std::map<int, std::size_t> offset;
  std::size_t global = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const int stage = j.at("stage");
    auto& s = by_stage[stage];
    if (s.name.empty()) {
      s.name = "stage " + std::to_string(stage);
      offset[stage] = global;
    }
    ++global;
    s.x.push_back(static_cast<double>(offset[stage] + j.at("step").get<std::size_t>()));
    s.y.push_back(j.at("loss").get<double>());
  }
  std::vector<Series> series;
  for (auto& [_, s] : by_stage) series.push_back(std::move(s));
  if (series.empty()) throw UsageError("plot losses: log is empty");
  const fs::path out = output_path(o.out.empty() ? "losses.svg" : o.out);
  write_line_plot_svg(out, series, {"Training loss", "step", "loss"});
  std::cout << out.string() << "\n";
  return kOk;
}

int plot_pitch(const Options& o) {
  const Corpus corpus = load_corpus(o.corpus);
  const auto& u = find_utterance(corpus, o.utterance);
  auto frames = [](std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
    return x;
  };
  std::vector<Series> series{{"ground truth", frames(u.pitch_frame.size()), u.pitch_frame}};
  if (!o.ckpt.empty()) {
    const auto model = load_model(o.ckpt);
    for (bool extracted : {false, true}) {
      const Synthesis s = synthesize_utterance(*model, corpus, u, extracted);
      series.push_back({extracted ? "extracted style" : "predicted style", frames(s.frames.pitch.size()),
                        s.frames.pitch});
    }
  }
  const fs::path out = output_path(o.out.empty() ? "pitch.svg" : o.out);
  write_line_plot_svg(out, series, {"Pitch contour " + u.key(), "frame", "F0 (Hz)"}, 0.0);
  std::cout << out.string() << "\n";
  return kOk;
}

int export_styles_cmd(const Options& o) {
  const Corpus corpus = load_corpus(o.corpus);
  const auto model = load_model(o.ckpt);
  const StyleSource source = parse_style_source(o.source);
  const fs::path out = output_path(o.out.empty() ? "styles" : o.out);
  export_styles(*model, corpus, source, out);
  std::cout << (out / "index.json").string() << "\n";
  return kOk;
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::cerr << "multistyle: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale speaking-style modelling for expressive speech synthesis"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic corpus");
  gen->add_option("--config", o.config, "Run config (synth section)");
  gen->add_option("--seed", o.seed, "Corpus seed");
  gen->add_option("--out", o.out, "Output directory");
  gen->callback([&] { action = [&] { return gen_corpus(o); }; });

  auto* tr = app.add_subcommand("train", "Run training stages");
  tr->add_option("--config", o.config, "Run config")->required();
  tr->add_option("--stage", o.stage, "1, 2, 3 or all")->required();
  tr->add_option("--resume", o.resume, "Checkpoint to resume from");
  tr->add_option("--seed", o.seed, "Override the config seed");
  tr->add_option("--corpus", o.corpus, "Override corpus.manifest");
  tr->add_option("--out", o.out, "Override output.dir");
  tr->callback([&] { action = [&] { return train(o); }; });

  auto* syn = app.add_subcommand("synthesize", "Synthesize one sentence");
  syn->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  syn->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  syn->add_option("--utterance", o.utterance, "DOC:IDX")->required();
  syn->add_flag("--use-extractor", o.use_extractor, "Extract styles from the ground-truth mel");
  syn->add_option("--mode", o.mode, "Expected predictor mode");
  syn->add_option("--out", o.out, "Output directory");
  syn->add_option("--invert-cmd", o.invert_cmd, "Command run per mel file; {mel} is the path");
  syn->callback([&] { action = [&] { return synthesize(o); }; });

  auto* par = app.add_subcommand("synthesize-paragraph", "Synthesize a document in order");
  par->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  par->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  par->add_option("--document", o.document, "Document id")->required();
  par->add_option("--count", o.count, "Keep the first N sentences (0 = all)");
  par->add_option("--mode", o.mode, "Expected predictor mode");
  par->add_option("--out", o.out, "Output directory");
  par->add_option("--invert-cmd", o.invert_cmd, "Command run per mel file; {mel} is the path");
  par->callback([&] { action = [&] { return synthesize_paragraph_cmd(o); }; });

  auto* ev = app.add_subcommand("evaluate", "Score a split");
  ev->add_option("--ckpt", o.ckpt, "Checkpoint directory");
  ev->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  ev->add_option("--split", o.split, "train, test or empty for all");
  ev->add_option("--mode", o.source, "predicted, extracted or copy");
  ev->add_option("--out", o.out, "Report path prefix");
  ev->callback([&] { action = [&] { return evaluate(o); }; });

  auto* att = app.add_subcommand("inspect-attention", "Dump inter-sentence attention");
  att->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  att->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  att->add_option("--samples", o.samples, "Number of sentences");
  att->add_option("--window", o.window, "Window size to sample");
  att->add_option("--seed", o.seed, "Sampling seed");
  att->add_option("--split", o.split, "train, test or all");
  att->add_option("--out", o.out, "Output path prefix");
  att->callback([&] { action = [&] { return inspect_attention(o); }; });

  auto* plot = app.add_subcommand("plot", "Render figures as SVG");
  plot->require_subcommand(1);
  auto* pc = plot->add_subcommand("pitch-contour", "Ground truth and synthesized pitch");
  pc->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  pc->add_option("--utterance", o.utterance, "DOC:IDX")->required();
  pc->add_option("--ckpt", o.ckpt, "Checkpoint for synthesized contours");
  pc->add_option("--out", o.out, "SVG path");
  pc->callback([&] { action = [&] { return plot_pitch(o); }; });
  auto* pa = plot->add_subcommand("attention", "Heatmap of an inspect-attention dump");
  pa->add_option("--input", o.input, "Attention tensor")->required();
  pa->add_option("--out", o.out, "SVG path");
  pa->callback([&] { action = [&] { return plot_attention(o); }; });
  auto* pl = plot->add_subcommand("losses", "Loss curves from a training log");
  pl->add_option("--log", o.log, "train_log.jsonl")->required();
  pl->add_option("--out", o.out, "SVG path");
  pl->callback([&] { action = [&] { return plot_losses(o); }; });

  auto* ex = app.add_subcommand("export-styles", "Write per-utterance style embeddings");
  ex->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  ex->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  ex->add_option("--source", o.source, "extracted or predicted");
  ex->add_option("--out", o.out, "Output directory");
  ex->callback([&] { action = [&] { return export_styles_cmd(o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const DivergenceError& e) {
    return report_error("diverged", e, kDiverged);
  } catch (const UsageError& e) {
    return report_error("usage", e, kUsage);
  } catch (const ConfigError& e) {
    return report_error("config", e, kUsage);
  } catch (const std::invalid_argument& e) {
    return report_error("invalid argument", e, kUsage);
  } catch (const std::out_of_range& e) {
    return report_error("invalid argument", e, kUsage);
  } catch (const nlohmann::json::exception& e) {
    return report_error("malformed file", e, kIo);
  } catch (const std::exception& e) {
    return report_error("error", e, kIo);
  }
}
