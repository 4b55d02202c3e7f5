// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "multistyle/checkpoint.h"
#include "multistyle/config.h"
#include "multistyle/corpus.h"
#include "multistyle/model.h"
#include "multistyle/pipeline.h"
#include "multistyle/tensor_file.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace multistyle;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "multistyle_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string("'") + MULTISTYLE_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

json tiny_config() {
  return {
      {"version", 1},
      {"seed", 5},
      {"corpus", {{"manifest", "data/manifest.jsonl"}}},
      {"synth",
       {{"documents", 2},
        {"sentences_per_document", 6},
        {"min_subwords", 2},
        {"max_subwords", 3},
        {"max_phonemes_per_subword", 2},
        {"test_every", 3}}},
      {"model",
       {{"d_model", 8},
        {"d_ctx", 8},
        {"conv_channels", {2, 2}},
        {"style_tokens", 4},
        {"token_heads", 2},
        {"acoustic_heads", 2},
        {"encoder_layers", 1},
        {"decoder_layers", 1},
        {"d_ffn", 8},
        {"variance_channels", 4},
        {"variance_bins", 8},
        {"context_radius", 1},
        {"reference_radius", 1},
        {"provider", {{"kind", "hash"}, {"d_sem", 8}}}}},
      {"train",
       {{"batch_size", 2},
        {"stage1_per_level", 3},
        {"stage2_steps", 4},
        {"stage3_steps", 4},
        {"warmup_steps", 2},
        {"checkpoint_every", 4}}},
      {"output", {{"dir", "run"}}},
  };
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path dir = scratch() / name;
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << j.dump(2);
  return dir / "config.json";
}

// One generated corpus and one full training run shared by the CLI cases.
const fs::path& trained() {
  static const fs::path dir = [] {
    const fs::path cfg = write_config("main", tiny_config());
    REQUIRE(cli("gen-corpus --config '" + cfg.string() + "'").code == 0);
    const Run r = cli("train --config '" + cfg.string() + "' --stage all");
    INFO(r.err);
    REQUIRE(r.code == 0);
    return cfg.parent_path();
  }();
  return dir;
}

std::string manifest() { return (trained() / "data" / "manifest.jsonl").string(); }
std::string ckpt(int stage) { return (trained() / "run" / ("stage" + std::to_string(stage))).string(); }

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

}  // namespace

TEST_CASE("unknown config keys are rejected by name") {
  json j = tiny_config();
  j["train"]["stage_one_steps"] = 3;
  try {
    RunConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("stage_one_steps") != std::string::npos);
  }
}

TEST_CASE("negative counts name the field") {
  json j = tiny_config();
  j["synth"]["sentences_per_document"] = -1;
  try {
    RunConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sentences_per_document") != std::string::npos);
  }
}

TEST_CASE("relative paths resolve against the config directory") {
  const RunConfig rc = RunConfig::from_json(tiny_config(), "/base/dir");
  CHECK(rc.manifest == fs::path("/base/dir/data/manifest.jsonl"));
  CHECK(rc.output_dir == fs::path("/base/dir/run"));
  json j = tiny_config();
  j["output"]["dir"] = "/abs/out";
  CHECK(RunConfig::from_json(j, "/base/dir").output_dir == fs::path("/abs/out"));
}

TEST_CASE("output root applies to relative directories only") {
  ::setenv("MULTISTYLE_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(resolve_output("runs/a") == fs::path("/tmp/root/runs/a"));
  CHECK(resolve_output("/abs/b") == fs::path("/abs/b"));
  ::unsetenv("MULTISTYLE_OUTPUT_ROOT");
  CHECK(resolve_output("runs/a") == fs::path("runs/a"));
}

TEST_CASE("config round-trips through json") {
  const RunConfig a = RunConfig::from_json(tiny_config(), "/x");
  const RunConfig b = RunConfig::from_json(a.to_json(), "/x");
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("gen-corpus is deterministic per seed") {
  const fs::path cfg = write_config("gen", tiny_config());
  const fs::path a = scratch() / "gen_a", b = scratch() / "gen_b", c = scratch() / "gen_c";
  REQUIRE(cli("gen-corpus --config '" + cfg.string() + "' --seed 11 --out '" + a.string() + "'").code == 0);
  REQUIRE(cli("gen-corpus --config '" + cfg.string() + "' --seed 11 --out '" + b.string() + "'").code == 0);
  REQUIRE(cli("gen-corpus --config '" + cfg.string() + "' --seed 12 --out '" + c.string() + "'").code == 0);
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK_FALSE(slurp(a / "manifest.jsonl").empty());
  bool same_tensors = true;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) same_tensors = same_tensors && slurp(e.path()) == slurp(b / fs::relative(e.path(), a));
  CHECK(same_tensors);
  bool differs = false;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file() && e.path().extension() == ".mst")
      differs = differs || slurp(e.path()) != slurp(c / fs::relative(e.path(), a));
  CHECK(differs);
}

TEST_CASE("invalid config exits 2 naming the field") {
  json j = tiny_config();
  j["synth"]["sentences_per_document"] = -3;
  const fs::path cfg = write_config("bad", j);
  const Run r = cli("gen-corpus --config '" + cfg.string() + "'");
  CHECK(r.code == 2);
  CHECK(r.err.find("sentences_per_document") != std::string::npos);
}

TEST_CASE("unknown subcommand and missing flags exit 2") {
  CHECK(cli("no-such-command").code == 2);
  CHECK(cli("train --stage 1").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("stage 2 without stage 1 exits 2") {
  const fs::path cfg = write_config("orphan", tiny_config());
  REQUIRE(cli("gen-corpus --config '" + cfg.string() + "'").code == 0);
  const Run r = cli("train --config '" + cfg.string() + "' --stage 2");
  CHECK(r.code == 2);
  CHECK(r.err.find("stage-1") != std::string::npos);
  CHECK_FALSE(fs::exists(cfg.parent_path() / "run" / "stage2"));
}

TEST_CASE("train --stage all writes every stage") {
  const fs::path run = trained() / "run";
  for (int k = 1; k <= 3; ++k) CHECK(is_checkpoint(run / ("stage" + std::to_string(k))));
  const auto log = read_jsonl(run / "train_log.jsonl");
  REQUIRE(log.size() == 9 + 4 + 4);
  CHECK(log.front()["stage"] == 1);
  CHECK(log.back()["stage"] == 3);
  for (const auto& r : log) CHECK(std::isfinite(r["lr"].get<double>()));
}

TEST_CASE("resume reproduces the uninterrupted log") {
  const fs::path run = trained() / "run";
  const fs::path copy = scratch() / "resumed";
  fs::remove_all(copy);
  fs::copy(run, copy, fs::copy_options::recursive);
  REQUIRE(is_checkpoint(copy / "resume" / "stage1"));
  CHECK(read_checkpoint_meta(copy / "resume" / "stage1")["step"] == 8);
  fs::remove_all(copy / "stage1");
  fs::remove_all(copy / "stage2");
  fs::remove_all(copy / "stage3");
  const Run r = cli("train --config '" + (trained() / "config.json").string() + "' --stage all --out '" +
                    copy.string() + "' --resume '" + (copy / "resume" / "stage1").string() + "'");
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto a = read_jsonl(run / "train_log.jsonl");
  const auto b = read_jsonl(copy / "train_log.jsonl");
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]["stage"] == b[i]["stage"]);
    CHECK(a[i]["step"] == b[i]["step"]);
    worst = std::max(worst, std::abs(a[i]["loss"].get<double>() - b[i]["loss"].get<double>()));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("resume from the wrong stage exits 2") {
  const Run r = cli("train --config '" + (trained() / "config.json").string() + "' --stage 2 --out '" +
                    (scratch() / "wrong").string() + "' --resume '" + (trained() / "run" / "resume" / "stage1").string() +
                    "'");
  CHECK(r.code == 2);
}

TEST_CASE("synthesize-paragraph stacks the sentences") {
  const fs::path out = scratch() / "para";
  const Corpus corpus = Corpus::load(manifest());
  const std::string doc = corpus.document_ids().front();
  const Run r = cli("synthesize-paragraph --ckpt '" + ckpt(3) + "' --corpus '" + manifest() + "' --document " + doc +
                    " --out '" + out.string() + "'");
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const NdArray para = read_tensor(out / (doc + ".paragraph.mel.mst"));

  const auto model = MultiStyleModel::load(ckpt(3));
  const ParagraphSynthesis p = synthesize_paragraph(*model, corpus, doc, 0);
  REQUIRE(p.sentences.size() == corpus.document(doc).size());
  std::vector<double> stacked;
  std::size_t frames = 0;
  for (const auto& s : p.sentences) {
    stacked.insert(stacked.end(), s.frames.mel.data.begin(), s.frames.mel.data.end());
    frames += s.frames.mel.rows;
  }
  CHECK(stacked == p.mel.data);
  CHECK(p.mel.rows == frames);
  CHECK(para.dims.front() == frames);
}

TEST_CASE("mode mismatch exits 2") {
  const Corpus corpus = Corpus::load(manifest());
  const Run r = cli("synthesize-paragraph --ckpt '" + ckpt(3) + "' --corpus '" + manifest() + "' --document " +
                    corpus.document_ids().front() + " --mode ar --out '" + (scratch() / "mm").string() + "'");
  CHECK(r.code == 2);
  CHECK(r.err.find("mode mismatch") != std::string::npos);
}

TEST_CASE("evaluate copy mode scores zero") {
  const fs::path out = scratch() / "copy_report";
  const Run r = cli("evaluate --corpus '" + manifest() + "' --mode copy --split all --out '" + out.string() + "'");
  INFO(r.err);
  REQUIRE(r.code == 0);
  fs::path jsonl = out;
  jsonl += ".jsonl";
  const auto rows = read_jsonl(jsonl);
  REQUIRE_FALSE(rows.empty());
  const json& agg = rows.back();
  CHECK(agg["kind"] == "aggregate");
  for (const char* name : {"mcd", "f0_rmse", "energy_rmse", "duration_mse"}) {
    REQUIRE(agg.contains(name));
    CHECK(agg[name].get<double>() == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("evaluate predicted mode writes a report") {
  const fs::path out = scratch() / "pred_report";
  const Run r = cli("evaluate --ckpt '" + ckpt(3) + "' --corpus '" + manifest() + "' --out '" + out.string() + "'");
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("MCD") != std::string::npos);
}

TEST_CASE("inspect-attention rows sum to one") {
  const fs::path out = scratch() / "attention";
  const Run r = cli("inspect-attention --ckpt '" + ckpt(2) + "' --corpus '" + manifest() +
                    "' --samples 4 --window 3 --split all --out '" + out.string() + "'");
  INFO(r.err);
  REQUIRE(r.code == 0);
  fs::path tensor = out;
  tensor += ".mst";
  const NdArray w = read_tensor(tensor);
  REQUIRE(w.dims.size() == 2);
  for (std::size_t i = 0; i < w.dims[0]; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < w.dims[1]; ++j) sum += w.values[i * w.dims[1] + j];
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("missing checkpoint exits 1") {
  CHECK(cli("evaluate --ckpt '" + (scratch() / "nowhere").string() + "' --corpus '" + manifest() + "'").code != 0);
}

TEST_CASE("divergence exits 3") {
  json j = tiny_config();
  j["train"]["base_lr"] = 1e300;
  j["train"]["warmup_steps"] = 1;
  const fs::path cfg = write_config("diverge", j);
  REQUIRE(cli("gen-corpus --config '" + cfg.string() + "'").code == 0);
  const Run r = cli("train --config '" + cfg.string() + "' --stage 1");
  CHECK(r.code == 3);
}

TEST_CASE("shipped configs load") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(MULTISTYLE_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    INFO(e.path());
    const RunConfig rc = RunConfig::load(e.path());
    CHECK_FALSE(rc.manifest.empty());
    ++n;
  }
  CHECK(n >= 3);
  const RunConfig full = RunConfig::load(fs::path(MULTISTYLE_SOURCE_DIR) / "configs" / "full_scale.json");
  CHECK(full.train.stage1_steps() == 180000);
  CHECK(full.train.warmup_steps == 4000);
}
