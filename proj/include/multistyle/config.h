// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON file with a section per module.
//
//   {
//     "seed": 7,
//     "corpus": {"manifest": "data/manifest.jsonl", "factors": "data/factors.jsonl"},
//     "synth":  { ...SynthConfig fields... },
//     "model":  { ...ModelConfig fields, "provider": {...} },
//     "train":  { ...TrainConfig fields... },
//     "output": {"dir": "runs/toy"}
//   }
//
// Relative paths resolve against the config file's directory. Relative
// output directories resolve under $MULTISTYLE_OUTPUT_ROOT when it is set.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "multistyle/model.h"
#include "multistyle/synth_corpus.h"
#include "multistyle/training.h"

namespace multistyle {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::filesystem::path manifest;
  std::filesystem::path factors;
  std::filesystem::path output_dir = "runs/default";
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train;

  // Throws ConfigError naming the offending field.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

SynthConfig synth_config_from_json(const nlohmann::json& j);

// Applies $MULTISTYLE_OUTPUT_ROOT to a relative output directory.
std::filesystem::path resolve_output(const std::filesystem::path& dir);

}  // namespace multistyle
