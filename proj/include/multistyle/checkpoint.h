// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// A checkpoint is a directory:
//   checkpoint.json        names, shapes, trainable flags, metadata
//   params/<name>.mst      one f64 TensorFile per parameter
//   buffers/<name>.mst     running statistics
//   adam/<name>.{m,v}.mst  optimizer moments (optional)

#pragma once

#include <filesystem>
#include <stdexcept>

#include "json.hpp"
#include "multistyle/neural.h"
#include "multistyle/optimizer.h"

namespace multistyle {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& dir, const ParamStore& store,
                     const nlohmann::json& meta, const AdamState* adam = nullptr);

// Reads only the metadata block.
nlohmann::json read_checkpoint_meta(const std::filesystem::path& dir);

// Restores values, trainable flags and buffers into an identically shaped
// store. Every stored parameter must exist in `store` with the same shape and
// vice versa. Returns the metadata block.
nlohmann::json load_checkpoint(const std::filesystem::path& dir, ParamStore& store,
                               AdamState* adam = nullptr);

bool is_checkpoint(const std::filesystem::path& dir);

}  // namespace multistyle
