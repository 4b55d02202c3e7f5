// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "multistyle/neural.h"

namespace multistyle {

// Raised when a loss or gradient stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// Linear warmup to base_lr over warmup_steps, then base_lr * sqrt(warmup / step).
// step is 1-based.
double scheduled_lr(double base_lr, std::size_t warmup_steps, std::size_t step);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every trainable parameter that received a gradient. Parameters
  // that are frozen or untouched keep their exact values.
  void step(ParamStore& store, double lr);

  const AdamConfig& config() const { return config_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace multistyle
