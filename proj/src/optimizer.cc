// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/optimizer.h"

#include <cmath>

namespace multistyle {

double scheduled_lr(double base_lr, std::size_t warmup_steps, std::size_t step) {
  if (step == 0) step = 1;
  if (warmup_steps == 0) return base_lr;
  const double s = static_cast<double>(step), w = static_cast<double>(warmup_steps);
  return step <= warmup_steps ? base_lr * s / w : base_lr * std::sqrt(w / s);
}

void Adam::step(ParamStore& store, double lr) {
  for (const auto& p : store.params()) {
    if (!p->trainable() || p->grad().empty()) continue;
    for (double g : p->grad())
      if (!std::isfinite(g)) throw DivergenceError("non-finite gradient for " + p->name());
  }
  const std::size_t t = ++state_.step;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t));
  for (const auto& p : store.params()) {
    if (!p->trainable() || p->grad().empty()) continue;
    const auto& g = p->grad();
    auto& values = p->values();
    auto& m = state_.m[p->name()];
    auto& v = state_.v[p->name()];
    m.resize(values.size(), 0.0);
    v.resize(values.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * g[i] * g[i];
      values[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace multistyle
