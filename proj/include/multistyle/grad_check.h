// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "multistyle/autograd.h"
#include "multistyle/neural.h"

namespace multistyle {

class GradCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  // Entries checked per tensor; 0 checks every entry, otherwise an evenly
  // spaced subset.
  std::size_t max_per_tensor = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<name>[i]" of the worst entry
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradTarget {
  std::string name;
  ag::Var leaf;
};

// fn must rebuild its graph from the leaves on every call and return a scalar.
GradCheckReport grad_check(const std::function<ag::Var()>& fn, std::span<const GradTarget> targets,
                           const GradCheckOptions& options = {});
GradCheckReport grad_check(const std::function<ag::Var()>& fn, const ParamStore& store,
                           const GradCheckOptions& options = {});

}  // namespace multistyle
