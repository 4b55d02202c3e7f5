// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/grad_check.h"

#include <algorithm>
#include <cmath>

namespace multistyle {
namespace {

double eval(const std::function<ag::Var()>& fn, const std::string& where) {
  const ag::Var out = fn();
  if (out.size() != 1) throw GradCheckError("grad_check: function is not scalar");
  const double v = out.item();
  if (!std::isfinite(v)) throw GradCheckError("grad_check: non-finite value while perturbing " + where);
  return v;
}

}  // namespace

GradCheckReport grad_check(const std::function<ag::Var()>& fn, std::span<const GradTarget> targets,
                           const GradCheckOptions& options) {
  for (const auto& t : targets) {
    t.leaf.node()->grad.clear();
    for (double v : t.leaf.value())
      if (!std::isfinite(v)) throw GradCheckError("grad_check: non-finite parameter " + t.name);
  }
  const ag::Var loss = fn();
  if (!std::isfinite(loss.item())) throw GradCheckError("grad_check: non-finite loss");
  ag::backward(loss);

  GradCheckReport report;
  for (const auto& t : targets) {
    std::vector<double> analytic = t.leaf.node()->grad;
    analytic.resize(t.leaf.size(), 0.0);
    t.leaf.node()->grad.clear();
    for (double g : analytic)
      if (!std::isfinite(g)) throw GradCheckError("grad_check: non-finite gradient for " + t.name);

    const std::size_t n = t.leaf.size();
    const std::size_t count = options.max_per_tensor ? std::min(n, options.max_per_tensor) : n;
    auto& values = t.leaf.node()->value;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = count == n ? k : k * n / count;
      const std::string where = t.name + "[" + std::to_string(i) + "]";
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = eval(fn, where);
      values[i] = saved - options.eps;
      const double down = eval(fn, where);
      values[i] = saved;
      const double numeric = (up - down) / (2 * options.eps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= report.max_rel_error) {
          report.worst = where;
          report.analytic_at_worst = analytic[i];
          report.numeric_at_worst = numeric;
        }
      }
    }
  }
  report.passed = report.max_rel_error <= options.tol;
  return report;
}

GradCheckReport grad_check(const std::function<ag::Var()>& fn, const ParamStore& store,
                           const GradCheckOptions& options) {
  std::vector<GradTarget> targets;
  for (const auto& p : store.params())
    if (p->trainable()) targets.push_back({p->name(), p->var()});
  return grad_check(fn, targets, options);
}

}  // namespace multistyle
