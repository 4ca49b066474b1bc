// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/grad_check.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sfc/core/tape.h"

namespace sfc {

std::string GradCheckReport::Summary() const {
  std::string s = fmt::format("grad_check {} (max rel err {:.3e})\n",
                              pass ? "PASS" : "FAIL", max_rel_error);
  for (const auto& p : params) {
    s += fmt::format("  {:<40} n={:<6} rel={:.3e} abs={:.3e} {}\n", p.name, p.numel,
                     p.max_rel_error, p.max_abs_error, p.pass ? "ok" : "FAIL");
  }
  return s;
}

GradCheckReport GradCheck(const std::function<Tensor()>& f, std::vector<Parameter> params,
                          const GradCheckOptions& options) {
  double first = f().item();
  double second = f().item();
  if (first != second) {
    throw DeterminismError(fmt::format(
        "grad_check: forward pass is not deterministic ({} vs {})", first, second));
  }

  std::vector<std::vector<double>> analytic;
  {
    GradTape tape;
    GradTape::Scope scope(tape);
    Tensor loss = f();
    tape.Backward(loss);
    for (auto& p : params) {
      if (p.tensor.has_grad()) {
        analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
      } else {
        analytic.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
      }
    }
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    ParamGradReport pr;
    pr.name = p.name;
    pr.numel = p.tensor.numel();
    auto values = p.tensor.mutable_data();
    for (std::int64_t i = 0; i < pr.numel; ++i) {
      double saved = values[i];
      values[i] = saved + options.step;
      double up = f().item();
      values[i] = saved - options.step;
      double down = f().item();
      values[i] = saved;
      double numeric = (up - down) / (2.0 * options.step);
      double a = analytic[pi][i];
      double abs_err = std::abs(a - numeric);
      double rel = abs_err / std::max({std::abs(a), std::abs(numeric), options.floor});
      if (rel > pr.max_rel_error) {
        pr.max_rel_error = rel;
        pr.worst_index = i;
      }
      pr.max_abs_error = std::max(pr.max_abs_error, abs_err);
    }
    pr.pass = pr.max_rel_error < options.tol;
    report.pass = report.pass && pr.pass;
    report.max_rel_error = std::max(report.max_rel_error, pr.max_rel_error);
    report.params.push_back(std::move(pr));
  }
  return report;
}

}  // namespace sfc
