// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/tape.h"

#include <algorithm>

namespace sfc {
namespace {

thread_local GradTape* g_current_tape = nullptr;

}  // namespace

std::span<double> BackwardContext::input_grad(std::size_t i) const {
  auto& node = inputs_[i];
  if (!node->requires_grad) return {};
  if (node->grad.size() != node->data.size()) {
    node->grad.assign(node->data.size(), 0.0);
  }
  return node->grad;
}

GradTape::Scope::Scope(GradTape& tape) : previous_(g_current_tape) {
  g_current_tape = &tape;
}

GradTape::Scope::~Scope() { g_current_tape = previous_; }

GradTape* GradTape::Current() { return g_current_tape; }

bool GradTape::ShouldRecord(std::initializer_list<const Tensor*> inputs) {
  if (g_current_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t && t->requires_grad(); });
}

bool GradTape::ShouldRecord(std::span<const Tensor> inputs) {
  if (g_current_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.requires_grad(); });
}

void GradTape::Record(const char* op, std::vector<Tensor> inputs,
                      Tensor& output, BackwardFn backward) {
  Entry entry;
  entry.op = op;
  entry.inputs.reserve(inputs.size());
  for (auto& t : inputs) entry.inputs.push_back(t.node());
  output.set_requires_grad(true);
  entry.output = output.node();
  entry.backward = std::move(backward);
  entries_.push_back(std::move(entry));
}

void GradTape::Backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("Backward: loss must be a scalar, got " +
                     ShapeToString(loss.shape()));
  }
  for (auto& e : entries_) {
    e.output->grad.clear();
    for (auto& in : e.inputs) in->grad.clear();
  }
  if (!loss.requires_grad()) return;
  loss.node()->grad.assign(1, 1.0);

  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto& out = it->output;
    if (out->grad.empty()) continue;  // not on a path to the loss
    BackwardContext ctx(out->grad, it->inputs);
    it->backward(ctx);
  }
}

void MaybeRecord(const char* op, std::vector<Tensor> inputs, Tensor& output,
                 BackwardFn backward) {
  auto* tape = GradTape::Current();
  if (tape == nullptr) return;
  if (!GradTape::ShouldRecord(std::span<const Tensor>(inputs))) return;
  tape->Record(op, std::move(inputs), output, std::move(backward));
}

}  // namespace sfc
