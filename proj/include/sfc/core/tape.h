// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfc/core/tensor.h"

namespace sfc {

// Handed to a reverse rule while the tape is being replayed.
class BackwardContext {
 public:
  BackwardContext(std::span<const double> out_grad,
                  std::span<const std::shared_ptr<detail::Node>> inputs)
      : out_grad_(out_grad), inputs_(inputs) {}

  std::span<const double> out_grad() const { return out_grad_; }
  // Gradient buffer of input `i`, or an empty span when that input does not
  // take part in differentiation. Rules accumulate (+=) into it.
  std::span<double> input_grad(std::size_t i) const;
  bool needs(std::size_t i) const { return inputs_[i]->requires_grad; }

 private:
  std::span<const double> out_grad_;
  std::span<const std::shared_ptr<detail::Node>> inputs_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Ordered record of primitive applications. While a GradTape::Scope is
// alive on a thread, every primitive whose inputs require gradients appends
// an entry; Backward() replays the entries in reverse.
class GradTape {
 public:
  struct Entry {
    std::string op;
    std::vector<std::shared_ptr<detail::Node>> inputs;
    std::shared_ptr<detail::Node> output;
    BackwardFn backward;
  };

  class Scope {
   public:
    explicit Scope(GradTape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    GradTape* previous_;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  // Active tape on this thread, or nullptr.
  static GradTape* Current();

  // True when an op over `inputs` must be recorded.
  static bool ShouldRecord(std::initializer_list<const Tensor*> inputs);
  static bool ShouldRecord(std::span<const Tensor> inputs);

  // Marks `output` as requiring grad and appends the entry.
  void Record(const char* op, std::vector<Tensor> inputs, Tensor& output,
              BackwardFn backward);

  // Reverse accumulation from a scalar. Clears every gradient reachable
  // through the tape first, so replaying twice gives identical results.
  void Backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void Clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

// Records `backward` for `output` on the current tape when any input needs
// it. Custom ops outside numeric-core use this to register reverse rules.
void MaybeRecord(const char* op, std::vector<Tensor> inputs, Tensor& output,
                 BackwardFn backward);

}  // namespace sfc
