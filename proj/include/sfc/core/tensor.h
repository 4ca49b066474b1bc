// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfc/core/error.h"

namespace sfc {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

using Shape = std::vector<std::int64_t>;

std::int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);
const char* DTypeName(DType dtype);

namespace detail {

struct Node {
  Shape shape;
  DType dtype = DType::kF64;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass touches the node
};

}  // namespace detail

// Dense row-major tensor. Copies share storage (like a handle); use Clone()
// for a deep copy. Values are always held in double precision; an f32
// tensor has every value rounded to float after each primitive op.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, DType dtype = DType::kF64);
  Tensor(Shape shape, std::vector<double> values, DType dtype = DType::kF64);

  static Tensor Zeros(Shape shape, DType dtype = DType::kF64);
  static Tensor Full(Shape shape, double value, DType dtype = DType::kF64);
  static Tensor Scalar(double value, DType dtype = DType::kF64);

  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  // Negative axes count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t numel() const {
    return static_cast<std::int64_t>(node_->data.size());
  }
  DType dtype() const { return node_->dtype; }

  std::span<const double> data() const { return node_->data; }
  // Direct write access. Writing to a tensor that a recorded op has consumed
  // invalidates that op's reverse rule; only touch leaves outside a tape.
  std::span<double> mutable_data() { return node_->data; }
  std::vector<double> ToVector() const { return node_->data; }

  double item() const;
  double at(std::initializer_list<std::int64_t> index) const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void ZeroGrad() { node_->grad.clear(); }

  // New leaf with copied values, no gradient tracking.
  Tensor Clone() const;
  // Same values, cast to `dtype` (rounding when narrowing to f32).
  Tensor To(DType dtype) const;

  bool SameStorage(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Rounds to float when dtype is f32 and raises NumericFault on NaN/Inf.
void FinalizeOutput(Tensor& out, const char* op);

}  // namespace sfc
