// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/tensor.h"

#include <cmath>

#include <fmt/format.h>

namespace sfc {

std::int64_t NumElements(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  return fmt::format("({})", fmt::join(shape, ","));
}

const char* DTypeName(DType dtype) {
  return dtype == DType::kF32 ? "f32" : "f64";
}

Tensor::Tensor() : Tensor(Shape{}) {}

Tensor::Tensor(Shape shape, DType dtype)
    : node_(std::make_shared<detail::Node>()) {
  auto n = NumElements(shape);
  node_->shape = std::move(shape);
  node_->dtype = dtype;
  node_->data.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values, DType dtype)
    : node_(std::make_shared<detail::Node>()) {
  auto n = NumElements(shape);
  if (static_cast<std::int64_t>(values.size()) != n) {
    throw ShapeError(fmt::format("tensor: {} values do not fill shape {}",
                                 values.size(), ShapeToString(shape)));
  }
  node_->shape = std::move(shape);
  node_->dtype = dtype;
  node_->data = std::move(values);
  if (dtype == DType::kF32) {
    for (auto& v : node_->data) v = static_cast<float>(v);
  }
}

Tensor Tensor::Zeros(Shape shape, DType dtype) {
  return Tensor(std::move(shape), dtype);
}

Tensor Tensor::Full(Shape shape, double value, DType dtype) {
  Tensor t(std::move(shape), dtype);
  for (auto& v : t.node_->data) v = value;
  if (dtype == DType::kF32) {
    for (auto& v : t.node_->data) v = static_cast<float>(v);
  }
  return t;
}

Tensor Tensor::Scalar(double value, DType dtype) {
  return Full(Shape{}, value, dtype);
}

std::int64_t Tensor::dim(int axis) const {
  int r = rank();
  int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError(fmt::format("axis {} out of range for shape {}", axis,
                                 ShapeToString(shape())));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("at(): index rank does not match " + ShapeToString(shape()));
  }
  std::int64_t offset = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    auto extent = node_->shape[axis++];
    if (i < 0 || i >= extent) throw ShapeError("at(): index out of range");
    offset = offset * extent + i;
  }
  return node_->data[static_cast<std::size_t>(offset)];
}

Tensor& Tensor::set_requires_grad(bool value) {
  node_->requires_grad = value;
  return *this;
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.size() != node_->data.size()) {
    node_->grad.assign(node_->data.size(), 0.0);
  }
  return node_->grad;
}

Tensor Tensor::Clone() const {
  return Tensor(node_->shape, node_->data, node_->dtype);
}

Tensor Tensor::To(DType dtype) const {
  return Tensor(node_->shape, node_->data, dtype);
}

void FinalizeOutput(Tensor& out, const char* op) {
  auto values = out.mutable_data();
  if (out.dtype() == DType::kF32) {
    for (auto& v : values) v = static_cast<float>(v);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericFault(fmt::format("{}: non-finite value {} at flat index {} of {}",
                                     op, values[i], i, ShapeToString(out.shape())));
    }
  }
}

}  // namespace sfc
