// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sfc/core/tensor.h"

// Differentiable primitives. Every function here registers an analytic
// reverse rule on the active GradTape when an input requires gradients.
namespace sfc::ops {

// Elementwise binary ops with numpy-style broadcasting.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);

Tensor Scale(const Tensor& x, double c);
Tensor AddScalar(const Tensor& x, double c);
Tensor Neg(const Tensor& x);
Tensor Square(const Tensor& x);
Tensor Tanh(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Softplus(const Tensor& x);
Tensor Silu(const Tensor& x);
Tensor Exp(const Tensor& x);
Tensor Log(const Tensor& x);

// Sum of all elements (scalar result).
Tensor Sum(const Tensor& x);
Tensor Sum(const Tensor& x, int axis, bool keepdim = false);
Tensor Mean(const Tensor& x, int axis, bool keepdim = false);

// (..., m, k) x (..., k, n) -> (..., m, n). Leading batch dims broadcast.
Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);

// Softmax along `axis`.
Tensor Softmax(const Tensor& x, int axis);
// Softmax along the last axis where `allowed` (shape (..., Lq, Lk) matching
// the trailing dims of x; leading dims broadcast) selects the support. Masked
// entries get exactly zero weight; every row must allow at least one entry.
Tensor MaskedSoftmax(const Tensor& x, const std::vector<std::uint8_t>& allowed);

Tensor Concat(const std::vector<Tensor>& parts, int axis);
Tensor Permute(const Tensor& x, const std::vector<int>& perm);
Tensor Reshape(const Tensor& x, Shape shape);
Tensor Slice(const Tensor& x, int axis, std::int64_t start, std::int64_t end);
// out[..., i, ...] = x[..., indices[i], ...]
Tensor IndexSelect(const Tensor& x, int axis,
                   const std::vector<std::int64_t>& indices);
// out has extent `size` along `axis`; out[..., indices[i], ...] += x[..., i, ...]
Tensor IndexAdd(const Tensor& x, int axis,
                const std::vector<std::int64_t>& indices, std::int64_t size);

// x: (C_in, H, W); w: (C_out, C_in, kh, kw); bias: (C_out) or empty.
// Stride 1 with zero "same" padding so (H, W) is preserved (odd kernels).
Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor* bias);
// x: (C_in, H, W); w: (C_in, C_out, kh, kw). Stride 1 transpose convolution
// with padding (k-1)/2 so the output keeps (H, W).
Tensor ConvTranspose2d(const Tensor& x, const Tensor& w, const Tensor* bias);
// x: (B, C_in, L); w: (C_out, C_in / groups, k); zero padding on both ends.
// Output length L + pad_left + pad_right - k + 1.
Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor* bias,
              std::int64_t pad_left, std::int64_t pad_right, int groups = 1);

// x: (..., in); w: (out, in); bias: (out) or null.
Tensor Linear(const Tensor& x, const Tensor& w, const Tensor* bias);
// Splits `axis` into halves (a, b) and returns a * sigmoid(b).
Tensor Glu(const Tensor& x, int axis);
// x * g / sqrt(mean(x^2) + eps) over the last axis; g has that extent.
Tensor RmsNorm(const Tensor& x, const Tensor& g, double eps = 1e-8);

}  // namespace sfc::ops
