// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "sfc/core/tensor.h"

namespace sfc {

// SFCT container: "SFCT", u8 version (1), u8 dtype (0 f32, 1 f64), u8 rank,
// rank x u64 dims, then raw values. All little-endian.
void WriteTensor(std::ostream& out, const Tensor& t);
Tensor ReadTensor(std::istream& in);

void SaveTensor(const std::string& path, const Tensor& t);
Tensor LoadTensor(const std::string& path);

}  // namespace sfc
