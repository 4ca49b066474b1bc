// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/serialize.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace sfc {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kMaxRank = 16;

static_assert(std::endian::native == std::endian::little,
              "SFCT I/O assumes a little-endian host");

template <typename T>
void Put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("SFCT: truncated stream");
  return v;
}

}  // namespace

void WriteTensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  Put<std::uint8_t>(out, kVersion);
  Put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype()));
  Put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) Put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  if (t.dtype() == DType::kF32) {
    for (double v : t.data()) Put<float>(out, static_cast<float>(v));
  } else {
    for (double v : t.data()) Put<double>(out, v);
  }
  if (!out) throw FormatError("SFCT: write failed");
}

Tensor ReadTensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("SFCT: bad magic");
  }
  auto version = Get<std::uint8_t>(in);
  if (version != kVersion) throw FormatError(fmt::format("SFCT: unsupported version {}", version));
  auto dtype_code = Get<std::uint8_t>(in);
  if (dtype_code > 1) throw FormatError(fmt::format("SFCT: unknown dtype {}", dtype_code));
  auto rank = Get<std::uint8_t>(in);
  if (rank > kMaxRank) throw FormatError(fmt::format("SFCT: rank {} too large", rank));
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<std::int64_t>(Get<std::uint64_t>(in));
  DType dtype = static_cast<DType>(dtype_code);
  std::vector<double> values(static_cast<std::size_t>(NumElements(shape)));
  for (auto& v : values) {
    v = dtype == DType::kF32 ? static_cast<double>(Get<float>(in)) : Get<double>(in);
  }
  return Tensor(std::move(shape), std::move(values), dtype);
}

void SaveTensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  WriteTensor(out, t);
}

Tensor LoadTensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);
  return ReadTensor(in);
}

}  // namespace sfc
