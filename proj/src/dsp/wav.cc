// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/dsp/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace sfc::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t U32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t U16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void PutU32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void PutU16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("wav: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), {});
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: not a RIFF/WAVE file: " + path);
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* chunk = buf.data() + pos;
    std::uint32_t size = U32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + size > buf.size()) size = static_cast<std::uint32_t>(buf.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
      format = U16(buf.data() + body);
      channels = U16(buf.data() + body + 2);
      rate = U32(buf.data() + body + 4);
      bits = U16(buf.data() + body + 14);
      if (format == kFormatExtensible && size >= 26) format = U16(buf.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = buf.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!data || channels == 0) throw FormatError("wav: missing fmt or data chunk: " + path);
  bool pcm16 = format == kFormatPcm && bits == 16;
  bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw FormatError(fmt::format("wav: unsupported format {} with {} bits", format, bits));
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      if (pcm16) {
        w.channels[c][i] = static_cast<std::int16_t>(U16(p)) / 32768.0;
      } else {
        std::uint32_t raw = U32(p);
        float v;
        std::memcpy(&v, &raw, 4);
        w.channels[c][i] = v;
      }
    }
  }
  w.Validate();
  return w;
}

void WriteWav(const std::string& path, const Waveform& w, WavFormat format) {
  w.Validate();
  const bool pcm16 = format == WavFormat::kPcm16;
  const std::uint16_t channels = static_cast<std::uint16_t>(w.num_channels());
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.length()) * block;
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  PutU32(out, 36 + data_size);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, pcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, channels);
  PutU32(out, static_cast<std::uint32_t>(w.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(w.sample_rate) * block);
  PutU16(out, static_cast<std::uint16_t>(block));
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_size);
  for (std::int64_t i = 0; i < w.length(); ++i) {
    for (const auto& c : w.channels) {
      if (pcm16) {
        long v = std::clamp(std::lround(c[i] * 32768.0), -32768L, 32767L);
        PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
      } else {
        float v = static_cast<float>(c[i]);
        std::uint32_t raw;
        std::memcpy(&raw, &v, 4);
        PutU32(out, raw);
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("wav: cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace sfc::dsp
