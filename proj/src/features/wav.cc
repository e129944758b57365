// Copyright 2026 The SSV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssv/features/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ssv/error.h"

namespace ssv::feat {
namespace {

std::uint32_t le32(std::span<const char> b, std::size_t at) {
  if (at + 4 > b.size()) throw ParseError("truncated WAV header", at);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  }
  return v;
}

std::uint16_t le16(std::span<const char> b, std::size_t at) {
  if (at + 2 > b.size()) throw ParseError("truncated WAV header", at);
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(b[at]) |
      (static_cast<unsigned>(static_cast<unsigned char>(b[at + 1])) << 8));
}

bool tag_is(std::span<const char> b, std::size_t at, const char* tag) {
  return at + 4 <= b.size() && std::memcmp(b.data() + at, tag, 4) == 0;
}

void append_le(std::vector<char>& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavAudio parse_wav(std::span<const char> bytes) {
  if (!tag_is(bytes, 0, "RIFF")) throw ParseError("missing RIFF tag", 0);
  if (!tag_is(bytes, 8, "WAVE")) throw ParseError("missing WAVE tag", 8);

  std::size_t at = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t size = le32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (tag_is(bytes, at, "fmt ")) {
      if (size < 16 || body + size > bytes.size()) {
        throw ParseError("truncated fmt chunk", at);
      }
      std::uint16_t format = le16(bytes, body);
      if (format == kFormatExtensible && size >= 26) {
        format = le16(bytes, body + 24);
      }
      if (format != kFormatPcm) {
        throw ParseError("unsupported WAV encoding " + std::to_string(format) +
                             " (only PCM)",
                         body);
      }
      channels = le16(bytes, body + 2);
      rate = le32(bytes, body + 4);
      bits = le16(bytes, body + 14);
      if (channels == 0) throw ParseError("WAV has zero channels", body + 2);
      if (rate == 0) throw ParseError("WAV sample rate is zero", body + 4);
      if (bits != 16) {
        throw ParseError("unsupported bit depth " + std::to_string(bits) +
                             " (only 16-bit PCM)",
                         body + 14);
      }
      have_fmt = true;
    } else if (tag_is(bytes, at, "data")) {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk", at);
      if (body + size > bytes.size()) {
        throw ParseError("data chunk declares " + std::to_string(size) +
                             " bytes, file has " +
                             std::to_string(bytes.size() - body),
                         at + 4);
      }
      const std::size_t frame_bytes = 2u * channels;
      if (size % frame_bytes != 0) {
        throw ParseError("data chunk is not a whole number of sample frames",
                         at + 4);
      }
      WavAudio audio;
      audio.sample_rate = static_cast<int>(rate);
      const std::size_t frames = size / frame_bytes;
      audio.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const auto raw = static_cast<std::int16_t>(
              le16(bytes, body + f * frame_bytes + 2 * c));
          sum += static_cast<double>(raw) / 32768.0;
        }
        audio.samples[f] = sum / channels;
      }
      return audio;
    }
    at = body + size + (size & 1u);
  }
  throw ParseError(have_fmt ? "no data chunk" : "no fmt chunk", at);
}

WavAudio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV", path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
}

std::vector<char> encode_wav(const WavAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  append_le(out, 36 + data_bytes, 4);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  append_le(out, 16, 4);
  append_le(out, kFormatPcm, 2);
  append_le(out, 1, 2);
  append_le(out, static_cast<std::uint32_t>(audio.sample_rate), 4);
  append_le(out, static_cast<std::uint32_t>(audio.sample_rate) * 2, 4);
  append_le(out, 2, 2);
  append_le(out, 16, 2);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  append_le(out, data_bytes, 4);
  for (double s : audio.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
    append_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)), 2);
  }
  return out;
}

void write_wav(const std::string& path, const WavAudio& audio) {
  const auto bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write WAV", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ssv::feat
