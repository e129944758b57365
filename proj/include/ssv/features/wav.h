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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ssv::feat {

struct WavAudio {
  int sample_rate = 16000;
  std::vector<double> samples;  // mono, in [-1, 1]
};

// RIFF/WAVE with 16-bit PCM. Multi-channel input is down-mixed by averaging.
// Samples are scaled by 1/32768. Throws ParseError with the byte offset of
// the offending field.
WavAudio parse_wav(std::span<const char> bytes);
WavAudio read_wav(const std::string& path);

// 16-bit PCM mono; samples are clipped to [-1, 1] and rounded.
std::vector<char> encode_wav(const WavAudio& audio);
void write_wav(const std::string& path, const WavAudio& audio);

}  // namespace ssv::feat
