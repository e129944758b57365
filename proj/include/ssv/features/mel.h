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

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "ssv/features/wav.h"
#include "ssv/nncore/tensor.h"

namespace ssv::feat {

inline constexpr std::size_t kMelBins = 80;

struct MelParams {
  std::size_t num_bins = kMelBins;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  double f_min = 20.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
  double log_floor = 1e-10;
  // Subtract each bin's mean over time.
  bool mean_normalize = false;
};

// Log-mel features of one utterance; values is bins x frames.
struct MelSpectrogram {
  std::string utterance_id;
  nn::Tensor values;

  std::size_t bins() const { return values.dim(0); }
  std::size_t frames() const { return values.dim(1); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

std::size_t window_samples(const MelParams& params, int sample_rate);
std::size_t hop_samples(const MelParams& params, int sample_rate);
std::size_t fft_size(std::size_t window);

// 1 + floor((len - win) / hop); 0 when len < win.
std::size_t frame_count(std::size_t num_samples, std::size_t window,
                        std::size_t hop);

// Triangular filters on the HTK mel scale, equally spaced between f_min and
// f_max, peak weight 1. Shape bins x (n_fft / 2 + 1).
nn::Tensor mel_filterbank(const MelParams& params, int sample_rate);

// Hann-windowed STFT power spectrum, mel filterbank, natural log with a
// floor. Throws DegenerateInputError for audio shorter than one window.
MelSpectrogram mel_spectrogram(const WavAudio& audio, const MelParams& params,
                               std::string utterance_id = {});

// Repeats the frames cyclically until there are at least `min_frames`.
nn::Tensor wrap_pad(const nn::Tensor& spec, std::size_t min_frames);

struct CropConfig {
  std::size_t window = 350;
  std::uint64_t seed = 0;
};

// A contiguous `window`-frame slice at a uniformly random offset; inputs
// shorter than the window are wrap-padded to a whole number of repeats first.
nn::Tensor random_crop(const nn::Tensor& spec, std::size_t window,
                       std::mt19937_64& rng);

// Feature cache: "MSPC", u32 bins, u32 frames, then bins x frames float32,
// all little-endian.
std::vector<char> encode_feature_file(const nn::Tensor& spec);
nn::Tensor decode_feature_file(std::span<const char> bytes);
void write_feature_file(const std::string& path, const nn::Tensor& spec);
nn::Tensor read_feature_file(const std::string& path);

}  // namespace ssv::feat
