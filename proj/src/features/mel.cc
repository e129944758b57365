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

#include "ssv/features/mel.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "ssv/error.h"

namespace ssv::feat {
namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t window_samples(const MelParams& params, int sample_rate) {
  return static_cast<std::size_t>(std::llround(params.window_ms * sample_rate / 1000.0));
}

std::size_t hop_samples(const MelParams& params, int sample_rate) {
  return static_cast<std::size_t>(std::llround(params.hop_ms * sample_rate / 1000.0));
}

std::size_t fft_size(std::size_t window) {
  std::size_t n = 1;
  while (n < window) n <<= 1;
  return n;
}

std::size_t frame_count(std::size_t num_samples, std::size_t window,
                        std::size_t hop) {
  if (num_samples < window) return 0;
  return 1 + (num_samples - window) / hop;
}

nn::Tensor mel_filterbank(const MelParams& params, int sample_rate) {
  const std::size_t n_fft = fft_size(window_samples(params, sample_rate));
  const std::size_t n_freq = n_fft / 2 + 1;
  const double f_max = params.f_max > 0.0 ? params.f_max : sample_rate / 2.0;
  if (params.num_bins == 0 || !(params.f_min >= 0.0 && params.f_min < f_max)) {
    throw ContractViolation("invalid mel filterbank parameters");
  }
  const double m_lo = hz_to_mel(params.f_min), m_hi = hz_to_mel(f_max);
  std::vector<double> edges(params.num_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) /
                                     static_cast<double>(params.num_bins + 1));
  }
  nn::Tensor fb({params.num_bins, n_freq});
  for (std::size_t m = 0; m < params.num_bins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_freq; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const WavAudio& audio, const MelParams& params,
                               std::string utterance_id) {
  const std::size_t win = window_samples(params, audio.sample_rate);
  const std::size_t hop = hop_samples(params, audio.sample_rate);
  if (win == 0 || hop == 0) throw ContractViolation("window and hop must be positive");
  const std::size_t frames = frame_count(audio.samples.size(), win, hop);
  if (frames == 0) {
    throw DegenerateInputError("audio has " + std::to_string(audio.samples.size()) +
                               " samples, shorter than one " +
                               std::to_string(win) + "-sample window");
  }
  const std::size_t n_fft = fft_size(win);
  const std::size_t n_freq = n_fft / 2 + 1;
  const nn::Tensor fb = mel_filterbank(params, audio.sample_rate);

  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(win - 1));
  }

  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(n_freq);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in, out, FFTW_ESTIMATE);
  }

  MelSpectrogram spec{std::move(utterance_id), nn::Tensor({params.num_bins, frames})};
  std::vector<double> power(n_freq);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = audio.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) in[i] = src[i] * hann[i];
    std::fill(in + win, in + n_fft, 0.0);
    fftw_execute(plan);
    for (std::size_t k = 0; k < n_freq; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    for (std::size_t m = 0; m < params.num_bins; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_freq; ++k) e += fb.at(m, k) * power[k];
      spec.values.at(m, t) = std::log(std::max(e, params.log_floor));
    }
  }

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);

  if (params.mean_normalize) {
    for (std::size_t m = 0; m < params.num_bins; ++m) {
      double mean = 0.0;
      for (std::size_t t = 0; t < frames; ++t) mean += spec.values.at(m, t);
      mean /= static_cast<double>(frames);
      for (std::size_t t = 0; t < frames; ++t) spec.values.at(m, t) -= mean;
    }
  }
  return spec;
}

nn::Tensor wrap_pad(const nn::Tensor& spec, std::size_t min_frames) {
  nn::require_rank(spec, 2, "wrap_pad input");
  const std::size_t bins = spec.dim(0), frames = spec.dim(1);
  if (frames >= min_frames) return spec;
  const std::size_t repeats = (min_frames + frames - 1) / frames;
  nn::Tensor out({bins, frames * repeats});
  for (std::size_t b = 0; b < bins; ++b) {
    for (std::size_t t = 0; t < frames * repeats; ++t) {
      out.at(b, t) = spec.at(b, t % frames);
    }
  }
  return out;
}

nn::Tensor random_crop(const nn::Tensor& spec, std::size_t window,
                       std::mt19937_64& rng) {
  if (window == 0) throw ContractViolation("crop window must be >= 1");
  const nn::Tensor padded = wrap_pad(spec, window);
  const std::size_t bins = padded.dim(0), frames = padded.dim(1);
  std::uniform_int_distribution<std::size_t> pick(0, frames - window);
  const std::size_t offset = pick(rng);
  nn::Tensor out({bins, window});
  for (std::size_t b = 0; b < bins; ++b) {
    std::copy_n(padded.data().begin() + b * frames + offset, window,
                out.data().begin() + b * window);
  }
  return out;
}

namespace {

constexpr char kFeatureMagic[4] = {'M', 'S', 'P', 'C'};

void put32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get32(std::span<const char> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::vector<char> encode_feature_file(const nn::Tensor& spec) {
  nn::require_rank(spec, 2, "feature file");
  std::vector<char> out(kFeatureMagic, kFeatureMagic + 4);
  put32(out, static_cast<std::uint32_t>(spec.dim(0)));
  put32(out, static_cast<std::uint32_t>(spec.dim(1)));
  out.reserve(out.size() + 4 * spec.size());
  for (double v : spec.data()) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put32(out, bits);
  }
  return out;
}

nn::Tensor decode_feature_file(std::span<const char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw ParseError("not an MSPC feature file", 0);
  }
  const std::uint32_t bins = get32(bytes, 4), frames = get32(bytes, 8);
  if (bins == 0 || frames == 0) throw ParseError("empty feature matrix", 4);
  const std::size_t n = static_cast<std::size_t>(bins) * frames;
  if (bytes.size() != 12 + 4 * n) {
    throw ParseError("feature payload size does not match header", 12);
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get32(bytes, 12 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    data[i] = f;
  }
  return nn::Tensor({bins, frames}, std::move(data));
}

void write_feature_file(const std::string& path, const nn::Tensor& spec) {
  const auto bytes = encode_feature_file(spec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write feature file", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

nn::Tensor read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("feature file missing", path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_feature_file(bytes);
}

}  // namespace ssv::feat
