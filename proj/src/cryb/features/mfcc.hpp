// Copyright 2026 The cryb Authors.
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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cryb/audio/audio.hpp"

namespace cryb::features {

inline constexpr int kNumBands = 40;
inline constexpr int kNumCoeffs = 40;
inline constexpr int kNumFrames = 101;
inline constexpr int kFrameLength = 240;  // 30 ms at 8 kHz
inline constexpr int kHop = 80;           // 10 ms at 8 kHz
inline constexpr int kPad = 120;          // reflect padding on each side
inline constexpr int kFftSize = 256;
inline constexpr int kNumBins = kFftSize / 2 + 1;
inline constexpr double kLowHz = 20.0;
inline constexpr double kHighHz = 4000.0;
inline constexpr double kLogFloor = 1e-10;
inline constexpr int kClipSamples = 8000;

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// 40 triangular filters over the 129 bins of a 256-point FFT at 8 kHz.
/// Filter i rises over [edge i, edge i+1] and falls over [edge i+1, edge i+2];
/// each row is scaled so its largest sampled weight is 1.
struct MelFilterbank {
  std::vector<double> weights;  // kNumBands x kNumBins, row-major
  std::array<double, kNumBands + 2> band_edges{};

  double weight(int band, int bin) const { return weights[static_cast<std::size_t>(band) * kNumBins + bin]; }
  double center_hz(int band) const { return band_edges[static_cast<std::size_t>(band) + 1]; }
};

MelFilterbank build_mel_filterbank();
/// Built on first use and shared read-only afterwards.
const MelFilterbank& default_filterbank();

/// Coefficient-major 40 x 101 matrix: coeffs[c * 101 + t].
struct MfccMatrix {
  std::vector<float> coeffs = std::vector<float>(static_cast<std::size_t>(kNumCoeffs) * kNumFrames);

  float at(int coeff, int frame) const { return coeffs[static_cast<std::size_t>(coeff) * kNumFrames + frame]; }
  float& at(int coeff, int frame) { return coeffs[static_cast<std::size_t>(coeff) * kNumFrames + frame]; }
  bool operator==(const MfccMatrix&) const = default;
};

/// Frame-major 101 x 40 log mel energies: values[t * 40 + band].
struct LogMelEnergies {
  std::vector<double> values = std::vector<double>(static_cast<std::size_t>(kNumFrames) * kNumBands);

  double at(int frame, int band) const { return values[static_cast<std::size_t>(frame) * kNumBands + band]; }
  double& at(int frame, int band) { return values[static_cast<std::size_t>(frame) * kNumBands + band]; }
};

/// Reflect-pads by 120 samples per side and cuts 101 Hann-windowed frames of
/// 240 samples at hop 80. Frame-major output, 101 x 240.
std::vector<double> frame_signal(const audio::AudioClip& clip);

/// Periodic Hann window of length 240.
std::span<const double, kFrameLength> analysis_window();

LogMelEnergies log_mel_energies(const audio::AudioClip& clip, const MelFilterbank& bank);

/// Replaces the log-energy of `band` by the silence floor log(1e-10) in every
/// frame. Throws BadBandIndex.
void ablate_log_energies(LogMelEnergies& energies, int band);

/// Orthonormal DCT-II across bands of each frame.
MfccMatrix cepstra(const LogMelEnergies& energies);

MfccMatrix mfcc(const audio::AudioClip& clip, const MelFilterbank& bank = default_filterbank());

/// mfcc() with one mel band forced to the silence floor before the DCT.
MfccMatrix ablate_band(const audio::AudioClip& clip, int band, const MelFilterbank& bank = default_filterbank());

/// Orthonormal DCT-II of a length-40 vector, and its inverse.
void dct_ii(std::span<const double, kNumBands> in, std::span<double, kNumBands> out);
void inverse_dct_ii(std::span<const double, kNumBands> in, std::span<double, kNumBands> out);

// On-disk cache: "MFCC0001", uint32 rows, uint32 cols, rows*cols float32,
// all little-endian and row-major.
void write_mfcc_cache(const std::filesystem::path& path, const MfccMatrix& m);
MfccMatrix read_mfcc_cache(const std::filesystem::path& path);

/// mfcc() memoized on disk under $CRYB_CACHE when that variable is set,
/// keyed by a hash of the samples. Plain mfcc() otherwise.
MfccMatrix cached_mfcc(const audio::AudioClip& clip);

}  // namespace cryb::features
