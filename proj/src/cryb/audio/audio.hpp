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

#include <cstddef>
#include <filesystem>
#include <vector>

namespace cryb::audio {

inline constexpr int kPipelineRate = 8000;
inline constexpr double kClipSeconds = 1.0;

/// Mono waveform. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kPipelineRate;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
};

bool is_supported_rate(int rate) noexcept;

/// Reads a RIFF/WAVE file holding 16-bit PCM, 1 or 2 channels. Samples are
/// mapped to [-1, 1) by division by 32768; stereo is averaged to mono.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are scaled by 32768, rounded, and
/// saturated; anything read by read_wav round-trips exactly.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Downsamples with a Hann-windowed sinc (64 taps, cutoff 0.45 * target_rate)
/// evaluated at each output instant. Throws UpsamplingRequested when
/// target_rate exceeds the clip rate.
AudioClip resample(const AudioClip& clip, int target_rate);

/// Zero-pads or truncates at the end to round(duration_s * rate) samples.
AudioClip fit_length(const AudioClip& clip, double duration_s);

/// resample to 8 kHz, then fit to 1.0 s: the canonical network input.
AudioClip to_pipeline_clip(const AudioClip& clip);

double mean_power(const AudioClip& clip) noexcept;

}  // namespace cryb::audio
