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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cryb/audio/audio.hpp"
#include "cryb/common/error.hpp"

namespace cryb::audio {
namespace {

constexpr int kTaps = 64;
constexpr double kCutoffFraction = 0.45;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  require(target_rate > 0, Errc::InvalidArgument, "target rate must be positive");
  if (target_rate > clip.sample_rate)
    fail(Errc::UpsamplingRequested,
         std::to_string(clip.sample_rate) + " Hz -> " + std::to_string(target_rate) + " Hz");
  if (target_rate == clip.sample_rate) return clip;

  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  // Cutoff in cycles per input sample.
  const double fc = kCutoffFraction * target_rate / clip.sample_rate;
  const double half = kTaps / 2.0;
  const auto n_in = static_cast<long>(clip.samples.size());
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * target_rate / clip.sample_rate));

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const double t = static_cast<double>(m) * step;
    const long first = static_cast<long>(std::floor(t)) - kTaps / 2 + 1;
    double acc = 0.0, norm = 0.0;
    for (long k = first; k < first + kTaps; ++k) {
      const double d = t - static_cast<double>(k);
      if (std::abs(d) >= half) continue;
      const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * d / half));
      const double h = 2.0 * fc * sinc(2.0 * fc * d) * window;
      norm += h;
      if (k >= 0 && k < n_in) acc += h * clip.samples[static_cast<std::size_t>(k)];
    }
    out.samples[m] = static_cast<float>(acc / norm);
  }
  return out;
}

AudioClip fit_length(const AudioClip& clip, double duration_s) {
  require(duration_s >= 0.0, Errc::InvalidArgument, "duration must be nonnegative");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(n, 0.0f);
  const std::size_t keep = std::min(n, clip.samples.size());
  std::copy_n(clip.samples.begin(), keep, out.samples.begin());
  return out;
}

AudioClip to_pipeline_clip(const AudioClip& clip) {
  return fit_length(resample(clip, kPipelineRate), kClipSeconds);
}

double mean_power(const AudioClip& clip) noexcept {
  if (clip.samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : clip.samples) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(clip.samples.size());
}

}  // namespace cryb::audio
