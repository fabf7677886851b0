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

#include "cryb/features/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <string>

#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"
#include "cryb/features/fft.hpp"

namespace cryb::features {
namespace {

constexpr double kSampleRate = audio::kPipelineRate;
constexpr char kCacheMagic[] = "MFCC0001";

void check_clip(const audio::AudioClip& clip) {
  if (clip.sample_rate != audio::kPipelineRate || clip.samples.size() != static_cast<std::size_t>(kClipSamples))
    fail(Errc::WrongLength, "expected 8000 samples at 8000 Hz, got " + std::to_string(clip.samples.size()) +
                                " at " + std::to_string(clip.sample_rate) + " Hz");
}

struct DctTable {
  std::array<double, kNumBands * kNumBands> basis{};  // basis[k * N + n]

  DctTable() {
    const double n_bands = kNumBands;
    for (int k = 0; k < kNumBands; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n_bands) : std::sqrt(2.0 / n_bands);
      for (int n = 0; n < kNumBands; ++n)
        basis[static_cast<std::size_t>(k) * kNumBands + n] =
            scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_bands));
    }
  }
};

const DctTable& dct_table() {
  static const DctTable table;
  return table;
}

const std::array<double, kFrameLength>& hann() {
  static const auto window = [] {
    std::array<double, kFrameLength> w{};
    for (int n = 0; n < kFrameLength; ++n)
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFrameLength);
    return w;
  }();
  return window;
}

std::uint64_t hash_samples(const std::vector<float>& samples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(samples.data());
  for (std::size_t i = 0; i < samples.size() * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank() {
  MelFilterbank bank;
  const double lo = hz_to_mel(kLowHz);
  const double hi = hz_to_mel(kHighHz);
  const int n_edges = kNumBands + 2;
  for (int i = 0; i < n_edges; ++i)
    bank.band_edges[i] = mel_to_hz(lo + (hi - lo) * i / (n_edges - 1));
  bank.band_edges.front() = kLowHz;
  bank.band_edges.back() = kHighHz;

  bank.weights.assign(static_cast<std::size_t>(kNumBands) * kNumBins, 0.0);
  const double bin_hz = kSampleRate / kFftSize;
  for (int b = 0; b < kNumBands; ++b) {
    const double left = bank.band_edges[b], center = bank.band_edges[b + 1], right = bank.band_edges[b + 2];
    double peak = 0.0;
    for (int k = 0; k < kNumBins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > left && f <= center)
        w = (f - left) / (center - left);
      else if (f > center && f < right)
        w = (right - f) / (right - center);
      bank.weights[static_cast<std::size_t>(b) * kNumBins + k] = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) fail(Errc::BadConfig, "mel filter " + std::to_string(b) + " covers no FFT bin");
    for (int k = 0; k < kNumBins; ++k) bank.weights[static_cast<std::size_t>(b) * kNumBins + k] /= peak;
  }
  return bank;
}

const MelFilterbank& default_filterbank() {
  static const MelFilterbank bank = build_mel_filterbank();
  return bank;
}

std::span<const double, kFrameLength> analysis_window() { return hann(); }

std::vector<double> frame_signal(const audio::AudioClip& clip) {
  check_clip(clip);
  const long n = kClipSamples;
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * kPad));
  for (long j = 0; j < static_cast<long>(padded.size()); ++j) {
    long src = j - kPad;
    if (src < 0) src = -src;
    if (src >= n) src = 2 * (n - 1) - src;
    padded[static_cast<std::size_t>(j)] = clip.samples[static_cast<std::size_t>(src)];
  }
  const auto& w = hann();
  std::vector<double> frames(static_cast<std::size_t>(kNumFrames) * kFrameLength);
  for (int t = 0; t < kNumFrames; ++t)
    for (int i = 0; i < kFrameLength; ++i)
      frames[static_cast<std::size_t>(t) * kFrameLength + i] = padded[static_cast<std::size_t>(t) * kHop + i] * w[i];
  return frames;
}

LogMelEnergies log_mel_energies(const audio::AudioClip& clip, const MelFilterbank& bank) {
  static const Fft fft(kFftSize);
  const std::vector<double> frames = frame_signal(clip);
  LogMelEnergies out;
  std::array<std::complex<double>, kFftSize> buf;
  std::array<double, kNumBins> power;
  for (int t = 0; t < kNumFrames; ++t) {
    buf.fill({});
    for (int i = 0; i < kFrameLength; ++i) buf[i] = frames[static_cast<std::size_t>(t) * kFrameLength + i];
    fft.forward(buf);
    for (int k = 0; k < kNumBins; ++k) power[k] = std::norm(buf[k]);
    for (int b = 0; b < kNumBands; ++b) {
      double e = 0.0;
      const double* row = bank.weights.data() + static_cast<std::size_t>(b) * kNumBins;
      for (int k = 0; k < kNumBins; ++k) e += row[k] * power[k];
      out.at(t, b) = std::log(e + kLogFloor);
    }
  }
  return out;
}

void ablate_log_energies(LogMelEnergies& energies, int band) {
  if (band < 0 || band >= kNumBands) fail(Errc::BadBandIndex, "band " + std::to_string(band) + " outside 0..39");
  const double floor = std::log(kLogFloor);
  for (int t = 0; t < kNumFrames; ++t) energies.at(t, band) = floor;
}

void dct_ii(std::span<const double, kNumBands> in, std::span<double, kNumBands> out) {
  const auto& basis = dct_table().basis;
  for (int k = 0; k < kNumBands; ++k) {
    double acc = 0.0;
    for (int n = 0; n < kNumBands; ++n) acc += basis[static_cast<std::size_t>(k) * kNumBands + n] * in[n];
    out[k] = acc;
  }
}

void inverse_dct_ii(std::span<const double, kNumBands> in, std::span<double, kNumBands> out) {
  const auto& basis = dct_table().basis;
  for (int n = 0; n < kNumBands; ++n) {
    double acc = 0.0;
    for (int k = 0; k < kNumBands; ++k) acc += basis[static_cast<std::size_t>(k) * kNumBands + n] * in[k];
    out[n] = acc;
  }
}

MfccMatrix cepstra(const LogMelEnergies& energies) {
  MfccMatrix m;
  std::array<double, kNumBands> coeffs;
  for (int t = 0; t < kNumFrames; ++t) {
    dct_ii(std::span<const double, kNumBands>(energies.values.data() + static_cast<std::size_t>(t) * kNumBands,
                                              kNumBands),
           coeffs);
    for (int c = 0; c < kNumCoeffs; ++c) m.at(c, t) = static_cast<float>(coeffs[c]);
  }
  return m;
}

MfccMatrix mfcc(const audio::AudioClip& clip, const MelFilterbank& bank) {
  return cepstra(log_mel_energies(clip, bank));
}

MfccMatrix ablate_band(const audio::AudioClip& clip, int band, const MelFilterbank& bank) {
  if (band < 0 || band >= kNumBands) fail(Errc::BadBandIndex, "band " + std::to_string(band) + " outside 0..39");
  LogMelEnergies e = log_mel_energies(clip, bank);
  ablate_log_energies(e, band);
  return cepstra(e);
}

void write_mfcc_cache(const std::filesystem::path& path, const MfccMatrix& m) {
  std::string bytes(kCacheMagic, 8);
  const std::uint32_t dims[2] = {kNumCoeffs, kNumFrames};
  bytes.append(reinterpret_cast<const char*>(dims), sizeof dims);
  bytes.append(reinterpret_cast<const char*>(m.coeffs.data()), m.coeffs.size() * sizeof(float));
  write_file_bytes(path, bytes);
}

MfccMatrix read_mfcc_cache(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 16 || bytes.compare(0, 8, kCacheMagic) != 0)
    fail(Errc::CorruptCheckpoint, "bad MFCC cache magic in " + path.string());
  std::uint32_t dims[2];
  std::memcpy(dims, bytes.data() + 8, sizeof dims);
  if (dims[0] != kNumCoeffs || dims[1] != kNumFrames)
    fail(Errc::ShapeMismatch, "MFCC cache " + path.string() + " is not 40x101");
  MfccMatrix m;
  if (bytes.size() != 16 + m.coeffs.size() * sizeof(float))
    fail(Errc::CorruptCheckpoint, "MFCC cache " + path.string() + " has wrong payload size");
  std::memcpy(m.coeffs.data(), bytes.data() + 16, m.coeffs.size() * sizeof(float));
  return m;
}

MfccMatrix cached_mfcc(const audio::AudioClip& clip) {
  const char* dir = std::getenv("CRYB_CACHE");
  if (dir == nullptr || *dir == '\0') return mfcc(clip);
  check_clip(clip);
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.mfcc", static_cast<unsigned long long>(hash_samples(clip.samples)));
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  if (std::filesystem::exists(path)) return read_mfcc_cache(path);
  MfccMatrix m = mfcc(clip);
  write_mfcc_cache(path, m);
  return m;
}

}  // namespace cryb::features
