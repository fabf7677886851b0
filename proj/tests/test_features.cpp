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
#include <cstdlib>
#include <vector>

#include "doctest.h"

#include "cryb/common/error.hpp"
#include "cryb/common/rng.hpp"
#include "cryb/features/fft.hpp"
#include "cryb/features/mfcc.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace cryb;
using namespace cryb::features;

namespace {

audio::AudioClip random_clip(std::uint64_t seed) {
  Rng rng(seed);
  audio::AudioClip c;
  c.samples.resize(kClipSamples);
  for (auto& s : c.samples) s = static_cast<float>(rng.uniform(-0.5, 0.5));
  return c;
}

audio::AudioClip tone(double hz, double amp = 0.5) {
  audio::AudioClip c;
  for (int i = 0; i < kClipSamples; ++i) c.samples.push_back(static_cast<float>(amp * std::sin(2 * oracle::kPi * hz * i / 8000.0)));
  return c;
}

double max_abs_diff(const MfccMatrix& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a.coeffs[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("fft matches a direct DFT") {
  Rng rng(1);
  std::vector<std::complex<double>> x(256);
  std::vector<double> re(256);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = re[i] = rng.normal();
  Fft(256).forward(x);
  const auto mag = oracle::dft_magnitude(re, 256, 256);
  for (std::size_t k = 0; k < 256; ++k) CHECK(std::abs(std::abs(x[k]) - mag[k]) < 1e-9);
}

TEST_CASE("mel scale endpoints") {
  CHECK(hz_to_mel(20.0) == doctest::Approx(31.75).epsilon(1e-3));
  CHECK(hz_to_mel(4000.0) == doctest::Approx(2146.1).epsilon(1e-4));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("mel filterbank geometry") {
  const auto& bank = default_filterbank();
  CHECK(bank.band_edges.size() == 42);
  CHECK(bank.band_edges.front() == doctest::Approx(20.0));
  CHECK(bank.band_edges.back() == doctest::Approx(4000.0));
  for (std::size_t i = 1; i < bank.band_edges.size(); ++i) CHECK(bank.band_edges[i] > bank.band_edges[i - 1]);
  // Equal mel spacing.
  const double step = hz_to_mel(bank.band_edges[1]) - hz_to_mel(bank.band_edges[0]);
  for (std::size_t i = 1; i < bank.band_edges.size(); ++i)
    CHECK(hz_to_mel(bank.band_edges[i]) - hz_to_mel(bank.band_edges[i - 1]) == doctest::Approx(step));

  for (int b = 0; b < kNumBands; ++b) {
    double peak = 0, sum = 0;
    for (int k = 0; k < kNumBins; ++k) {
      CHECK(bank.weight(b, k) >= 0.0);
      peak = std::max(peak, bank.weight(b, k));
      sum += bank.weight(b, k);
    }
    CHECK(peak == doctest::Approx(1.0));
    CHECK(sum > 0.0);
    if (b + 2 < kNumBands)
      for (int k = 0; k < kNumBins; ++k) CHECK((bank.weight(b, k) == 0.0 || bank.weight(b + 2, k) == 0.0));
  }
  for (int b = 1; b < kNumBands; ++b) CHECK(bank.center_hz(b) > bank.center_hz(b - 1));
}

TEST_CASE("frame_signal layout") {
  auto c = random_clip(3);
  const auto frames = frame_signal(c);
  REQUIRE(frames.size() == static_cast<std::size_t>(kNumFrames) * kFrameLength);
  // Frame k starts at padded index 80k, i.e. original index 80k - 120.
  const auto w = analysis_window();
  for (int k : {2, 50, 98})
    for (int i : {0, 17, 239}) {
      const int src = kHop * k + i - kPad;
      CHECK(frames[static_cast<std::size_t>(k) * kFrameLength + i] == doctest::Approx(c.samples[static_cast<std::size_t>(src)] * w[i]));
    }
  // Reflection at the left edge: padded[j] = x[120 - j].
  CHECK(frames[5] == doctest::Approx(c.samples[115] * w[5]));
  audio::AudioClip zero;
  zero.samples.assign(kClipSamples, 0.0f);
  const auto zf = frame_signal(zero);
  CHECK(std::all_of(zf.begin(), zf.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("mfcc rejects wrong lengths") {
  audio::AudioClip c;
  c.samples.assign(7999, 0.0f);
  CHECK_THROWS_AS(mfcc(c), Error);
  try {
    mfcc(c);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WrongLength);
  }
  c.samples.assign(8000, 0.0f);
  c.sample_rate = 16000;
  CHECK_THROWS_AS(frame_signal(c), Error);
}

TEST_CASE("mfcc of silence") {
  audio::AudioClip zero;
  zero.samples.assign(kClipSamples, 0.0f);
  const auto m = mfcc(zero);
  REQUIRE(m.coeffs.size() == 40u * 101u);
  const double floor = std::log(1e-10);
  for (int t = 0; t < kNumFrames; ++t) {
    CHECK(m.at(0, t) == doctest::Approx(std::sqrt(40.0) * floor).epsilon(1e-6));
    for (int c = 1; c < kNumCoeffs; ++c) CHECK(std::abs(m.at(c, t)) < 1e-4);
  }
}

TEST_CASE("mfcc matches the direct-DFT oracle") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto c = random_clip(seed);
    const auto ref = oracle::mfcc(std::vector<double>(c.samples.begin(), c.samples.end()));
    CHECK(max_abs_diff(mfcc(c), ref) < 1e-4);
  }
  const auto t = tone(1000.0);
  CHECK(max_abs_diff(mfcc(t), oracle::mfcc(std::vector<double>(t.samples.begin(), t.samples.end()))) < 1e-4);
}

TEST_CASE("a 450 Hz tone peaks in the band centered nearest 450 Hz") {
  const auto& bank = default_filterbank();
  const auto e = log_mel_energies(tone(450.0), bank);
  std::vector<double> mean(kNumBands, 0.0);
  for (int t = 0; t < kNumFrames; ++t)
    for (int b = 0; b < kNumBands; ++b) mean[static_cast<std::size_t>(b)] += e.at(t, b);
  const int argmax = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  int nearest = 0;
  for (int b = 0; b < kNumBands; ++b)
    if (std::abs(bank.center_hz(b) - 450.0) < std::abs(bank.center_hz(nearest) - 450.0)) nearest = b;
  CHECK(argmax == nearest);
}

TEST_CASE("orthonormal DCT round trip") {
  Rng rng(4);
  std::array<double, kNumBands> in{}, coef{}, back{};
  for (double& v : in) v = rng.normal(-5, 3);
  dct_ii(in, coef);
  inverse_dct_ii(coef, back);
  for (int i = 0; i < kNumBands; ++i) CHECK(back[static_cast<std::size_t>(i)] == doctest::Approx(in[static_cast<std::size_t>(i)]).epsilon(1e-9));
  double e_in = 0, e_coef = 0;
  for (int i = 0; i < kNumBands; ++i) e_in += in[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(i)], e_coef += coef[static_cast<std::size_t>(i)] * coef[static_cast<std::size_t>(i)];
  CHECK(e_coef == doctest::Approx(e_in));

  // Full pipeline: the inverse DCT of each column recovers the log-energies.
  const auto clip = random_clip(8);
  const auto energies = log_mel_energies(clip, default_filterbank());
  const auto m = mfcc(clip);
  for (int t : {0, 40, 100}) {
    for (int c = 0; c < kNumCoeffs; ++c) coef[static_cast<std::size_t>(c)] = m.at(c, t);
    inverse_dct_ii(coef, back);
    for (int b = 0; b < kNumBands; ++b) CHECK(std::abs(back[static_cast<std::size_t>(b)] - energies.at(t, b)) < 1e-5 * std::max(1.0, std::abs(energies.at(t, b))));
  }
}

TEST_CASE("mfcc frame shift covariance") {
  auto c = random_clip(21);
  audio::AudioClip delayed;
  delayed.samples.assign(kClipSamples, 0.0f);
  for (int i = kHop; i < kClipSamples; ++i) delayed.samples[static_cast<std::size_t>(i)] = c.samples[static_cast<std::size_t>(i - kHop)];
  const auto a = mfcc(c), b = mfcc(delayed);
  // Columns away from both edges move by one frame.
  for (int t = 3; t < kNumFrames - 3; ++t)
    for (int k = 0; k < kNumCoeffs; ++k) CHECK(b.at(k, t + 1) == doctest::Approx(a.at(k, t)).epsilon(1e-5));
}

TEST_CASE("band ablation") {
  audio::AudioClip zero;
  zero.samples.assign(kClipSamples, 0.0f);
  CHECK(ablate_band(zero, 7) == mfcc(zero));
  CHECK_THROWS_AS(ablate_band(zero, 40), Error);
  CHECK_THROWS_AS(ablate_band(zero, -1), Error);

  const auto clip = random_clip(31);
  const auto& bank = default_filterbank();
  auto once = log_mel_energies(clip, bank);
  ablate_log_energies(once, 12);
  auto twice = once;
  ablate_log_energies(twice, 12);
  CHECK(once.values == twice.values);

  // clean - ablated = d * DCT basis column of the band.
  const int band = 12;
  const auto clean_e = log_mel_energies(clip, bank);
  const auto clean = mfcc(clip), ablated = ablate_band(clip, band);
  for (int t : {0, 33, 100}) {
    const double d = clean_e.at(t, band) - std::log(1e-10);
    for (int c = 0; c < kNumCoeffs; ++c) {
      const double basis = (c == 0 ? std::sqrt(1.0 / 40) : std::sqrt(2.0 / 40)) * std::cos(oracle::kPi * c * (2 * band + 1) / 80.0);
      CHECK(clean.at(c, t) - ablated.at(c, t) == doctest::Approx(d * basis).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("mfcc cache round trip") {
  TempDir dir("mfcc_cache");
  const auto m = mfcc(random_clip(41));
  write_mfcc_cache(dir / "m.bin", m);
  CHECK(read_mfcc_cache(dir / "m.bin") == m);

  ::setenv("CRYB_CACHE", (dir / "cache").c_str(), 1);
  const auto clip = random_clip(42);
  const auto first = cached_mfcc(clip);
  const auto second = cached_mfcc(clip);
  ::unsetenv("CRYB_CACHE");
  CHECK(first == mfcc(clip));
  CHECK(second == first);
  CHECK(!std::filesystem::is_empty(dir / "cache"));
}
