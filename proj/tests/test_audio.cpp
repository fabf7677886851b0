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

#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "cryb/audio/audio.hpp"
#include "cryb/common/error.hpp"
#include "cryb/common/rng.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace cryb;
using audio::AudioClip;

namespace {

// Hand-rolled RIFF writer so the reader is tested against bytes it did not produce.
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

std::string wav_bytes(const std::vector<std::int16_t>& frames, int channels, int rate, int format = 1,
                      int bits = 16) {
  std::string data;
  for (auto v : frames) put_u16(data, static_cast<std::uint16_t>(v));
  std::string s = "RIFF";
  put_u32(s, static_cast<std::uint32_t>(36 + data.size()));
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, static_cast<std::uint16_t>(format));
  put_u16(s, static_cast<std::uint16_t>(channels));
  put_u32(s, static_cast<std::uint32_t>(rate));
  put_u32(s, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put_u16(s, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(s, static_cast<std::uint16_t>(bits));
  s += "data";
  put_u32(s, static_cast<std::uint32_t>(data.size()));
  return s + data;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

AudioClip sine(double hz, int rate, int n, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  for (int i = 0; i < n; ++i) c.samples.push_back(static_cast<float>(amp * std::sin(2 * oracle::kPi * hz * i / rate)));
  return c;
}

std::vector<double> as_double(const AudioClip& c) { return {c.samples.begin(), c.samples.end()}; }

}  // namespace

TEST_CASE("read_wav maps PCM16 to [-1, 1)") {
  TempDir dir("wav_map");
  write_bytes(dir / "zero.wav", wav_bytes({0}, 1, 8000));
  write_bytes(dir / "min.wav", wav_bytes({-32768}, 1, 8000));
  write_bytes(dir / "stereo.wav", wav_bytes({16384, -16384}, 2, 16000));

  const auto zero = audio::read_wav(dir / "zero.wav");
  REQUIRE(zero.samples.size() == 1);
  CHECK(zero.samples[0] == 0.0f);
  CHECK(zero.sample_rate == 8000);
  CHECK(audio::read_wav(dir / "min.wav").samples.at(0) == -1.0f);
  const auto stereo = audio::read_wav(dir / "stereo.wav");
  REQUIRE(stereo.samples.size() == 1);
  CHECK(stereo.samples[0] == 0.0f);
  CHECK(stereo.sample_rate == 16000);
}

TEST_CASE("read_wav rejects bad files") {
  TempDir dir("wav_bad");
  auto code_of = [&](const std::string& name) {
    try {
      audio::read_wav(dir / name);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("no error");
    return Errc::InvalidArgument;
  };
  write_bytes(dir / "float.wav", wav_bytes({0, 0}, 1, 8000, 3, 32));
  write_bytes(dir / "pcm8.wav", wav_bytes({0}, 1, 8000, 1, 8));
  write_bytes(dir / "rate.wav", wav_bytes({0}, 1, 22050));
  write_bytes(dir / "junk.wav", "not a wave file at all, just text");
  auto truncated = wav_bytes({1, 2, 3, 4}, 1, 8000);
  truncated.resize(truncated.size() - 3);
  write_bytes(dir / "short.wav", truncated);

  CHECK(code_of("float.wav") == Errc::UnsupportedEncoding);
  CHECK(code_of("pcm8.wav") == Errc::UnsupportedEncoding);
  CHECK(code_of("rate.wav") == Errc::UnsupportedEncoding);
  CHECK(code_of("junk.wav") == Errc::MalformedWav);
  CHECK(code_of("short.wav") == Errc::MalformedWav);
  CHECK(code_of("missing.wav") == Errc::Io);
}

TEST_CASE("write_wav then read_wav is bit-exact for PCM16 values") {
  TempDir dir("wav_rt");
  Rng rng(5);
  AudioClip c;
  for (int i = 0; i < 1000; ++i) c.samples.push_back(static_cast<float>(rng.integer(-32768, 32767)) / 32768.0f);
  audio::write_wav(c, dir / "rt.wav");
  const auto back = audio::read_wav(dir / "rt.wav");
  CHECK(back.samples == c.samples);
  CHECK(back.sample_rate == 8000);
}

TEST_CASE("resample lengths and identity") {
  CHECK(audio::resample(sine(440, 16000, 16000), 8000).samples.size() == 8000);
  CHECK(audio::resample(sine(440, 44100, 44100), 8000).samples.size() == 8000);
  CHECK(audio::resample(sine(440, 48000, 12000), 8000).samples.size() == 2000);
  const auto c = sine(440, 8000, 8000);
  CHECK(audio::resample(c, 8000).samples == c.samples);
  CHECK_THROWS_AS(audio::resample(c, 16000), Error);
  try {
    audio::resample(c, 16000);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UpsamplingRequested);
  }
}

TEST_CASE("resample passband against a direct-DFT oracle") {
  // 3.0 kHz sits inside the 3.6 kHz passband: amplitude is preserved.
  const auto in = sine(3000, 16000, 16000);
  const auto out = audio::resample(in, 8000);
  const auto x = as_double(out);
  CHECK(std::abs(oracle::dominant_frequency(x, 8000, 8000) - 3000.0) <= 1.0);
  const double a_in = oracle::tone_amplitude(as_double(in), 16000, 3000);
  const double a_out = oracle::tone_amplitude(x, 8000, 3000);
  CHECK(std::abs(a_out / a_in - 1.0) < 0.05);
}

TEST_CASE("resample keeps a 3.9 kHz tone as the dominant bin") {
  // 3.9 kHz lies in the transition band of the 0.45 * 8 kHz cutoff: the tone
  // stays the spectral peak but is attenuated.
  const auto out = audio::resample(sine(3900, 16000, 16000), 8000);
  CHECK(std::abs(oracle::dominant_frequency(as_double(out), 8000, 8000) - 3900.0) <= 1.0);
}

TEST_CASE("resample suppresses aliases") {
  // 6 kHz at 16 kHz would fold onto 2 kHz without the low-pass.
  const auto out = audio::resample(sine(6000, 16000, 16000), 8000);
  CHECK(oracle::tone_amplitude(as_double(out), 8000, 2000) < 0.01 * 0.5);
}

TEST_CASE("resample is linear") {
  Rng rng(9);
  AudioClip x;
  x.sample_rate = 16000;
  for (int i = 0; i < 4000; ++i) x.samples.push_back(static_cast<float>(rng.uniform(-0.4, 0.4)));
  AudioClip scaled = x;
  for (auto& s : scaled.samples) s *= 2.0f;
  const auto a = audio::resample(x, 8000), b = audio::resample(scaled, 8000);
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(std::abs(b.samples[i] - 2.0f * a.samples[i]) < 1e-6);
}

TEST_CASE("fit_length pads and truncates at the end") {
  auto c = sine(300, 8000, 8000);
  CHECK(audio::fit_length(c, 1.0).samples == c.samples);
  auto half = sine(300, 8000, 4000);
  const auto padded = audio::fit_length(half, 1.0);
  REQUIRE(padded.samples.size() == 8000);
  for (int i = 0; i < 4000; ++i) CHECK(padded.samples[static_cast<std::size_t>(i)] == half.samples[static_cast<std::size_t>(i)]);
  for (int i = 4000; i < 8000; ++i) CHECK(padded.samples[static_cast<std::size_t>(i)] == 0.0f);
  auto longer = sine(300, 8000, 9000);
  const auto cut = audio::fit_length(longer, 1.0);
  CHECK(std::equal(cut.samples.begin(), cut.samples.end(), longer.samples.begin()));
  CHECK(audio::fit_length(cut, 1.0).samples == cut.samples);
}
