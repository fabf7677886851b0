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
#include <cstdint>
#include <cstring>
#include <string>

#include "cryb/audio/audio.hpp"
#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"

namespace cryb::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t le32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(le16(b, at)) | (static_cast<std::uint32_t>(le16(b, at + 2)) << 16);
}

void put16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& b, std::uint32_t v) {
  put16(b, static_cast<std::uint16_t>(v & 0xffff));
  put16(b, static_cast<std::uint16_t>(v >> 16));
}

}  // namespace

bool is_supported_rate(int rate) noexcept {
  return rate == 8000 || rate == 16000 || rate == 44100 || rate == 48000;
}

AudioClip read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    fail(Errc::MalformedWav, "missing RIFF/WAVE header" + where);

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) fail(Errc::MalformedWav, "chunk '" + id + "' is truncated" + where);

    if (id == "fmt ") {
      if (size < 16) fail(Errc::MalformedWav, "fmt chunk too short" + where);
      std::uint16_t format = le16(bytes, body);
      channels = le16(bytes, body + 2);
      rate = le32(bytes, body + 4);
      bits = le16(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) format = le16(bytes, body + 24);
      if (format != kFormatPcm) fail(Errc::UnsupportedEncoding, "audio format " + std::to_string(format) + where);
      if (bits != 16) fail(Errc::UnsupportedEncoding, std::to_string(bits) + "-bit samples" + where);
      if (channels != 1 && channels != 2)
        fail(Errc::UnsupportedEncoding, std::to_string(channels) + " channels" + where);
      if (!is_supported_rate(static_cast<int>(rate)))
        fail(Errc::UnsupportedEncoding, "sample rate " + std::to_string(rate) + where);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(Errc::MalformedWav, "data chunk before fmt chunk" + where);
      const std::size_t frame_bytes = 2u * channels;
      if (size % frame_bytes != 0) fail(Errc::MalformedWav, "partial sample frame" + where);
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      const std::size_t frames = size / frame_bytes;
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        float acc = 0.0f;
        for (std::uint16_t c = 0; c < channels; ++c) {
          const auto v = static_cast<std::int16_t>(le16(bytes, body + i * frame_bytes + 2u * c));
          acc += static_cast<float>(v) / 32768.0f;
        }
        clip.samples[i] = acc / static_cast<float>(channels);
      }
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  fail(Errc::MalformedWav, "no data chunk" + where);
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  require(clip.sample_rate > 0, Errc::InvalidArgument, "sample rate must be positive");
  const auto data_size = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string b;
  b.reserve(44 + data_size);
  b += "RIFF";
  put32(b, 36 + data_size);
  b += "WAVEfmt ";
  put32(b, 16);
  put16(b, kFormatPcm);
  put16(b, 1);
  put32(b, static_cast<std::uint32_t>(clip.sample_rate));
  put32(b, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put16(b, 2);
  put16(b, 16);
  b += "data";
  put32(b, data_size);
  for (float s : clip.samples) {
    const double scaled = std::nearbyint(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put16(b, static_cast<std::uint16_t>(v));
  }
  write_file_bytes(path, b);
}

}  // namespace cryb::audio
