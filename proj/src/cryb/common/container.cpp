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

#include "cryb/common/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cryb/common/error.hpp"

namespace cryb {
namespace {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

constexpr std::size_t kMagicSize = 8;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

std::size_t NamedTensor::numel() const { return shape_numel(shape); }

const NamedTensor* ContainerFile::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::string encode_container(std::string_view magic, const ContainerFile& file) {
  require(magic.size() == kMagicSize, Errc::InvalidArgument, "container magic must be 8 bytes");
  nlohmann::json header = file.header;
  header["tensors"] = nlohmann::json::array();
  std::size_t payload_size = 0;
  for (const auto& t : file.tensors) {
    const std::size_t n = t.numel();
    const std::size_t stored = t.is_f64 ? t.f64.size() : t.f32.size();
    require(stored == n, Errc::ShapeMismatch, "tensor '" + t.name + "' data does not match its shape");
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", t.is_f64 ? "f64" : "f32"}});
    payload_size += n * (t.is_f64 ? 8 : 4);
  }
  const std::string text = header.dump();
  const auto length = static_cast<std::uint32_t>(text.size());

  std::string out;
  out.reserve(kMagicSize + 4 + text.size() + payload_size);
  out.append(magic);
  char len_bytes[4];
  std::memcpy(len_bytes, &length, 4);
  out.append(len_bytes, 4);
  out.append(text);
  for (const auto& t : file.tensors) {
    if (t.is_f64)
      out.append(reinterpret_cast<const char*>(t.f64.data()), t.f64.size() * 8);
    else
      out.append(reinterpret_cast<const char*>(t.f32.data()), t.f32.size() * 4);
  }
  return out;
}

ContainerFile decode_container(std::string_view magic, std::string_view bytes) {
  if (bytes.size() < kMagicSize + 4 || bytes.substr(0, kMagicSize) != magic)
    fail(Errc::CorruptCheckpoint, "bad magic, expected " + std::string(magic));
  std::uint32_t length = 0;
  std::memcpy(&length, bytes.data() + kMagicSize, 4);
  if (bytes.size() < kMagicSize + 4 + static_cast<std::size_t>(length))
    fail(Errc::CorruptCheckpoint, "header truncated");

  ContainerFile file;
  try {
    file.header = nlohmann::json::parse(bytes.substr(kMagicSize + 4, length));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptCheckpoint, std::string("header is not valid JSON: ") + e.what());
  }
  if (!file.header.contains("tensors") || !file.header["tensors"].is_array())
    fail(Errc::CorruptCheckpoint, "header has no tensor table");

  std::size_t offset = kMagicSize + 4 + length;
  try {
    for (const auto& entry : file.header["tensors"]) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<int>>();
      t.is_f64 = entry.value("dtype", "f32") == "f64";
      for (int d : t.shape)
        if (d <= 0) fail(Errc::CorruptCheckpoint, "tensor '" + t.name + "' has a non-positive dimension");
      const std::size_t nbytes = t.numel() * (t.is_f64 ? 8 : 4);
      if (bytes.size() - offset < nbytes)
        fail(Errc::CorruptCheckpoint, "payload truncated at tensor '" + t.name + "'");
      if (t.is_f64) {
        t.f64.resize(t.numel());
        std::memcpy(t.f64.data(), bytes.data() + offset, nbytes);
      } else {
        t.f32.resize(t.numel());
        std::memcpy(t.f32.data(), bytes.data() + offset, nbytes);
      }
      offset += nbytes;
      file.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptCheckpoint, std::string("malformed tensor table: ") + e.what());
  }
  if (offset != bytes.size()) fail(Errc::CorruptCheckpoint, "trailing bytes after payload");
  return file;
}

void write_container(const std::filesystem::path& path, std::string_view magic, const ContainerFile& file) {
  write_file_bytes(path, encode_container(magic, file));
}

ContainerFile read_container(const std::filesystem::path& path, std::string_view magic) {
  return decode_container(magic, read_file_bytes(path));
}

std::string peek_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  std::string magic(kMagicSize, '\0');
  in.read(magic.data(), kMagicSize);
  if (in.gcount() != static_cast<std::streamsize>(kMagicSize)) return {};
  return magic;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write to " + path.string());
}

}  // namespace cryb
