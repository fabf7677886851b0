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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cryb {

// Binary artifact layout shared by model checkpoints and SVM models:
//
//   magic     8 ASCII bytes (e.g. "CRYB0001")
//   length    uint32 little-endian, byte length of the header
//   header    UTF-8 JSON; "tensors" lists {name, shape, dtype} in payload order
//   payload   row-major little-endian tensors, concatenated
//
// dtype is "f32" unless stated; "f64" is accepted for solver state that must
// round-trip exactly.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> f32;
  std::vector<double> f64;
  bool is_f64 = false;

  std::size_t numel() const;
};

struct ContainerFile {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(std::string_view name) const;
};

/// Serializes to bytes; header["tensors"] is overwritten from `file.tensors`.
std::string encode_container(std::string_view magic, const ContainerFile& file);
ContainerFile decode_container(std::string_view magic, std::string_view bytes);

void write_container(const std::filesystem::path& path, std::string_view magic, const ContainerFile& file);
ContainerFile read_container(const std::filesystem::path& path, std::string_view magic);

/// Reads the 8-byte magic of a file, or an empty string if it is shorter.
std::string peek_magic(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cryb
