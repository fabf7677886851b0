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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cryb::synth {

enum class SplitName { Train, Val, Test };

const char* split_name(SplitName s) noexcept;
std::optional<SplitName> parse_split(std::string_view text);

struct ManifestRow {
  std::string path;  // relative to the manifest's directory
  int label = 0;
  std::string subject_id;
  std::optional<SplitName> split;

  bool operator==(const ManifestRow&) const = default;
};

/// Corpus index. On disk: UTF-8 CSV with header `path,label,subject_id,split`;
/// split may be empty.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // directory that row paths are relative to

  int class_count() const;  // 1 + max label
  std::vector<std::string> subjects() const;  // sorted, unique
  bool has_explicit_splits() const;  // every row carries a split
  std::filesystem::path resolve(const ManifestRow& row) const { return base_dir / row.path; }

  /// Throws InvalidArgument on duplicate paths or negative labels.
  void validate() const;
};

std::string format_manifest_csv(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
/// Throws Io if the file is missing, InvalidArgument on malformed rows.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace cryb::synth
