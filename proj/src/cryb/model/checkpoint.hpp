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

#include "json.hpp"

#include "cryb/model/res8.hpp"

namespace cryb::model {

inline constexpr char kCheckpointMagic[] = "CRYB0001";

struct CheckpointMeta {
  std::string source_task;
  std::uint64_t seed = 0;
  nlohmann::json metrics = nlohmann::json::object();
};

struct LoadedModel {
  Res8 model;
  CheckpointMeta meta;
};

/// Checkpoint bytes: "CRYB0001" container whose header carries the config,
/// the block layout, the source task tag, the seed and free-form metrics.
std::string encode_checkpoint(const Res8& model, const CheckpointMeta& meta);
LoadedModel decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Res8& model, const CheckpointMeta& meta, const std::filesystem::path& path);
/// Throws Io or CorruptCheckpoint.
LoadedModel load_checkpoint(const std::filesystem::path& path);

/// Builds a fresh model for `target` and copies every non-head tensor
/// (convolutions, BN affine parameters and running statistics) from the
/// source checkpoint. The head keeps its fresh Glorot draw. Throws
/// ArchMismatch when the trunk does not fit.
Res8 transfer_load(const Res8Config& target, const std::filesystem::path& source, Rng& rng);
Res8 transfer_from(const Res8Config& target, const Res8& source, Rng& rng);

}  // namespace cryb::model
