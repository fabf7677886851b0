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

#include "cryb/model/checkpoint.hpp"

namespace cryb::model {
namespace {

constexpr char kBlockLayout[] = "relu(x + bn(conv3x3(x)))";

ContainerFile to_container(const Res8& model, const CheckpointMeta& meta) {
  ContainerFile file;
  file.header = {{"kind", "res8"},
                 {"config", model.config().to_json()},
                 {"architecture", {{"block", kBlockLayout}, {"downsample", "avgpool4x3"}, {"head", "linear"}}},
                 {"source_task", meta.source_task},
                 {"seed", meta.seed},
                 {"metrics", meta.metrics},
                 {"parameter_count", model.parameter_count()}};
  file.tensors = model.state();
  return file;
}

LoadedModel from_container(const ContainerFile& file) {
  Res8Config config;
  CheckpointMeta meta;
  try {
    if (file.header.value("kind", "") != "res8") fail(Errc::CorruptCheckpoint, "not a res8 checkpoint");
    config = Res8Config::from_json(file.header.at("config"));
    meta.source_task = file.header.value("source_task", "");
    meta.seed = file.header.value("seed", std::uint64_t{0});
    meta.metrics = file.header.value("metrics", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptCheckpoint, std::string("bad checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadConfig) fail(Errc::CorruptCheckpoint, e.what());
    throw;
  }
  Rng scratch(0);
  Res8 model(config, scratch);
  const auto expected = model.state();
  if (expected.size() != file.tensors.size())
    fail(Errc::CorruptCheckpoint, "checkpoint holds " + std::to_string(file.tensors.size()) + " tensors, config needs " +
                                      std::to_string(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (expected[i].name != file.tensors[i].name || expected[i].shape != file.tensors[i].shape)
      fail(Errc::CorruptCheckpoint, "tensor '" + file.tensors[i].name + "' does not match the declared config");
  model.load_state(file.tensors);
  return LoadedModel{std::move(model), std::move(meta)};
}

}  // namespace

std::string encode_checkpoint(const Res8& model, const CheckpointMeta& meta) {
  return encode_container(kCheckpointMagic, to_container(model, meta));
}

LoadedModel decode_checkpoint(std::string_view bytes) {
  return from_container(decode_container(kCheckpointMagic, bytes));
}

void save_checkpoint(const Res8& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  write_container(path, kCheckpointMagic, to_container(model, meta));
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  return from_container(read_container(path, kCheckpointMagic));
}

Res8 transfer_from(const Res8Config& target, const Res8& source, Rng& rng) {
  const Res8Config& src = source.config();
  if (src.n_channels != target.n_channels || src.n_res_blocks != target.n_res_blocks ||
      src.input_height != target.input_height || src.input_width != target.input_width)
    fail(Errc::ArchMismatch, "source trunk (" + std::to_string(src.n_channels) + " channels, " +
                                 std::to_string(src.n_res_blocks) + " blocks) does not match target (" +
                                 std::to_string(target.n_channels) + " channels, " +
                                 std::to_string(target.n_res_blocks) + " blocks)");
  Res8 model(target, rng);
  const auto state = source.state();
  model.load_state(state, /*skip_head=*/true);
  return model;
}

Res8 transfer_load(const Res8Config& target, const std::filesystem::path& source, Rng& rng) {
  const LoadedModel loaded = load_checkpoint(source);
  return transfer_from(target, loaded.model, rng);
}

}  // namespace cryb::model
