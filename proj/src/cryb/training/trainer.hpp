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
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cryb/common/container.hpp"
#include "cryb/model/res8.hpp"
#include "cryb/training/data.hpp"

namespace cryb::training {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 50;
  double lr_initial = 0.001;
  double lr_after = 0.0001;
  int lr_switch_epoch = 15;  // last epoch at lr_initial
  double momentum = 0.9;
  double time_shift_max_s = 0.1;
  std::uint64_t seed = 1;

  /// Throws BadConfig.
  void validate() const;
  /// Learning rate for a 1-based epoch.
  double lr_at(int epoch) const noexcept { return epoch <= lr_switch_epoch ? lr_initial : lr_after; }

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_uar = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_uar = 0.0;
  std::vector<NamedTensor> best_state;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// SGD with momentum over class-balanced, time-shifted mini-batches. After
/// every epoch the validation UAR is measured; the model is left holding the
/// weights of the best epoch (ties go to the earliest). Sampling and
/// augmentation use the "sampler" and "augment" streams of config.seed.
/// Throws DivergedLoss on a non-finite loss.
TrainResult train(model::Res8& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Eval-mode predictions in chunks.
std::vector<int> predict_all(const model::Res8& net, const Dataset& data, std::size_t chunk = 50);

/// CSV with header `epoch,lr,train_loss,val_uar`.
std::string format_history_csv(const std::vector<EpochRecord>& history);

}  // namespace cryb::training
