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

#include "cryb/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cryb/common/error.hpp"
#include "cryb/eval/metrics.hpp"

namespace cryb::training {
namespace {

// Training reallocates the same large activation buffers every step; keeping
// them out of mmap avoids page-fault churn.
void tune_allocator() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

}  // namespace

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* what) { require(ok, Errc::BadConfig, what); };
  check(epochs > 0, "epochs must be positive");
  check(batch_size > 0, "batch_size must be positive");
  check(lr_initial > 0 && lr_after > 0, "learning rates must be positive");
  check(lr_switch_epoch > 0 && lr_switch_epoch < epochs, "lr_switch_epoch must lie in [1, epochs)");
  check(momentum >= 0 && momentum < 1, "momentum must lie in [0, 1)");
  check(time_shift_max_s >= 0 && time_shift_max_s < audio::kClipSeconds, "time_shift_max_s must lie in [0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"batch_size", batch_size}, {"lr_initial", lr_initial},
          {"lr_after", lr_after},     {"lr_switch_epoch", lr_switch_epoch},
          {"momentum", momentum},     {"time_shift_max_s", time_shift_max_s},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.lr_after = j.value("lr_after", c.lr_after);
    c.lr_switch_epoch = j.value("lr_switch_epoch", c.lr_switch_epoch);
    c.momentum = j.value("momentum", c.momentum);
    c.time_shift_max_s = j.value("time_shift_max_s", c.time_shift_max_s);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadConfig, std::string("train config: ") + e.what());
  }
  return c;
}

std::vector<int> predict_all(const model::Res8& net, const Dataset& data, std::size_t chunk) {
  const auto inputs = data.inputs();
  std::vector<int> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); i += chunk) {
    const std::size_t n = std::min(chunk, inputs.size() - i);
    const auto p = net.predict(std::span(inputs).subspan(i, n));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

TrainResult train(model::Res8& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  const int k = net.config().n_classes;
  require(train_set.size() > 0, Errc::EmptySet, "empty training set");
  require(val_set.size() > 0, Errc::EmptySet, "empty validation set");
  tune_allocator();

  const Rng root(config.seed);
  Rng sampler_rng = root.fork("sampler");
  Rng augment_rng = root.fork("augment");
  const BalancedSampler sampler(train_set.labels, k, config.batch_size);
  auto params = net.parameters();

  TrainResult result;
  result.best_val_uar = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    double loss_sum = 0.0;
    const auto batches = sampler.epoch(sampler_rng);
    for (const auto& batch : batches) {
      std::vector<features::MfccMatrix> feats;
      std::vector<int> labels;
      feats.reserve(batch.size());
      for (std::size_t idx : batch) {
        const auto shifted = time_shift(train_set.clips[idx], augment_rng, config.time_shift_max_s);
        feats.push_back(features::mfcc(shifted));
        labels.push_back(train_set.labels[idx]);
      }
      std::vector<const features::MfccMatrix*> ptrs;
      for (const auto& f : feats) ptrs.push_back(&f);

      nn::zero_grad<float>(params);
      model::Tape tape;
      const auto in = tape.input(model::Res8::batch_input(ptrs));
      const auto out = net.forward(tape, in, nn::Mode::Train);
      const auto loss = nn::hinge_loss(tape, out.logits, std::span<const int>(labels));
      const double value = tape.value(loss)[0];
      require(std::isfinite(value), Errc::DivergedLoss,
              "non-finite training loss at epoch " + std::to_string(epoch));
      tape.backward(loss);
      nn::sgd_step<float>(params, lr, config.momentum);
      loss_sum += value;
    }

    const auto predicted = predict_all(net, val_set);
    const double uar = eval::make_report(val_set.labels, predicted, k).uar;
    EpochRecord rec{epoch, lr, loss_sum / static_cast<double>(batches.size()), uar};
    result.history.push_back(rec);
    if (uar > result.best_val_uar) {
      result.best_val_uar = uar;
      result.best_epoch = epoch;
      result.best_state = net.state();
    }
    if (on_epoch) on_epoch(rec);
  }
  net.load_state(result.best_state);
  return result;
}

std::string format_history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,lr,train_loss,val_uar\n";
  char line[128];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.train_loss, r.val_uar);
    out += line;
  }
  return out;
}

}  // namespace cryb::training
