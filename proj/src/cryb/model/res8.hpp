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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cryb/common/container.hpp"
#include "cryb/common/rng.hpp"
#include "cryb/features/mfcc.hpp"
#include "cryb/nn/layers.hpp"
#include "cryb/nn/optim.hpp"

namespace cryb::model {

using Tensor = nn::Tensor<float>;
using Parameter = nn::Parameter<float>;
using Tape = nn::Tape<float>;

inline constexpr int kPoolHeight = 4;
inline constexpr int kPoolWidth = 3;

struct Res8Config {
  int n_channels = 45;
  int n_res_blocks = 6;
  int n_classes = 2;
  int input_height = features::kNumCoeffs;
  int input_width = features::kNumFrames;

  /// Throws BadConfig.
  void validate() const;
  nlohmann::json to_json() const;
  static Res8Config from_json(const nlohmann::json& j);
  bool operator==(const Res8Config&) const = default;
};

/// res8-style residual network:
///
///   conv_in(1->C) -> BN -> ReLU -> avgpool 4x3
///   -> block x B:  y = ReLU(x + BN(conv(x)))
///   -> conv_out(C->C) -> BN -> ReLU -> global average pool  (embedding, C)
///   -> head: linear C -> K
///
/// All convolutions are 3x3, stride 1, same padding.
class Res8 {
 public:
  struct Outputs {
    nn::Var embedding;             // [N, C]
    nn::Var logits;                // [N, K]
    std::vector<nn::Var> trunk;    // pooled input to block 0, then each block output
  };

  /// Glorot-uniform weights, zero biases, BN gamma=1 beta=0, running
  /// mean 0 / var 1. Throws BadConfig.
  Res8(const Res8Config& config, Rng& rng);

  const Res8Config& config() const noexcept { return config_; }

  /// Trainable parameters in checkpoint order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  /// Training-capable pass over a [N, 1, H, W] input; train mode updates BN
  /// running statistics.
  Outputs forward(Tape& tape, nn::Var input, nn::Mode mode);
  /// Eval-mode pass that leaves the model untouched.
  Outputs forward_eval(Tape& tape, nn::Var input) const;

  /// Stacks MFCCs into a [N, 1, 40, 101] tensor.
  static Tensor batch_input(std::span<const features::MfccMatrix* const> inputs);

  /// Eval-mode logits, [N, K].
  Tensor logits(std::span<const features::MfccMatrix* const> inputs) const;
  /// Eval-mode embeddings, [N, C].
  Tensor embed(std::span<const features::MfccMatrix* const> inputs) const;
  std::vector<int> predict(std::span<const features::MfccMatrix* const> inputs) const;

  /// Every stored tensor (parameters and BN running statistics) in a fixed order.
  std::vector<NamedTensor> state() const;
  /// Overwrites tensors by name; names absent from `tensors` keep their
  /// values. Throws ArchMismatch on a shape conflict.
  void load_state(std::span<const NamedTensor> tensors, bool skip_head = false);

  static bool is_head(std::string_view name) noexcept;

 private:
  struct Conv {
    Parameter weight;
    Parameter bias;
  };
  struct Norm {
    Parameter gamma;
    Parameter beta;
    nn::RunningStats<float> stats;
  };

  template <typename Self, typename Bind, typename Normalize>
  static Outputs run(Self& self, Tape& tape, nn::Var input, Bind bind, Normalize normalize);

  static Conv make_conv(const std::string& name, int c_out, int c_in, Rng& rng);
  static Norm make_norm(const std::string& name, int channels);

  template <typename Self, typename Visit>
  static void visit_all(Self& self, Visit visit);

  Res8Config config_;
  Conv conv_in_;
  Norm bn_in_;
  std::vector<Conv> block_conv_;
  std::vector<Norm> block_bn_;
  Conv conv_out_;
  Norm bn_out_;
  Parameter head_weight_;
  Parameter head_bias_;
};

}  // namespace cryb::model
