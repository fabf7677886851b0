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

#include "cryb/model/res8.hpp"

#include <algorithm>

namespace cryb::model {

void Res8Config::validate() const {
  require(n_channels >= 1, Errc::BadConfig, "n_channels must be positive");
  require(n_res_blocks >= 0, Errc::BadConfig, "n_res_blocks must be nonnegative");
  require(n_classes >= 2, Errc::BadConfig, "n_classes must be at least 2");
  require(input_height >= kPoolHeight && input_width >= kPoolWidth, Errc::BadConfig,
          "input is smaller than the 4x3 pooling window");
}

nlohmann::json Res8Config::to_json() const {
  return {{"n_channels", n_channels},
          {"n_res_blocks", n_res_blocks},
          {"n_classes", n_classes},
          {"input_shape", {1, input_height, input_width}}};
}

Res8Config Res8Config::from_json(const nlohmann::json& j) {
  Res8Config c;
  try {
    c.n_channels = j.at("n_channels").get<int>();
    c.n_res_blocks = j.at("n_res_blocks").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    const auto shape = j.at("input_shape").get<std::vector<int>>();
    require(shape.size() == 3 && shape[0] == 1, Errc::BadConfig, "input_shape must be [1,H,W]");
    c.input_height = shape[1];
    c.input_width = shape[2];
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadConfig, std::string("bad res8 config: ") + e.what());
  }
  c.validate();
  return c;
}

Res8::Conv Res8::make_conv(const std::string& name, int c_out, int c_in, Rng& rng) {
  return Conv{Parameter(name + ".weight", nn::glorot_uniform<float>({c_out, c_in, 3, 3}, rng)),
              Parameter(name + ".bias", Tensor({c_out}))};
}

Res8::Norm Res8::make_norm(const std::string& name, int channels) {
  return Norm{Parameter(name + ".gamma", Tensor({channels}, 1.0f)), Parameter(name + ".beta", Tensor({channels})),
              nn::RunningStats<float>(channels)};
}

Res8::Res8(const Res8Config& config, Rng& rng) : config_(config) {
  config_.validate();
  const int c = config_.n_channels;
  conv_in_ = make_conv("conv_in", c, 1, rng);
  bn_in_ = make_norm("bn_in", c);
  for (int b = 0; b < config_.n_res_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    block_conv_.push_back(make_conv(prefix + ".conv", c, c, rng));
    block_bn_.push_back(make_norm(prefix + ".bn", c));
  }
  conv_out_ = make_conv("conv_out", c, c, rng);
  bn_out_ = make_norm("bn_out", c);
  head_weight_ = Parameter("head.weight", nn::glorot_uniform<float>({config_.n_classes, c}, rng));
  head_bias_ = Parameter("head.bias", Tensor({config_.n_classes}));
}

template <typename Self, typename Visit>
void Res8::visit_all(Self& self, Visit visit) {
  auto conv = [&](auto& cv) {
    visit(cv.weight.name, cv.weight.value, true);
    visit(cv.bias.name, cv.bias.value, true);
  };
  auto norm = [&](auto& nm) {
    visit(nm.gamma.name, nm.gamma.value, true);
    visit(nm.beta.name, nm.beta.value, true);
    const std::string prefix = nm.gamma.name.substr(0, nm.gamma.name.size() - 6);
    visit(prefix + ".running_mean", nm.stats.mean, false);
    visit(prefix + ".running_var", nm.stats.var, false);
  };
  conv(self.conv_in_);
  norm(self.bn_in_);
  for (std::size_t b = 0; b < self.block_conv_.size(); ++b) {
    conv(self.block_conv_[b]);
    norm(self.block_bn_[b]);
  }
  conv(self.conv_out_);
  norm(self.bn_out_);
  visit(self.head_weight_.name, self.head_weight_.value, true);
  visit(self.head_bias_.name, self.head_bias_.value, true);
}

std::vector<Parameter*> Res8::parameters() {
  std::vector<Parameter*> out{&conv_in_.weight, &conv_in_.bias, &bn_in_.gamma, &bn_in_.beta};
  for (std::size_t b = 0; b < block_conv_.size(); ++b) {
    out.insert(out.end(), {&block_conv_[b].weight, &block_conv_[b].bias, &block_bn_[b].gamma, &block_bn_[b].beta});
  }
  out.insert(out.end(), {&conv_out_.weight, &conv_out_.bias, &bn_out_.gamma, &bn_out_.beta, &head_weight_, &head_bias_});
  return out;
}

std::vector<const Parameter*> Res8::parameters() const {
  auto mut = const_cast<Res8*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t Res8::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.numel();
  return n;
}

template <typename Self, typename Bind, typename Normalize>
Res8::Outputs Res8::run(Self& self, Tape& tape, nn::Var input, Bind bind, Normalize normalize) {
  const Tensor& x = tape.value(input);
  const auto& cfg = self.config_;
  require(x.rank() == 4 && x.dim(1) == 1 && x.dim(2) == cfg.input_height && x.dim(3) == cfg.input_width,
          Errc::ShapeMismatch,
          "res8 expects [N,1," + std::to_string(cfg.input_height) + "," + std::to_string(cfg.input_width) +
              "], got " + nn::shape_string(x.shape()));
  Outputs out;
  nn::Var h = nn::conv2d(tape, input, bind(self.conv_in_.weight), bind(self.conv_in_.bias));
  h = nn::relu(tape, normalize(h, self.bn_in_));
  h = nn::avg_pool(tape, h, kPoolHeight, kPoolWidth);
  out.trunk.push_back(h);
  for (std::size_t b = 0; b < self.block_conv_.size(); ++b) {
    nn::Var f = nn::conv2d(tape, h, bind(self.block_conv_[b].weight), bind(self.block_conv_[b].bias));
    f = normalize(f, self.block_bn_[b]);
    h = nn::relu(tape, nn::add(tape, h, f));
    out.trunk.push_back(h);
  }
  h = nn::conv2d(tape, h, bind(self.conv_out_.weight), bind(self.conv_out_.bias));
  h = nn::relu(tape, normalize(h, self.bn_out_));
  out.embedding = nn::global_avg_pool(tape, h);
  out.logits = nn::linear(tape, out.embedding, bind(self.head_weight_), bind(self.head_bias_));
  return out;
}

Res8::Outputs Res8::forward(Tape& tape, nn::Var input, nn::Mode mode) {
  auto bind = [&](Parameter& p) { return tape.param(p); };
  auto normalize = [&](nn::Var v, Norm& nm) {
    return nn::batchnorm(tape, v, tape.param(nm.gamma), tape.param(nm.beta), nm.stats, mode);
  };
  return run(*this, tape, input, bind, normalize);
}

Res8::Outputs Res8::forward_eval(Tape& tape, nn::Var input) const {
  auto bind = [&](const Parameter& p) { return tape.constant(p.value); };
  auto normalize = [&](nn::Var v, const Norm& nm) {
    return nn::batchnorm_eval(tape, v, tape.constant(nm.gamma.value), tape.constant(nm.beta.value), nm.stats);
  };
  return run(*this, tape, input, bind, normalize);
}

Tensor Res8::batch_input(std::span<const features::MfccMatrix* const> inputs) {
  require(!inputs.empty(), Errc::EmptySet, "empty batch");
  const std::size_t per = static_cast<std::size_t>(features::kNumCoeffs) * features::kNumFrames;
  Tensor x({static_cast<int>(inputs.size()), 1, features::kNumCoeffs, features::kNumFrames});
  for (std::size_t i = 0; i < inputs.size(); ++i) std::copy_n(inputs[i]->coeffs.data(), per, x.raw() + i * per);
  return x;
}

Tensor Res8::logits(std::span<const features::MfccMatrix* const> inputs) const {
  Tape tape(false);
  const auto out = forward_eval(tape, tape.input(batch_input(inputs)));
  return tape.value(out.logits);
}

Tensor Res8::embed(std::span<const features::MfccMatrix* const> inputs) const {
  Tape tape(false);
  const auto out = forward_eval(tape, tape.input(batch_input(inputs)));
  return tape.value(out.embedding);
}

std::vector<int> Res8::predict(std::span<const features::MfccMatrix* const> inputs) const {
  const Tensor s = logits(inputs);
  const int k = s.dim(1);
  std::vector<int> out(static_cast<std::size_t>(s.dim(0)));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = s.raw() + r * static_cast<std::size_t>(k);
    out[r] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

std::vector<NamedTensor> Res8::state() const {
  std::vector<NamedTensor> out;
  visit_all(*this, [&](const std::string& name, const Tensor& t, bool) {
    NamedTensor nt;
    nt.name = name;
    nt.shape = t.shape();
    nt.f32.assign(t.storage().begin(), t.storage().end());
    out.push_back(std::move(nt));
  });
  return out;
}

void Res8::load_state(std::span<const NamedTensor> tensors, bool skip_head) {
  visit_all(*this, [&](const std::string& name, Tensor& t, bool) {
    if (skip_head && is_head(name)) return;
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& nt) { return nt.name == name; });
    if (it == tensors.end()) return;
    if (it->is_f64 || it->shape != t.shape())
      fail(Errc::ArchMismatch, "tensor '" + name + "' has shape " + nn::shape_string(it->shape) + ", model expects " +
                                   nn::shape_string(t.shape()));
    t.storage().assign(it->f32.begin(), it->f32.end());
  });
}

bool Res8::is_head(std::string_view name) noexcept { return name.starts_with("head."); }

}  // namespace cryb::model
