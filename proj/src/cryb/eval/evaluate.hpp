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
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cryb/audio/audio.hpp"
#include "cryb/common/rng.hpp"
#include "cryb/eval/metrics.hpp"
#include "cryb/features/mfcc.hpp"
#include "cryb/model/res8.hpp"
#include "cryb/svm/svm.hpp"
#include "cryb/training/data.hpp"

namespace cryb::eval {

/// Frozen classifier over MFCC inputs.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int n_classes() const = 0;
  virtual std::vector<int> predict(std::span<const features::MfccMatrix* const> inputs) const = 0;
};

class Res8Predictor final : public Predictor {
 public:
  explicit Res8Predictor(const model::Res8& net, std::size_t chunk = 50) : net_(net), chunk_(chunk) {}
  int n_classes() const override { return net_.config().n_classes; }
  std::vector<int> predict(std::span<const features::MfccMatrix* const> inputs) const override;

 private:
  const model::Res8& net_;
  std::size_t chunk_;
};

class SvmPredictor final : public Predictor {
 public:
  explicit SvmPredictor(const svm::SvmModel& model) : model_(model) {}
  int n_classes() const override { return 2; }
  std::vector<int> predict(std::span<const features::MfccMatrix* const> inputs) const override {
    return model_.predict(inputs);
  }

 private:
  const svm::SvmModel& model_;
};

/// Loads either artifact kind by its magic bytes.
class LoadedPredictor {
 public:
  static LoadedPredictor load(const std::filesystem::path& path);
  const Predictor& get() const { return *predictor_; }
  const model::Res8* res8() const { return net_.get(); }
  std::string kind() const { return net_ ? "res8" : "svm"; }

 private:
  std::unique_ptr<model::Res8> net_;
  std::unique_ptr<svm::SvmModel> svm_;
  std::unique_ptr<Predictor> predictor_;
};

/// Throws EmptySet.
EvalReport evaluate(const Predictor& predictor, std::span<const features::MfccMatrix* const> inputs,
                    std::span<const int> labels);
EvalReport evaluate(const Predictor& predictor, const training::Dataset& data);

// ---- noise -------------------------------------------------------------

enum class NoiseKind { Gaussian, Playground, Bark, Siren };

const char* noise_name(NoiseKind kind) noexcept;
std::optional<NoiseKind> parse_noise(std::string_view text);

/// Standard deviation of the built-in Gaussian noise (variance 0.1).
inline const double kGaussianNoiseStd = 0.31622776601683794;

/// Built-in 8 kHz noise of the given length. Gaussian: white, std sqrt(0.1).
/// Playground: pink noise. Bark: amplitude-modulated noise bursts. Siren:
/// tone sweeping 600-1200 Hz and back.
audio::AudioClip make_noise(NoiseKind kind, std::size_t samples, Rng& rng);

struct MixResult {
  audio::AudioClip clip;
  double alpha = 0.0;
  bool clipped = false;
};

/// Represents a clean (noise-free) level in sweeps.
inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

/// x + alpha * n with alpha = sqrt(Px / (Pn * 10^(snr/10))); noise is tiled to
/// the clip length and the result clipped to [-1, 1] only when needed. An
/// infinite SNR returns the clip unchanged. Throws SilentSignal, SilentNoise.
MixResult mix_noise(const audio::AudioClip& clip, const audio::AudioClip& noise, double snr_db);

// ---- sweeps -----------------------------------------------------------

struct SweepPoint {
  double axis = 0.0;
  EvalReport report;
};

struct SweepCurve {
  std::string name;
  std::string model_tag;
  std::vector<SweepPoint> points;
};

inline const std::vector<double> kDefaultSnrLevels{kCleanSnr, 20.0, 10.0, 5.0, 0.0, -5.0};

/// One evaluation per level (sorted by descending SNR); every clip gets fresh
/// noise from a stream derived from `seed`, the kind and the level. Built-in
/// noise unless `user_noise` is given.
SweepCurve noise_sweep(const Predictor& predictor, const training::Dataset& test, NoiseKind kind,
                       std::span<const double> levels, std::uint64_t seed,
                       const audio::AudioClip* user_noise = nullptr);

/// Keep the first L s (L = 0.1, 0.2, ..., 1.0), zero-pad to 1 s, evaluate.
SweepCurve length_sweep(const Predictor& predictor, const training::Dataset& test);

/// Ablates each mel band in turn; the axis is the band's center in Hz.
SweepCurve filterbank_sweep(const Predictor& predictor, const training::Dataset& test);

/// `axis,uar,sensitivity,specificity`; the clean noise level prints as inf.
std::string format_sweep_csv(const SweepCurve& curve);

// ---- PCA --------------------------------------------------------------

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one orthonormal component per column
  Eigen::VectorXd explained_variance_ratio;  // descending, sums to 1
  Eigen::VectorXd explained_variance;

  /// Coordinates of rows (n x d) in the first k components.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x, int k) const;
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& scores) const;
};

/// Covariance eigendecomposition of mean-centered rows. Throws EmptySet for
/// fewer than 2 rows and DegenerateData for zero total variance.
PcaResult pca_fit(const Eigen::MatrixXd& x);

struct PcaReport {
  std::string cumulative_csv;   // component,cumulative_ratio
  std::string projection_csv;   // pc1,pc2,label
  PcaResult pca;
};

/// Embeds the rows with the model and fits PCA on the embeddings.
PcaReport pca_report(const model::Res8& net, const training::Dataset& data);

}  // namespace cryb::eval
