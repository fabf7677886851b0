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

#include "cryb/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"
#include "cryb/model/checkpoint.hpp"

namespace cryb::eval {
namespace {

std::vector<const features::MfccMatrix*> pointers(const std::vector<features::MfccMatrix>& m) {
  std::vector<const features::MfccMatrix*> out;
  out.reserve(m.size());
  for (const auto& x : m) out.push_back(&x);
  return out;
}

EvalReport evaluate_features(const Predictor& p, const std::vector<features::MfccMatrix>& feats,
                             std::span<const int> labels) {
  return evaluate(p, pointers(feats), labels);
}

}  // namespace

std::vector<int> Res8Predictor::predict(std::span<const features::MfccMatrix* const> inputs) const {
  std::vector<int> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); i += chunk_) {
    const auto part = net_.predict(inputs.subspan(i, std::min(chunk_, inputs.size() - i)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

LoadedPredictor LoadedPredictor::load(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), Errc::Io, "model not found: " + path.string());
  LoadedPredictor lp;
  const std::string magic = peek_magic(path);
  if (magic == svm::kSvmMagic) {
    lp.svm_ = std::make_unique<svm::SvmModel>(svm::SvmModel::load(path));
    lp.predictor_ = std::make_unique<SvmPredictor>(*lp.svm_);
  } else {
    lp.net_ = std::make_unique<model::Res8>(model::load_checkpoint(path).model);
    lp.predictor_ = std::make_unique<Res8Predictor>(*lp.net_);
  }
  return lp;
}

EvalReport evaluate(const Predictor& predictor, std::span<const features::MfccMatrix* const> inputs,
                    std::span<const int> labels) {
  require(!inputs.empty(), Errc::EmptySet, "no rows to evaluate");
  require(inputs.size() == labels.size(), Errc::ShapeMismatch, "inputs and labels differ in count");
  const auto predicted = predictor.predict(inputs);
  return make_report(labels, predicted, std::max(predictor.n_classes(), 2));
}

EvalReport evaluate(const Predictor& predictor, const training::Dataset& data) {
  return evaluate(predictor, data.inputs(), data.labels);
}

const char* noise_name(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Playground: return "playground";
    case NoiseKind::Bark: return "bark";
    case NoiseKind::Siren: return "siren";
  }
  return "?";
}

std::optional<NoiseKind> parse_noise(std::string_view text) {
  for (NoiseKind k : {NoiseKind::Gaussian, NoiseKind::Playground, NoiseKind::Bark, NoiseKind::Siren})
    if (text == noise_name(k)) return k;
  return std::nullopt;
}

audio::AudioClip make_noise(NoiseKind kind, std::size_t samples, Rng& rng) {
  audio::AudioClip out;
  out.sample_rate = audio::kPipelineRate;
  out.samples.resize(samples);
  const double rate = audio::kPipelineRate;
  switch (kind) {
    case NoiseKind::Gaussian:
      for (auto& s : out.samples) s = static_cast<float>(rng.normal(0.0, kGaussianNoiseStd));
      break;
    case NoiseKind::Playground: {
      // Paul Kellet's economy pink filter over white noise.
      double b0 = 0, b1 = 0, b2 = 0;
      for (auto& s : out.samples) {
        const double w = rng.normal();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        s = static_cast<float>(0.1 * (b0 + b1 + b2 + w * 0.1848));
      }
      break;
    }
    case NoiseKind::Bark: {
      // Low-passed noise gated by short raised-cosine bursts, ~3 per second.
      std::vector<double> env(samples, 0.0);
      const std::size_t bursts = std::max<std::size_t>(1, (3 * samples) / static_cast<std::size_t>(rate));
      for (std::size_t b = 0; b < bursts; ++b) {
        const double len = rng.uniform(0.08, 0.2) * rate;
        const double start = rng.uniform(0.0, std::max(1.0, static_cast<double>(samples) - len));
        for (std::size_t i = 0; i < samples; ++i) {
          const double t = (static_cast<double>(i) - start) / len;
          if (t >= 0 && t <= 1) env[i] = std::max(env[i], 0.5 * (1 - std::cos(2 * std::numbers::pi * t)));
        }
      }
      double lp = 0;
      for (std::size_t i = 0; i < samples; ++i) {
        lp = 0.7 * lp + 0.3 * rng.normal();
        out.samples[i] = static_cast<float>(0.5 * env[i] * lp);
      }
      break;
    }
    case NoiseKind::Siren: {
      // Triangle sweep 600 -> 1200 -> 600 Hz with a 1 s period.
      double phase = rng.uniform(0.0, 2 * std::numbers::pi);
      for (std::size_t i = 0; i < samples; ++i) {
        const double t = std::fmod(static_cast<double>(i) / rate, 1.0);
        const double f = 600.0 + 600.0 * (t < 0.5 ? 2 * t : 2 - 2 * t);
        phase += 2 * std::numbers::pi * f / rate;
        out.samples[i] = static_cast<float>(0.5 * std::sin(phase));
      }
      break;
    }
  }
  return out;
}

MixResult mix_noise(const audio::AudioClip& clip, const audio::AudioClip& noise, double snr_db) {
  MixResult r;
  if (std::isinf(snr_db) && snr_db > 0) {
    r.clip = clip;
    return r;
  }
  const double px = audio::mean_power(clip);
  require(px > 0.0, Errc::SilentSignal, "signal has zero power");
  require(!noise.samples.empty(), Errc::SilentNoise, "noise is empty");

  const std::size_t n = clip.samples.size();
  std::vector<double> tiled(n);
  double pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tiled[i] = noise.samples[i % noise.samples.size()];
    pn += tiled[i] * tiled[i];
  }
  pn /= static_cast<double>(n);
  require(pn > 0.0, Errc::SilentNoise, "noise has zero power");

  r.alpha = std::sqrt(px / (pn * std::pow(10.0, snr_db / 10.0)));
  r.clip.sample_rate = clip.sample_rate;
  r.clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = clip.samples[i] + r.alpha * tiled[i];
    if (v > 1.0 || v < -1.0) {
      r.clipped = true;
      v = std::clamp(v, -1.0, 1.0);
    }
    r.clip.samples[i] = static_cast<float>(v);
  }
  return r;
}

SweepCurve noise_sweep(const Predictor& predictor, const training::Dataset& test, NoiseKind kind,
                       std::span<const double> levels, std::uint64_t seed, const audio::AudioClip* user_noise) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] < levels[i - 1], Errc::InvalidArgument, "noise levels must be sorted by descending SNR");
  SweepCurve curve;
  curve.name = std::string("noise_") + noise_name(kind);
  for (double level : levels) {
    char label[64];
    std::snprintf(label, sizeof label, "noise/%s/%g", noise_name(kind), level);
    const Rng level_rng(derive_seed(seed, label));
    std::vector<features::MfccMatrix> feats;
    feats.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto& clip = test.clips[i];
      if (std::isinf(level) && level > 0) {
        feats.push_back(features::mfcc(clip));
        continue;
      }
      Rng rng = level_rng.fork(std::to_string(i));
      const audio::AudioClip noise =
          user_noise ? *user_noise : make_noise(kind, clip.samples.size(), rng);
      if (user_noise) {
        // Random circular offset into the user recording.
        audio::AudioClip rotated = noise;
        std::rotate(rotated.samples.begin(),
                    rotated.samples.begin() + static_cast<long>(rng.below(rotated.samples.size())),
                    rotated.samples.end());
        feats.push_back(features::mfcc(mix_noise(clip, rotated, level).clip));
      } else {
        feats.push_back(features::mfcc(mix_noise(clip, noise, level).clip));
      }
    }
    curve.points.push_back({level, evaluate_features(predictor, feats, test.labels)});
  }
  return curve;
}

SweepCurve length_sweep(const Predictor& predictor, const training::Dataset& test) {
  SweepCurve curve;
  curve.name = "length";
  for (int tenth = 1; tenth <= 10; ++tenth) {
    const double seconds = tenth / 10.0;
    std::vector<features::MfccMatrix> feats;
    feats.reserve(test.size());
    for (const auto& clip : test.clips) {
      const auto kept = audio::fit_length(audio::fit_length(clip, seconds), audio::kClipSeconds);
      feats.push_back(features::mfcc(kept));
    }
    curve.points.push_back({seconds, evaluate_features(predictor, feats, test.labels)});
  }
  return curve;
}

SweepCurve filterbank_sweep(const Predictor& predictor, const training::Dataset& test) {
  const auto& bank = features::default_filterbank();
  std::vector<features::LogMelEnergies> energies;
  energies.reserve(test.size());
  for (const auto& clip : test.clips) energies.push_back(features::log_mel_energies(clip, bank));

  SweepCurve curve;
  curve.name = "filterbank";
  for (int band = 0; band < features::kNumBands; ++band) {
    std::vector<features::MfccMatrix> feats;
    feats.reserve(test.size());
    for (const auto& e : energies) {
      auto ablated = e;
      features::ablate_log_energies(ablated, band);
      feats.push_back(features::cepstra(ablated));
    }
    curve.points.push_back({bank.center_hz(band), evaluate_features(predictor, feats, test.labels)});
  }
  return curve;
}

std::string format_sweep_csv(const SweepCurve& curve) {
  std::string out = "axis,uar,sensitivity,specificity\n";
  char line[160];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g\n", p.axis, p.report.uar, p.report.sensitivity,
                  p.report.specificity);
    out += line;
  }
  return out;
}

Eigen::MatrixXd PcaResult::project(const Eigen::MatrixXd& x, int k) const {
  return (x.rowwise() - mean.transpose()) * components.leftCols(k);
}

Eigen::MatrixXd PcaResult::reconstruct(const Eigen::MatrixXd& scores) const {
  return (scores * components.leftCols(scores.cols()).transpose()).rowwise() + mean.transpose();
}

PcaResult pca_fit(const Eigen::MatrixXd& x) {
  require(x.rows() >= 2, Errc::EmptySet, "PCA needs at least 2 rows");
  PcaResult r;
  r.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  require(cov.trace() > 0.0, Errc::DegenerateData, "embeddings have zero total variance");

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::Index d = cov.rows();
  r.components.resize(d, d);
  r.explained_variance.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    // Eigen sorts ascending; round-off can leave tiny negative values.
    r.explained_variance(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
    r.components.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  r.explained_variance_ratio = r.explained_variance / r.explained_variance.sum();
  return r;
}

PcaReport pca_report(const model::Res8& net, const training::Dataset& data) {
  const auto inputs = data.inputs();
  const int c = net.config().n_channels;
  Eigen::MatrixXd emb(static_cast<Eigen::Index>(inputs.size()), c);
  for (std::size_t i = 0; i < inputs.size(); i += 50) {
    const std::size_t n = std::min<std::size_t>(50, inputs.size() - i);
    const auto e = net.embed(std::span(inputs).subspan(i, n));
    for (std::size_t r = 0; r < n; ++r)
      for (int k = 0; k < c; ++k) emb(static_cast<Eigen::Index>(i + r), k) = e[r * static_cast<std::size_t>(c) + k];
  }

  PcaReport rep;
  rep.pca = pca_fit(emb);
  char line[128];
  rep.cumulative_csv = "component,cumulative_ratio\n";
  double cum = 0.0;
  for (Eigen::Index k = 0; k < rep.pca.explained_variance_ratio.size(); ++k) {
    cum += rep.pca.explained_variance_ratio(k);
    std::snprintf(line, sizeof line, "%d,%.12g\n", static_cast<int>(k + 1), cum);
    rep.cumulative_csv += line;
  }
  const Eigen::MatrixXd proj = rep.pca.project(emb, std::min<int>(2, c));
  rep.projection_csv = "pc1,pc2,label\n";
  for (Eigen::Index i = 0; i < proj.rows(); ++i) {
    std::snprintf(line, sizeof line, "%.10g,%.10g,%d\n", proj(i, 0), proj.cols() > 1 ? proj(i, 1) : 0.0,
                  data.labels[static_cast<std::size_t>(i)]);
    rep.projection_csv += line;
  }
  return rep;
}

}  // namespace cryb::eval
