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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cryb/audio/audio.hpp"
#include "cryb/common/rng.hpp"
#include "cryb/features/mfcc.hpp"
#include "cryb/synth/manifest.hpp"

namespace cryb::training {

using synth::Manifest;
using synth::SplitName;

inline constexpr std::array<double, 3> kDefaultRatios{0.6, 0.2, 0.2};

/// Assignment of manifest rows to train/val/test. Normally built over whole
/// subjects; a manifest whose rows all carry a split is honored row by row.
struct SplitPlan {
  std::map<std::string, SplitName> subjects;  // empty for row-level plans
  std::vector<SplitName> row_splits;          // one per manifest row
  std::array<double, 3> realized{};           // clip fractions, train/val/test
  bool row_level = false;

  std::vector<std::size_t> rows(SplitName split) const;
  nlohmann::json to_json() const;
};

/// Subject-disjoint split, stratified by each subject's majority label.
/// Per stratum the subjects are shuffled, one goes to each split, and the rest
/// are handed one at a time to the split furthest below its target clip count
/// (ties: train, val, test). Throws TooFewSubjects when a stratum has fewer
/// than 3 subjects.
SplitPlan split_subjects(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed);

/// split_subjects, or the manifest's own splits when every row has one.
SplitPlan plan_splits(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed);

/// Class-balanced mini-batches: every slot picks a class with probability 1/K,
/// then a row of that class uniformly, with replacement.
class BalancedSampler {
 public:
  /// labels[i] is the class of training row i. Throws EmptyClass when any of
  /// the n_classes has no rows.
  BalancedSampler(std::span<const int> labels, int n_classes, int batch_size);

  std::size_t draw(Rng& rng) const;
  std::vector<std::size_t> batch(Rng& rng) const;
  /// ceil(n_rows / batch_size) batches.
  std::vector<std::vector<std::size_t>> epoch(Rng& rng) const;
  std::size_t batches_per_epoch() const noexcept;

 private:
  std::vector<std::vector<std::size_t>> by_class_;
  std::size_t n_rows_;
  int batch_size_;
};

/// Delays (positive) or advances (negative) the clip by `samples`, zero-filling
/// the vacated end. Length is preserved.
audio::AudioClip shift_samples(const audio::AudioClip& clip, long samples);

/// shift_samples by round(s * rate) with s ~ U(-max_shift_s, +max_shift_s).
audio::AudioClip time_shift(const audio::AudioClip& clip, Rng& rng, double max_shift_s = 0.1);

/// Pipeline-ready clips with their MFCCs.
struct Dataset {
  std::vector<audio::AudioClip> clips;
  std::vector<features::MfccMatrix> mfcc;
  std::vector<int> labels;
  std::vector<std::string> subjects;

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<const features::MfccMatrix*> inputs() const;
};

/// Reads, resamples and featurizes the chosen rows (all rows if `rows` is
/// empty). MFCCs go through the CRYB_CACHE cache when it is set.
Dataset load_dataset(const Manifest& manifest, std::span<const std::size_t> rows);
Dataset load_dataset(const Manifest& manifest);

}  // namespace cryb::training
