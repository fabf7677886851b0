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

#include "cryb/training/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cryb/common/error.hpp"

namespace cryb::training {
namespace {

constexpr std::array<SplitName, 3> kSplits{SplitName::Train, SplitName::Val, SplitName::Test};

void fill_realized(SplitPlan& plan) {
  std::array<double, 3> count{};
  for (SplitName s : plan.row_splits) count[static_cast<std::size_t>(s)] += 1.0;
  const double total = static_cast<double>(plan.row_splits.size());
  for (std::size_t i = 0; i < 3; ++i) plan.realized[i] = total > 0 ? count[i] / total : 0.0;
}

}  // namespace

std::vector<std::size_t> SplitPlan::rows(SplitName split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < row_splits.size(); ++i)
    if (row_splits[i] == split) out.push_back(i);
  return out;
}

nlohmann::json SplitPlan::to_json() const {
  nlohmann::json subj = nlohmann::json::object();
  for (const auto& [id, s] : subjects) subj[id] = synth::split_name(s);
  return {{"row_level", row_level},
          {"realized", {{"train", realized[0]}, {"val", realized[1]}, {"test", realized[2]}}},
          {"subjects", subj}};
}

SplitPlan split_subjects(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed) {
  require(!manifest.rows.empty(), Errc::EmptySet, "manifest has no rows");
  for (double r : ratios) require(r > 0.0, Errc::InvalidArgument, "split ratios must be positive");

  // Clip counts per subject and label.
  std::map<std::string, std::map<int, std::size_t>> per_subject;
  for (const auto& row : manifest.rows) ++per_subject[row.subject_id][row.label];

  // Stratum = majority label, lowest label on ties.
  std::map<int, std::vector<std::string>> strata;
  std::map<std::string, std::size_t> clips;
  for (const auto& [id, counts] : per_subject) {
    int best = counts.begin()->first;
    std::size_t total = 0;
    for (const auto& [label, n] : counts) {
      if (n > counts.at(best)) best = label;
      total += n;
    }
    strata[best].push_back(id);
    clips[id] = total;
  }

  const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  Rng rng(seed);
  SplitPlan plan;
  for (auto& [label, ids] : strata) {
    require(ids.size() >= 3, Errc::TooFewSubjects,
            "class " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                " subject(s); at least 3 are needed for a subject-disjoint split");
    // Fisher-Yates with our own generator so the order is platform-independent.
    for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.below(i + 1)]);

    double stratum_clips = 0.0;
    for (const auto& id : ids) stratum_clips += static_cast<double>(clips[id]);
    std::array<double, 3> assigned{};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::size_t pick = 0;
      if (i < 3) {
        pick = i;
      } else {
        double best_deficit = -INFINITY;
        for (std::size_t s = 0; s < 3; ++s) {
          const double deficit = ratios[s] / ratio_sum * stratum_clips - assigned[s];
          if (deficit > best_deficit) {
            best_deficit = deficit;
            pick = s;
          }
        }
      }
      assigned[pick] += static_cast<double>(clips[ids[i]]);
      plan.subjects[ids[i]] = kSplits[pick];
    }
  }

  plan.row_splits.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) plan.row_splits.push_back(plan.subjects.at(row.subject_id));
  fill_realized(plan);
  return plan;
}

SplitPlan plan_splits(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed) {
  if (!manifest.has_explicit_splits()) return split_subjects(manifest, ratios, seed);
  SplitPlan plan;
  plan.row_level = true;
  for (const auto& row : manifest.rows) plan.row_splits.push_back(*row.split);
  fill_realized(plan);
  return plan;
}

BalancedSampler::BalancedSampler(std::span<const int> labels, int n_classes, int batch_size)
    : by_class_(static_cast<std::size_t>(std::max(n_classes, 0))), n_rows_(labels.size()), batch_size_(batch_size) {
  require(n_classes >= 2, Errc::InvalidArgument, "balanced sampling needs at least 2 classes");
  require(batch_size >= 1, Errc::InvalidArgument, "batch_size must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < n_classes, Errc::BadClassIndex, "label out of range");
    by_class_[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < by_class_.size(); ++c)
    require(!by_class_[c].empty(), Errc::EmptyClass, "class " + std::to_string(c) + " has no training rows");
}

std::size_t BalancedSampler::draw(Rng& rng) const {
  const auto& rows = by_class_[rng.below(by_class_.size())];
  return rows[rng.below(rows.size())];
}

std::vector<std::size_t> BalancedSampler::batch(Rng& rng) const {
  std::vector<std::size_t> out(static_cast<std::size_t>(batch_size_));
  for (auto& idx : out) idx = draw(rng);
  return out;
}

std::size_t BalancedSampler::batches_per_epoch() const noexcept {
  const auto bs = static_cast<std::size_t>(batch_size_);
  return (n_rows_ + bs - 1) / bs;
}

std::vector<std::vector<std::size_t>> BalancedSampler::epoch(Rng& rng) const {
  std::vector<std::vector<std::size_t>> out(batches_per_epoch());
  for (auto& b : out) b = batch(rng);
  return out;
}

audio::AudioClip shift_samples(const audio::AudioClip& clip, long samples) {
  audio::AudioClip out;
  out.sample_rate = clip.sample_rate;
  const long n = static_cast<long>(clip.samples.size());
  out.samples.assign(clip.samples.size(), 0.0f);
  for (long i = 0; i < n; ++i) {
    const long src = i - samples;
    if (src >= 0 && src < n) out.samples[static_cast<std::size_t>(i)] = clip.samples[static_cast<std::size_t>(src)];
  }
  return out;
}

audio::AudioClip time_shift(const audio::AudioClip& clip, Rng& rng, double max_shift_s) {
  const double s = rng.uniform(-max_shift_s, max_shift_s);
  return shift_samples(clip, std::lround(s * clip.sample_rate));
}

std::vector<const features::MfccMatrix*> Dataset::inputs() const {
  std::vector<const features::MfccMatrix*> out;
  out.reserve(mfcc.size());
  for (const auto& m : mfcc) out.push_back(&m);
  return out;
}

Dataset load_dataset(const Manifest& manifest, std::span<const std::size_t> rows) {
  Dataset d;
  auto load = [&](const synth::ManifestRow& row) {
    d.clips.push_back(audio::to_pipeline_clip(audio::read_wav(manifest.resolve(row))));
    d.mfcc.push_back(features::cached_mfcc(d.clips.back()));
    d.labels.push_back(row.label);
    d.subjects.push_back(row.subject_id);
  };
  for (std::size_t i : rows) {
    require(i < manifest.rows.size(), Errc::InvalidArgument, "row index out of range");
    load(manifest.rows[i]);
  }
  return d;
}

Dataset load_dataset(const Manifest& manifest) {
  std::vector<std::size_t> all(manifest.rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return load_dataset(manifest, all);
}

}  // namespace cryb::training
