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
#include <optional>
#include <string>

#include "cryb/audio/audio.hpp"
#include "cryb/synth/manifest.hpp"

namespace cryb::synth {

inline constexpr int kHarmonics = 6;

/// Parameters of one synthetic cry (or cry-like utterance).
struct CrySpec {
  double f0_base = 450.0;        // Hz at the start of each burst
  double f0_slope = 0.0;         // Hz/s within a burst
  int burst_count = 3;
  double burst_duration_s = 0.15;
  double amplitude = 0.8;        // peak, in (0, 1]
  double harmonic_rolloff = 0.6; // harmonic h scaled by rolloff^(h-1)
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

/// 1.0 s at 8 kHz: six harmonics of a linearly swept F0, gated by
/// burst_count raised-cosine bursts, peak-normalized to spec.amplitude.
/// The seed drives burst placement jitter and harmonic phases.
audio::AudioClip synth_cry(const CrySpec& spec);

enum class Task { TargetCry, Words, Speakers, Gender };

const char* task_name(Task t) noexcept;
std::optional<Task> parse_task(std::string_view text);

struct CorpusRequest {
  Task task = Task::TargetCry;
  int n_subjects = 40;
  int clips_per_subject = 10;
  int class_count = 2;
  std::uint64_t seed = 1;
};

/// Number of asphyxia subjects in a target_cry corpus of n subjects: the
/// 340/1389 case share of the clinical database, at least 3.
int asphyxia_subject_count(int n_subjects);

/// Class-conditional spec for one clip. Exposed for tests.
CrySpec corpus_clip_spec(const CorpusRequest& req, int subject, int clip, int* label_out);

/// Writes out_dir/wav/*.wav and out_dir/manifest.csv; returns the manifest.
/// target_cry: label 0 = normal, 1 = asphyxia, one class per subject.
/// words: label = burst-count/sweep template, every subject says every word.
/// speakers: label = subject; rows carry explicit clip-level splits.
/// gender: 2 classes by F0 range, one class per subject.
Manifest synth_corpus(const CorpusRequest& req, const std::filesystem::path& out_dir);

}  // namespace cryb::synth
