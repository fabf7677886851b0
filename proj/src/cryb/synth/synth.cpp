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

#include "cryb/synth/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cryb/common/error.hpp"
#include "cryb/common/rng.hpp"

namespace cryb::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNyquist = audio::kPipelineRate / 2.0;

// Lowest instantaneous F0 a burst may sweep down to.
constexpr double kMinSweepHz = 50.0;

std::string subject_id(Task task, int subject) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-s%03d", task_name(task), subject);
  return buf;
}

// Keeps f0 + slope * duration above kMinSweepHz.
double limit_slope(double f0, double slope, double duration) {
  return std::max(slope, -(f0 - kMinSweepHz - 1.0) / duration);
}

// Random cry-like content for the speaker and gender tasks.
CrySpec free_content(Rng& rng, double f0) {
  CrySpec s;
  s.f0_base = f0;
  s.burst_count = rng.integer(1, 4);
  s.burst_duration_s = rng.uniform(0.1, 0.9 / s.burst_count);
  s.f0_slope = limit_slope(f0, rng.uniform(-400.0, 400.0), s.burst_duration_s);
  s.amplitude = rng.uniform(0.3, 1.0);
  s.harmonic_rolloff = rng.uniform(0.4, 0.8);
  return s;
}

}  // namespace

void CrySpec::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, Errc::InvalidSpec, what); };
  check(f0_base >= 100.0 && f0_base <= 1200.0, "f0_base must lie in [100, 1200] Hz");
  check(burst_count >= 1, "burst_count must be at least 1");
  check(burst_duration_s > 0.0, "burst_duration_s must be positive");
  check(burst_count * burst_duration_s <= 1.0 + 1e-12, "bursts do not fit in 1.0 s");
  check(amplitude > 0.0 && amplitude <= 1.0, "amplitude must lie in (0, 1]");
  check(harmonic_rolloff > 0.0 && harmonic_rolloff < 1.0, "harmonic_rolloff must lie in (0, 1)");
  check(f0_base + f0_slope * burst_duration_s >= kMinSweepHz, "F0 sweep falls below 50 Hz");
}

audio::AudioClip synth_cry(const CrySpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = audio::kPipelineRate;
  const double dt = 1.0 / audio::kPipelineRate;
  std::vector<double> signal(static_cast<std::size_t>(n), 0.0);

  const double slot = 1.0 / spec.burst_count;
  for (int b = 0; b < spec.burst_count; ++b) {
    const double start = slot * b + rng.uniform() * (slot - spec.burst_duration_s);
    std::array<double, kHarmonics> phase;
    for (double& p : phase) p = rng.uniform(0.0, kTwoPi);
    const int first = static_cast<int>(std::ceil(start / dt));
    const int last = std::min(n - 1, static_cast<int>(std::floor((start + spec.burst_duration_s) / dt)));
    for (int i = std::max(first, 0); i <= last; ++i) {
      const double tau = i * dt - start;
      const double envelope = 0.5 * (1.0 - std::cos(kTwoPi * tau / spec.burst_duration_s));
      const double f_inst = spec.f0_base + spec.f0_slope * tau;
      const double cycles = spec.f0_base * tau + 0.5 * spec.f0_slope * tau * tau;
      double v = 0.0, gain = 1.0;
      for (int h = 1; h <= kHarmonics; ++h, gain *= spec.harmonic_rolloff) {
        if (h * f_inst >= kNyquist) break;
        v += gain * std::sin(kTwoPi * h * cycles + phase[h - 1]);
      }
      signal[static_cast<std::size_t>(i)] += envelope * v;
    }
  }

  double peak = 0.0;
  for (double v : signal) peak = std::max(peak, std::abs(v));
  require(peak > 0.0, Errc::InvalidSpec, "spec produced a silent clip");
  audio::AudioClip clip;
  clip.sample_rate = audio::kPipelineRate;
  clip.samples.resize(signal.size());
  const double scale = spec.amplitude / peak;
  for (std::size_t i = 0; i < signal.size(); ++i) clip.samples[i] = static_cast<float>(signal[i] * scale);
  return clip;
}

const char* task_name(Task t) noexcept {
  switch (t) {
    case Task::TargetCry: return "target_cry";
    case Task::Words: return "words";
    case Task::Speakers: return "speakers";
    case Task::Gender: return "gender";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view text) {
  for (Task t : {Task::TargetCry, Task::Words, Task::Speakers, Task::Gender})
    if (text == task_name(t)) return t;
  return std::nullopt;
}

int asphyxia_subject_count(int n_subjects) {
  const int share = static_cast<int>(std::lround(n_subjects * 340.0 / 1389.0));
  return std::clamp(share, 3, std::max(3, n_subjects - 3));
}

CrySpec corpus_clip_spec(const CorpusRequest& req, int subject, int clip, int* label_out) {
  // Subject-level traits come from a stream keyed by subject only, so they are
  // shared by all of that subject's clips.
  Rng subject_rng(derive_seed(req.seed, std::string(task_name(req.task)) + "/subject/" + std::to_string(subject)));
  Rng clip_rng(derive_seed(req.seed, std::string(task_name(req.task)) + "/clip/" + std::to_string(subject) + "/" +
                                         std::to_string(clip)));
  CrySpec s;
  int label = 0;
  switch (req.task) {
    case Task::TargetCry: {
      // The first asphyxia_subject_count(n) subjects are cases.
      const bool asphyxia = subject < asphyxia_subject_count(req.n_subjects);
      label = asphyxia ? 1 : 0;
      const double lo = asphyxia ? 550.0 : 350.0, hi = asphyxia ? 800.0 : 500.0;
      const double center = subject_rng.uniform(lo, hi);
      const double rolloff = subject_rng.uniform(0.45, 0.75);
      s.f0_base = std::clamp(center + clip_rng.normal(0.0, 15.0), lo, hi);
      s.harmonic_rolloff = rolloff;
      if (asphyxia) {
        s.amplitude = clip_rng.uniform(0.2, 0.5);
        s.burst_count = clip_rng.integer(1, 2);
        s.burst_duration_s = clip_rng.uniform(0.08, 0.12);
        s.f0_slope = clip_rng.uniform(200.0, 800.0);
      } else {
        s.amplitude = clip_rng.uniform(0.6, 1.0);
        s.burst_count = clip_rng.integer(3, 5);
        s.burst_duration_s = clip_rng.uniform(0.12, 0.18);
        s.f0_slope = clip_rng.uniform(-300.0, 100.0);
      }
      break;
    }
    case Task::Words: {
      label = clip % req.class_count;
      const double center = subject_rng.uniform(150.0, 1000.0);
      s.f0_base = std::clamp(center + clip_rng.normal(0.0, 10.0), 100.0, 1200.0);
      s.burst_count = 1 + label % 4;
      s.burst_duration_s = std::min(0.2, 0.9 / s.burst_count);
      const double direction = (label / 4) % 2 == 0 ? 1.0 : -1.0;
      s.f0_slope = limit_slope(s.f0_base, direction * 600.0 * (1 + label / 8), s.burst_duration_s);
      s.amplitude = clip_rng.uniform(0.3, 1.0);
      s.harmonic_rolloff = subject_rng.uniform(0.4, 0.8);
      break;
    }
    case Task::Speakers: {
      label = subject;
      // Speakers are spread evenly over [120, 1000] Hz with a little jitter.
      const double spacing = 880.0 / std::max(1, req.n_subjects - 1);
      const double center = 120.0 + spacing * subject + subject_rng.uniform(-0.25, 0.25) * spacing;
      s = free_content(clip_rng, std::clamp(center + clip_rng.normal(0.0, 5.0), 100.0, 1200.0));
      s.harmonic_rolloff = subject_rng.uniform(0.4, 0.8);
      break;
    }
    case Task::Gender: {
      label = subject % 2;
      const double lo = label == 0 ? 100.0 : 190.0, hi = label == 0 ? 170.0 : 300.0;
      const double center = subject_rng.uniform(lo, hi);
      s = free_content(clip_rng, std::clamp(center + clip_rng.normal(0.0, 8.0), lo, hi));
      break;
    }
  }
  s.seed = clip_rng.next_u64();
  if (label_out) *label_out = label;
  return s;
}

Manifest synth_corpus(const CorpusRequest& req, const std::filesystem::path& out_dir) {
  auto check = [](bool ok, const std::string& what) { require(ok, Errc::InvalidArgument, what); };
  check(req.class_count >= 2, "class_count must be at least 2");
  check(req.n_subjects >= req.class_count, "n_subjects must be at least class_count");
  check(req.clips_per_subject >= 1, "clips_per_subject must be positive");
  if (req.task == Task::TargetCry || req.task == Task::Gender)
    check(req.class_count == 2, std::string(task_name(req.task)) + " has exactly 2 classes");
  if (req.task == Task::Speakers) check(req.class_count == req.n_subjects, "speakers needs class_count == n_subjects");
  if (req.task == Task::TargetCry) check(req.n_subjects >= 6, "target_cry needs at least 3 subjects per class");

  Manifest m;
  m.base_dir = out_dir;
  for (int subject = 0; subject < req.n_subjects; ++subject) {
    for (int clip = 0; clip < req.clips_per_subject; ++clip) {
      int label = 0;
      const CrySpec spec = corpus_clip_spec(req, subject, clip, &label);
      char name[64];
      std::snprintf(name, sizeof name, "wav/s%03d_c%03d.wav", subject, clip);
      audio::write_wav(synth_cry(spec), out_dir / name);
      ManifestRow row{name, label, subject_id(req.task, subject), std::nullopt};
      if (req.task == Task::Speakers) {
        constexpr SplitName kCycle[5] = {SplitName::Train, SplitName::Train, SplitName::Train, SplitName::Val,
                                         SplitName::Test};
        row.split = kCycle[clip % 5];
      }
      m.rows.push_back(std::move(row));
    }
  }
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

}  // namespace cryb::synth
