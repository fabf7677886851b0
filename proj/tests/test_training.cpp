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

#include <cmath>
#include <set>

#include "doctest.h"

#include "cryb/common/error.hpp"
#include "cryb/eval/metrics.hpp"
#include "cryb/synth/synth.hpp"
#include "cryb/training/data.hpp"
#include "cryb/training/trainer.hpp"
#include "support/temp_dir.hpp"

using namespace cryb;
using namespace cryb::training;
using synth::Manifest;
using synth::ManifestRow;

namespace {

template <typename Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return Errc::InvalidArgument;
}

// n_subjects subjects with `clips` rows each; the first `positives` are label 1.
Manifest toy_manifest(int n_subjects, int clips, int positives) {
  Manifest m;
  for (int s = 0; s < n_subjects; ++s)
    for (int c = 0; c < clips; ++c)
      m.rows.push_back({"s" + std::to_string(s) + "_" + std::to_string(c) + ".wav", s < positives ? 1 : 0,
                        "subj" + std::to_string(s), std::nullopt});
  return m;
}

std::map<SplitName, int> subjects_per_split(const SplitPlan& p) {
  std::map<SplitName, int> n;
  for (const auto& [id, s] : p.subjects) ++n[s];
  return n;
}

}  // namespace

TEST_CASE("ten subjects of one class split 6/2/2") {
  const auto m = toy_manifest(10, 4, 0);
  const auto plan = split_subjects(m, kDefaultRatios, 1);
  auto n = subjects_per_split(plan);
  CHECK(n[SplitName::Train] == 6);
  CHECK(n[SplitName::Val] == 2);
  CHECK(n[SplitName::Test] == 2);
  CHECK(plan.realized[0] == doctest::Approx(0.6));
}

TEST_CASE("splits are subject-disjoint, stratified and seeded") {
  const auto m = toy_manifest(40, 10, 10);
  const auto plan = split_subjects(m, kDefaultRatios, 7);
  std::map<std::string, std::set<SplitName>> where;
  for (std::size_t i = 0; i < m.rows.size(); ++i) where[m.rows[i].subject_id].insert(plan.row_splits[i]);
  for (const auto& [id, s] : where) CHECK(s.size() == 1);
  CHECK(std::abs(plan.realized[0] - 0.6) <= 0.05);
  CHECK(std::abs(plan.realized[1] - 0.2) <= 0.05);
  CHECK(std::abs(plan.realized[2] - 0.2) <= 0.05);
  for (SplitName s : {SplitName::Train, SplitName::Val, SplitName::Test}) {
    std::set<int> labels;
    for (auto r : plan.rows(s)) labels.insert(m.rows[r].label);
    CHECK(labels.size() == 2);
  }
  CHECK(split_subjects(m, kDefaultRatios, 7).subjects == plan.subjects);
  bool differs = false;
  for (std::uint64_t seed = 8; seed < 12 && !differs; ++seed)
    differs = split_subjects(m, kDefaultRatios, seed).subjects != plan.subjects;
  CHECK(differs);
}

TEST_CASE("too few subjects in a stratum") {
  CHECK(code_of([] { split_subjects(toy_manifest(5, 2, 2), kDefaultRatios, 1); }) == Errc::TooFewSubjects);
  CHECK(code_of([] { split_subjects(toy_manifest(2, 2, 0), kDefaultRatios, 1); }) == Errc::TooFewSubjects);
}

TEST_CASE("explicit splits are honored row by row") {
  auto m = toy_manifest(2, 5, 1);
  const SplitName cycle[] = {SplitName::Train, SplitName::Train, SplitName::Val, SplitName::Test, SplitName::Train};
  for (std::size_t i = 0; i < m.rows.size(); ++i) m.rows[i].split = cycle[i % 5];
  const auto plan = plan_splits(m, kDefaultRatios, 3);
  CHECK(plan.row_level);
  for (std::size_t i = 0; i < m.rows.size(); ++i) CHECK(plan.row_splits[i] == *m.rows[i].split);
  CHECK(plan.rows(SplitName::Train).size() == 6);
}

TEST_CASE("balanced sampler") {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 10; ++i) labels[i] = 1;
  BalancedSampler s(labels, 2, 50);
  CHECK(s.batches_per_epoch() == 2);
  Rng rng(4);
  long pos = 0, total = 0;
  for (int b = 0; b < 400; ++b)
    for (auto i : s.batch(rng)) {
      pos += labels[i];
      ++total;
    }
  CHECK(std::abs(static_cast<double>(pos) / total - 0.5) <= 0.02);

  Rng a(9), b(9);
  CHECK(s.epoch(a) == s.epoch(b));
  std::vector<int> odd(101, 0);
  odd[0] = 1;
  CHECK(BalancedSampler(odd, 2, 50).batches_per_epoch() == 3);

  CHECK(code_of([&] { BalancedSampler(std::vector<int>(10, 0), 2, 5); }) == Errc::EmptyClass);
}

TEST_CASE("time shift") {
  audio::AudioClip clip{std::vector<float>(8000), 8000};
  for (int i = 0; i < 8000; ++i) clip.samples[i] = static_cast<float>(std::sin(0.01 * i)) + 0.1f;
  CHECK(shift_samples(clip, 0).samples == clip.samples);
  const auto d = shift_samples(clip, 800);
  REQUIRE(d.samples.size() == 8000);
  for (int i = 0; i < 800; ++i) CHECK(d.samples[i] == 0.0f);
  for (int i = 800; i < 8000; i += 97) CHECK(d.samples[i] == clip.samples[i - 800]);
  const auto a = shift_samples(clip, -800);
  for (int i = 7200; i < 8000; ++i) CHECK(a.samples[i] == 0.0f);
  CHECK(a.samples[0] == clip.samples[800]);

  auto energy = [](const audio::AudioClip& c) {
    double e = 0;
    for (float v : c.samples) e += static_cast<double>(v) * v;
    return e;
  };
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto s = time_shift(clip, rng, 0.1);
    CHECK(s.samples.size() == 8000);
    CHECK(energy(s) <= energy(clip) + 1e-9);
    long zeros = 0;
    for (float v : s.samples) zeros += v == 0.0f;
    CHECK(zeros <= 800);
  }
  Rng z(3);
  CHECK(time_shift(clip, z, 0.0).samples == clip.samples);
}

TEST_CASE("train config") {
  TrainConfig c;
  CHECK(c.lr_at(1) == 1e-3);
  CHECK(c.lr_at(15) == 1e-3);
  CHECK(c.lr_at(16) == 1e-4);
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    TrainConfig t;
    mutate(t);
    return code_of([&] { t.validate(); }) == Errc::BadConfig;
  };
  CHECK(bad([](TrainConfig& t) { t.epochs = 0; }));
  CHECK(bad([](TrainConfig& t) { t.batch_size = 0; }));
  CHECK(bad([](TrainConfig& t) { t.lr_initial = -1; }));
  CHECK(bad([](TrainConfig& t) { t.momentum = 1.0; }));
  CHECK(bad([](TrainConfig& t) { t.lr_switch_epoch = 50; }));
  TrainConfig j;
  j.seed = 99;
  j.epochs = 7;
  j.lr_switch_epoch = 3;
  const auto r = TrainConfig::from_json(j.to_json());
  CHECK(r.seed == 99);
  CHECK(r.epochs == 7);
  CHECK(r.lr_switch_epoch == 3);
  CHECK(TrainConfig::from_json(nlohmann::json::object()).batch_size == 50);
}

TEST_CASE("short training run") {
  TempDir dir("train_short");
  synth::CorpusRequest req;
  req.n_subjects = 10;
  req.clips_per_subject = 6;
  req.seed = 5;
  const auto m = synth::synth_corpus(req, dir.path());
  const auto plan = split_subjects(m, kDefaultRatios, 1);
  const auto tr = load_dataset(m, plan.rows(SplitName::Train));
  const auto va = load_dataset(m, plan.rows(SplitName::Val));
  CHECK(tr.size() + va.size() + load_dataset(m, plan.rows(SplitName::Test)).size() == 60);

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr_switch_epoch = 1;
  cfg.batch_size = 16;
  cfg.seed = 2;
  model::Res8Config mc;
  mc.n_channels = 8;
  mc.n_res_blocks = 2;

  auto run = [&](std::vector<EpochRecord>* seen) {
    Rng init = Rng(cfg.seed).fork("init");
    model::Res8 net(mc, init);
    auto result = train(net, tr, va, cfg, [&](const EpochRecord& r) { seen->push_back(r); });
    return std::make_pair(std::move(result), predict_all(net, va));
  };
  std::vector<EpochRecord> seen;
  auto [result, pred] = run(&seen);
  REQUIRE(result.history.size() == 3);
  CHECK(seen.size() == 3);
  double best = 0;
  for (const auto& h : result.history) {
    CHECK(std::isfinite(h.train_loss));
    best = std::max(best, h.val_uar);
  }
  CHECK(result.best_val_uar == best);
  CHECK(result.history[result.best_epoch - 1].val_uar == best);
  for (int e = 0; e < result.best_epoch - 1; ++e) CHECK(result.history[e].val_uar < best);
  CHECK(result.history[0].lr == 1e-3);
  CHECK(result.history[2].lr == 1e-4);
  // The model is left at the best epoch, so its validation UAR matches.
  CHECK(eval::make_report(va.labels, pred, 2).uar == doctest::Approx(best).epsilon(1e-12));

  std::vector<EpochRecord> again;
  auto [r2, p2] = run(&again);
  CHECK(format_history_csv(r2.history) == format_history_csv(result.history));
  CHECK(format_history_csv(result.history).rfind("epoch,lr,train_loss,val_uar\n", 0) == 0);
}
