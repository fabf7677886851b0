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

#include "cryb/experiment/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"
#include "cryb/eval/evaluate.hpp"
#include "cryb/model/checkpoint.hpp"
#include "cryb/svm/svm.hpp"
#include "cryb/synth/synth.hpp"
#include "cryb/training/trainer.hpp"

namespace cryb::experiment {
namespace fs = std::filesystem;
namespace {

constexpr std::array<synth::SplitName, 3> kSplits{synth::SplitName::Train, synth::SplitName::Val,
                                                  synth::SplitName::Test};

// Typed config access; type errors and missing keys become BadConfig.
template <typename T>
T get(const json& cfg, const char* key) {
  if (!cfg.contains(key)) fail(Errc::BadConfig, std::string("missing config key '") + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::BadConfig, std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& cfg, const char* key, T fallback) {
  return cfg.contains(key) ? get<T>(cfg, key) : fallback;
}

void require_object(const json& cfg) { require(cfg.is_object(), Errc::BadConfig, "config must be a JSON object"); }

void write_text(const fs::path& path, const std::string& text) { write_file_bytes(path, text); }

// config.json and VERSION in the output directory.
void stamp(const fs::path& out, const std::string& command, const json& cfg) {
  fs::create_directories(out);
  json copy = cfg;
  copy["command"] = command;
  write_text(out / "config.json", copy.dump(2) + "\n");
  write_text(out / "VERSION", version_string() + "\n");
}

std::array<double, 3> ratios_of(const json& cfg) {
  const auto v = get_or<std::vector<double>>(cfg, "ratios", {0.6, 0.2, 0.2});
  require(v.size() == 3, Errc::BadConfig, "ratios must list train, val and test fractions");
  return {v[0], v[1], v[2]};
}

std::vector<std::uint64_t> seeds_of(const json& cfg) {
  auto seeds = get_or<std::vector<std::uint64_t>>(cfg, "seeds", {});
  if (seeds.empty() && cfg.contains("seed")) seeds.push_back(get<std::uint64_t>(cfg, "seed"));
  require(!seeds.empty(), Errc::BadConfig, "seeds must be nonempty");
  return seeds;
}

struct Splits {
  training::SplitPlan plan;
  training::Dataset train, val, test;
};

// The split stream of a seed; shared by every command so that a model and
// its robustness/PCA analysis see the same test subjects.
Splits load_splits(const synth::Manifest& m, const std::array<double, 3>& ratios, std::uint64_t seed) {
  Splits s;
  s.plan = training::plan_splits(m, ratios, derive_seed(seed, "split"));
  s.train = training::load_dataset(m, s.plan.rows(kSplits[0]));
  s.val = training::load_dataset(m, s.plan.rows(kSplits[1]));
  s.test = training::load_dataset(m, s.plan.rows(kSplits[2]));
  require(s.train.size() > 0 && s.val.size() > 0 && s.test.size() > 0, Errc::EmptySet,
          "every split needs at least one row");
  return s;
}

training::Dataset load_test_split(const synth::Manifest& m, const std::array<double, 3>& ratios,
                                  std::uint64_t seed) {
  const auto plan = training::plan_splits(m, ratios, derive_seed(seed, "split"));
  return training::load_dataset(m, plan.rows(kSplits[2]));
}

model::Res8Config model_config(const json& cfg, int n_classes) {
  model::Res8Config c;
  if (cfg.contains("model")) {
    json j = model::Res8Config{}.to_json();
    j.update(cfg.at("model"));
    j["n_classes"] = n_classes;
    c = model::Res8Config::from_json(j);
  }
  c.n_classes = n_classes;
  c.validate();
  return c;
}

training::TrainConfig train_config(const json& cfg, std::uint64_t seed) {
  auto t = training::TrainConfig::from_json(cfg.value("train", json::object()));
  t.seed = seed;
  t.validate();
  return t;
}

training::EpochCallback progress(const json& cfg, const std::string& tag) {
  if (!get_or<bool>(cfg, "verbose", false)) return {};
  return [tag](const training::EpochRecord& r) {
    std::fprintf(stderr, "[%s] epoch %d lr %g loss %.5f val_uar %.4f\n", tag.c_str(), r.epoch, r.lr, r.train_loss,
                 r.val_uar);
  };
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(n); NaN for a single value
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() < 2) {
    r.se = std::nan("");
    return r;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  return r;
}

// Table-style "86.5 (1.1)" in percent.
std::string format_mean_se(const MeanSe& m) {
  char buf[48];
  if (std::isnan(m.se))
    std::snprintf(buf, sizeof buf, "%.1f (n/a)", 100.0 * m.mean);
  else
    std::snprintf(buf, sizeof buf, "%.1f (%.1f)", 100.0 * m.mean, 100.0 * m.se);
  return buf;
}

struct SeedRow {
  std::uint64_t seed;
  eval::EvalReport report;
};

// results.csv (per-seed rows in percent plus a "mean (SE)" row) and
// summary.json.
json write_results(const fs::path& out, const std::string& tag, const std::vector<SeedRow>& rows) {
  std::string csv = "seed,uar,sensitivity,specificity\n";
  std::vector<double> uar, sens, spec;
  json per_seed = json::array();
  for (const auto& r : rows) {
    csv += std::to_string(r.seed) + "," + percent(r.report.uar) + "," + percent(r.report.sensitivity) + "," +
           percent(r.report.specificity) + "\n";
    uar.push_back(r.report.uar);
    sens.push_back(r.report.sensitivity);
    spec.push_back(r.report.specificity);
    per_seed.push_back({{"seed", r.seed}, {"report", r.report.to_json()}});
  }
  const MeanSe mu = mean_se(uar), ms = mean_se(sens), mp = mean_se(spec);
  csv += "mean (SE)," + format_mean_se(mu) + "," + format_mean_se(ms) + "," + format_mean_se(mp) + "\n";
  write_text(out / "results.csv", csv);

  auto stat = [](const MeanSe& m) { return json{{"mean", m.mean}, {"se", std::isnan(m.se) ? json() : json(m.se)}}; };
  json summary = {{"model", tag},
                  {"n_seeds", rows.size()},
                  {"uar", stat(mu)},
                  {"sensitivity", stat(ms)},
                  {"specificity", stat(mp)},
                  {"table_row", {format_mean_se(mu), format_mean_se(ms), format_mean_se(mp)}},
                  {"seeds", per_seed}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return summary;
}

fs::path out_dir_of(const json& cfg) { return fs::path(get<std::string>(cfg, "out_dir")); }

synth::Manifest manifest_of(const json& cfg) { return synth::read_manifest(get<std::string>(cfg, "manifest")); }

}  // namespace

std::string version_string() { return std::string("cryb ") + CRYB_VERSION + " (" + CRYB_GIT_DESCRIBE + ")"; }

json run_synth(const json& cfg) {
  require_object(cfg);
  synth::CorpusRequest req;
  const auto task_text = get<std::string>(cfg, "task");
  const auto task = synth::parse_task(task_text);
  require(task.has_value(), Errc::BadConfig, "unknown task '" + task_text + "'");
  req.task = *task;
  req.n_subjects = get<int>(cfg, "n_subjects");
  req.clips_per_subject = get<int>(cfg, "clips_per_subject");
  req.class_count = get_or<int>(cfg, "class_count", req.task == synth::Task::Speakers ? req.n_subjects : 2);
  req.seed = get<std::uint64_t>(cfg, "seed");
  const fs::path out = out_dir_of(cfg);
  stamp(out, "data synth", cfg);
  const auto m = synth::synth_corpus(req, out);
  return {{"manifest", (out / "manifest.csv").string()},
          {"rows", m.rows.size()},
          {"subjects", m.subjects().size()},
          {"classes", m.class_count()}};
}

json run_import(const json& cfg) {
  require_object(cfg);
  const auto in = manifest_of(cfg);
  in.validate();
  const fs::path out = out_dir_of(cfg);
  stamp(out, "data import", cfg);
  synth::Manifest m;
  m.base_dir = out;
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    const auto& row = in.rows[i];
    const auto clip = audio::to_pipeline_clip(audio::read_wav(in.resolve(row)));
    char name[48];
    std::snprintf(name, sizeof name, "wav/%06zu.wav", i);
    audio::write_wav(clip, out / name);
    m.rows.push_back({name, row.label, row.subject_id, row.split});
  }
  synth::write_manifest(m, out / "manifest.csv");
  return {{"manifest", (out / "manifest.csv").string()}, {"rows", m.rows.size()}};
}

json run_pretrain(const json& cfg) {
  require_object(cfg);
  const auto m = manifest_of(cfg);
  m.validate();
  require(m.class_count() >= 2, Errc::BadConfig, "source manifest needs at least 2 classes");
  const auto seed = seeds_of(cfg).front();
  const auto mc = model_config(cfg, m.class_count());
  const auto tc = train_config(cfg, seed);
  const fs::path out = out_dir_of(cfg);
  const std::string task = get_or<std::string>(cfg, "source_task", fs::path(get<std::string>(cfg, "manifest")).parent_path().filename().string());
  stamp(out, "pretrain", cfg);

  const auto s = load_splits(m, ratios_of(cfg), seed);
  Rng init = Rng(seed).fork("init");
  model::Res8 net(mc, init);
  const auto res = training::train(net, s.train, s.val, tc, progress(cfg, task));
  const auto test = eval::evaluate(eval::Res8Predictor(net), s.test);
  double correct = 0;
  for (int c = 0; c < test.n_classes(); ++c) correct += static_cast<double>(test.confusion[c][c]);
  const double accuracy = correct / static_cast<double>(test.n);

  model::CheckpointMeta meta;
  meta.source_task = task;
  meta.seed = seed;
  meta.metrics = {{"best_epoch", res.best_epoch},
                  {"best_val_uar", res.best_val_uar},
                  {"test_accuracy", accuracy},
                  {"test_uar", test.uar}};
  model::save_checkpoint(net, meta, out / "checkpoint.cryb");
  write_text(out / "history.csv", training::format_history_csv(res.history));
  write_text(out / "split.json", s.plan.to_json().dump(2) + "\n");
  json summary = meta.metrics;
  summary["source_task"] = task;
  summary["checkpoint"] = (out / "checkpoint.cryb").string();
  summary["test_report"] = test.to_json();
  write_text(out / "metrics.json", summary.dump(2) + "\n");
  return summary;
}

json run_finetune(const json& cfg) {
  require_object(cfg);
  const auto m = manifest_of(cfg);
  m.validate();
  const auto seeds = seeds_of(cfg);
  const auto init = get_or<std::string>(cfg, "init", "random");
  std::optional<fs::path> source;
  if (init.starts_with("transfer:"))
    source = fs::path(init.substr(9));
  else
    require(init == "random", Errc::BadConfig, "init must be 'random' or 'transfer:<checkpoint>'");
  if (source) require(fs::exists(*source), Errc::Io, "checkpoint not found: " + source->string());
  const auto mc = model_config(cfg, m.class_count());
  const fs::path out = out_dir_of(cfg);
  const std::string tag = get_or<std::string>(cfg, "tag", out.filename().string());
  // Validate every seed's training config before any work.
  for (auto seed : seeds) train_config(cfg, seed);
  stamp(out, "finetune", cfg);

  std::vector<SeedRow> rows;
  for (auto seed : seeds) {
    const auto s = load_splits(m, ratios_of(cfg), seed);
    Rng init_rng = Rng(seed).fork("init");
    model::Res8 net = source ? model::transfer_load(mc, *source, init_rng) : model::Res8(mc, init_rng);
    const auto res = training::train(net, s.train, s.val, train_config(cfg, seed),
                                     progress(cfg, tag + "/seed " + std::to_string(seed)));
    const auto test = eval::evaluate(eval::Res8Predictor(net), s.test);

    const fs::path dir = out / ("seed_" + std::to_string(seed));
    model::CheckpointMeta meta;
    meta.source_task = source ? model::load_checkpoint(*source).meta.source_task : "";
    meta.seed = seed;
    meta.metrics = {{"best_epoch", res.best_epoch}, {"best_val_uar", res.best_val_uar}, {"test_uar", test.uar}};
    model::save_checkpoint(net, meta, dir / "checkpoint.cryb");
    write_text(dir / "history.csv", training::format_history_csv(res.history));
    write_text(dir / "split.json", s.plan.to_json().dump(2) + "\n");
    write_text(dir / "report.json", test.to_json().dump(2) + "\n");
    rows.push_back({seed, test});
  }
  return write_results(out, tag, rows);
}

json run_svm(const json& cfg) {
  require_object(cfg);
  const auto m = manifest_of(cfg);
  m.validate();
  require(m.class_count() == 2, Errc::BadConfig, "the SVM baseline needs a binary manifest");
  const auto seeds = seeds_of(cfg);
  const fs::path out = out_dir_of(cfg);
  const std::string tag = get_or<std::string>(cfg, "tag", out.filename().string());
  const auto c_grid = get_or<std::vector<double>>(cfg, "c_grid", svm::default_c_grid());
  const double tol = get_or<double>(cfg, "tol", 1e-3);
  stamp(out, "svm", cfg);

  std::vector<SeedRow> rows;
  for (auto seed : seeds) {
    const auto s = load_splits(m, ratios_of(cfg), seed);
    const svm::Matrix xt = svm::flatten(s.train.inputs());
    const svm::Matrix xv = svm::flatten(s.val.inputs());
    const auto gamma_grid =
        get_or<std::vector<double>>(cfg, "gamma_grid", svm::default_gamma_grid(static_cast<int>(xt.cols())));
    const auto grid = svm::grid_search(xt, s.train.labels, xv, s.val.labels, c_grid, gamma_grid, tol);
    const auto test = eval::evaluate(eval::SvmPredictor(grid.best), s.test);

    const fs::path dir = out / ("seed_" + std::to_string(seed));
    grid.best.save(dir / "model.crysvm");
    std::string csv = "C,gamma,val_uar,converged\n";
    for (const auto& p : grid.points) {
      char line[128];
      std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%d\n", p.C, p.gamma, p.val_uar, p.converged ? 1 : 0);
      csv += line;
    }
    write_text(dir / "grid.csv", csv);
    write_text(dir / "split.json", s.plan.to_json().dump(2) + "\n");
    write_text(dir / "report.json", test.to_json().dump(2) + "\n");
    rows.push_back({seed, test});
  }
  return write_results(out, tag, rows);
}

json run_robustness(const json& cfg) {
  require_object(cfg);
  const auto m = manifest_of(cfg);
  m.validate();
  const auto split_seed = get<std::uint64_t>(cfg, "split_seed");
  const auto noise_seed = get_or<std::uint64_t>(cfg, "noise_seed", split_seed);
  const auto levels = get_or<std::vector<double>>(cfg, "noise_levels", eval::kDefaultSnrLevels);
  require(cfg.contains("models") && cfg.at("models").is_array() && !cfg.at("models").empty(), Errc::BadConfig,
          "models must be a nonempty list of {tag, path}");
  std::map<eval::NoiseKind, audio::AudioClip> user_noise;
  if (cfg.contains("noise_files")) {
    for (const auto& [kind_text, path] : cfg.at("noise_files").items()) {
      const auto kind = eval::parse_noise(kind_text);
      require(kind.has_value(), Errc::BadConfig, "unknown noise kind '" + kind_text + "'");
      user_noise[*kind] = audio::to_pipeline_clip(audio::read_wav(path.get<std::string>()));
    }
  }
  // Check every model before the first sweep.
  std::vector<std::pair<std::string, eval::LoadedPredictor>> models;
  for (const auto& entry : cfg.at("models")) {
    const auto tag = get<std::string>(entry, "tag");
    models.emplace_back(tag, eval::LoadedPredictor::load(get<std::string>(entry, "path")));
  }
  const fs::path out = out_dir_of(cfg);
  stamp(out, "robustness", cfg);
  const auto test = load_test_split(m, ratios_of(cfg), split_seed);

  json files = json::array();
  json clean = json::object();
  for (const auto& [tag, model] : models) {
    const auto& p = model.get();
    clean[tag] = eval::evaluate(p, test).to_json();
    std::vector<eval::SweepCurve> curves;
    for (auto kind : {eval::NoiseKind::Gaussian, eval::NoiseKind::Playground, eval::NoiseKind::Bark,
                      eval::NoiseKind::Siren}) {
      const auto it = user_noise.find(kind);
      curves.push_back(eval::noise_sweep(p, test, kind, levels, noise_seed,
                                         it == user_noise.end() ? nullptr : &it->second));
    }
    curves.push_back(eval::length_sweep(p, test));
    curves.push_back(eval::filterbank_sweep(p, test));
    for (auto& c : curves) {
      c.model_tag = tag;
      const auto name = tag + "_" + c.name + ".csv";
      write_text(out / name, eval::format_sweep_csv(c));
      files.push_back(name);
    }
  }
  json summary = {{"files", files}, {"clean", clean}, {"test_rows", test.size()}};
  write_text(out / "robustness.json", summary.dump(2) + "\n");
  return summary;
}

json run_pca(const json& cfg) {
  require_object(cfg);
  const auto m = manifest_of(cfg);
  m.validate();
  const auto model_path = get<std::string>(cfg, "model");
  require(fs::exists(model_path), Errc::Io, "model not found: " + model_path);
  const auto loaded = model::load_checkpoint(model_path);
  const fs::path out = out_dir_of(cfg);
  stamp(out, "pca", cfg);
  const auto test = load_test_split(m, ratios_of(cfg), get<std::uint64_t>(cfg, "split_seed"));
  const auto rep = eval::pca_report(loaded.model, test);
  write_text(out / "pca_cumulative.csv", rep.cumulative_csv);
  write_text(out / "pca_projection.csv", rep.projection_csv);
  std::vector<double> ratios(rep.pca.explained_variance_ratio.data(),
                             rep.pca.explained_variance_ratio.data() + rep.pca.explained_variance_ratio.size());
  json summary = {{"explained_variance_ratio", ratios}, {"rows", test.size()}};
  write_text(out / "pca.json", summary.dump(2) + "\n");
  return summary;
}

std::string run_report(const fs::path& dir) {
  require(fs::is_directory(dir), Errc::MissingArtifacts, "experiment directory not found: " + dir.string());
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());

  std::ostringstream table, sweeps, other;
  int n_models = 0;
  table << "| model | UAR | sensitivity | specificity | seeds |\n|---|---|---|---|---|\n";
  for (const auto& sub : subdirs) {
    const auto summary_path = sub / "summary.json";
    if (fs::exists(summary_path)) {
      const json s = json::parse(read_file_bytes(summary_path), nullptr, false);
      require(!s.is_discarded(), Errc::MissingArtifacts, "unreadable " + summary_path.string());
      const auto& row = s.at("table_row");
      table << "| " << s.at("model").get<std::string>() << " | " << row[0].get<std::string>() << " | "
            << row[1].get<std::string>() << " | " << row[2].get<std::string>() << " | "
            << s.at("n_seeds").get<int>() << " |\n";
      ++n_models;
    }
    std::vector<std::string> csvs;
    for (const auto& e : fs::directory_iterator(sub)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && e.path().extension() == ".csv" && name != "results.csv") csvs.push_back(name);
    }
    std::sort(csvs.begin(), csvs.end());
    if (fs::exists(sub / "robustness.json")) {
      sweeps << "\n### " << sub.filename().string() << "\n\n";
      for (const auto& c : csvs) sweeps << "- `" << sub.filename().string() << "/" << c << "`\n";
    } else if (fs::exists(sub / "pca.json")) {
      other << "- PCA: `" << sub.filename().string() << "/pca_cumulative.csv`, `" << sub.filename().string()
            << "/pca_projection.csv`\n";
    } else if (fs::exists(sub / "metrics.json")) {
      const json mt = json::parse(read_file_bytes(sub / "metrics.json"), nullptr, false);
      if (!mt.is_discarded() && mt.contains("test_accuracy")) {
        char line[256];
        std::snprintf(line, sizeof line, "- Source model `%s` (%s): test accuracy %.1f%%\n",
                      sub.filename().string().c_str(), mt.value("source_task", "").c_str(),
                      100.0 * mt.at("test_accuracy").get<double>());
        other << line;
      }
    }
  }
  require(n_models > 0, Errc::MissingArtifacts, "no results found under " + dir.string());

  std::ostringstream doc;
  doc << "# Experiment report\n\n"
      << "Test-set results, mean (standard error) over seeds, in percent.\n\n"
      << table.str();
  if (!other.str().empty()) doc << "\n## Other artifacts\n\n" << other.str();
  if (!sweeps.str().empty()) doc << "\n## Robustness curves\n" << sweeps.str();
  const std::string text = doc.str();
  write_text(dir / "report.md", text);
  return text;
}

}  // namespace cryb::experiment
