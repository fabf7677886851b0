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

// Command-line front end. Every subcommand builds a JSON config (from
// --config, then flag overrides) and hands it to the C library.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cryb/cryb.h"

namespace {

using nlohmann::json;

struct Common {
  std::string config_path;
  std::string manifest;
  std::string out;
  bool verbose = false;
};

// Exit code, or -1 when the file parsed.
int load_config(const std::string& path, json& cfg) {
  cfg = json::object();
  if (path.empty()) return -1;
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "cryb: IoError: config not found: %s\n", path.c_str());
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  cfg = json::parse(ss.str(), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) {
    std::fprintf(stderr, "cryb: BadConfig: %s is not a JSON object\n", path.c_str());
    return 2;
  }
  return -1;
}

int run(const std::string& command, const json& cfg) {
  char* result = nullptr;
  const cryb_status st = cryb_run(command.c_str(), cfg.dump().c_str(), &result);
  if (st != CRYB_OK) {
    std::fprintf(stderr, "cryb %s: %s\n", command.c_str(), cryb_last_error());
    return cryb_exit_code(st);
  }
  if (result) std::printf("%s\n", result);
  cryb_string_free(result);
  return 0;
}

void add_common(CLI::App* app, Common& c, bool with_manifest = true) {
  app->add_option("-c,--config", c.config_path, "JSON config file; flags override its keys");
  if (with_manifest) app->add_option("-m,--manifest", c.manifest, "corpus manifest CSV");
  app->add_option("-o,--out", c.out, "output directory");
  app->add_flag("-v,--verbose", c.verbose, "log per-epoch progress to stderr");
}

// --epochs also moves the learning-rate switch when the config leaves it
// unset, so that short runs stay valid.
void set_epochs(json& cfg, int epochs) {
  cfg["train"]["epochs"] = epochs;
  if (!cfg["train"].contains("lr_switch_epoch")) cfg["train"]["lr_switch_epoch"] = std::min(15, std::max(1, epochs - 1));
}

void apply_common(const Common& c, json& cfg) {
  if (!c.manifest.empty()) cfg["manifest"] = c.manifest;
  if (!c.out.empty()) cfg["out_dir"] = c.out;
  if (c.verbose) cfg["verbose"] = true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infant cry classification experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cryb_version()));

  // data synth | import
  auto* data = app.add_subcommand("data", "create or import a corpus");
  data->require_subcommand(1);
  Common synth_opts;
  std::string task;
  int subjects = 0, clips = 0, classes = 0;
  std::uint64_t synth_seed = 0;
  auto* synth = data->add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth, synth_opts, false);
  synth->add_option("--task", task, "target_cry | words | speakers | gender");
  synth->add_option("--subjects", subjects, "number of subjects");
  synth->add_option("--clips", clips, "clips per subject");
  synth->add_option("--classes", classes, "class count (words: number of templates)");
  synth->add_option("--seed", synth_seed, "generator seed");

  Common import_opts;
  auto* import = data->add_subcommand("import", "convert a WAV corpus listed in a manifest to 8 kHz, 1 s clips");
  add_common(import, import_opts);

  // pretrain
  Common pre_opts;
  std::uint64_t pre_seed = 0;
  std::string source_task;
  int pre_epochs = 0;
  auto* pretrain = app.add_subcommand("pretrain", "train res8 on a source task");
  add_common(pretrain, pre_opts);
  pretrain->add_option("--seed", pre_seed, "root seed");
  pretrain->add_option("--source-task", source_task, "task name stored in the checkpoint");
  pretrain->add_option("--epochs", pre_epochs, "override the epoch count");

  // finetune
  Common ft_opts;
  std::vector<std::uint64_t> ft_seeds;
  std::string init, ft_tag;
  int ft_epochs = 0;
  auto* finetune = app.add_subcommand("finetune", "train res8 on the target task, from scratch or by transfer");
  add_common(finetune, ft_opts);
  finetune->add_option("--seeds", ft_seeds, "seeds, one split and run each")->delimiter(',');
  finetune->add_option("--init", init, "random | transfer:<checkpoint>");
  finetune->add_option("--tag", ft_tag, "model name in results (default: output directory name)");
  finetune->add_option("--epochs", ft_epochs, "override the epoch count");

  // svm
  Common svm_opts;
  std::vector<std::uint64_t> svm_seeds;
  std::string svm_tag;
  auto* svm = app.add_subcommand("svm", "grid-searched RBF SVM baseline");
  add_common(svm, svm_opts);
  svm->add_option("--seeds", svm_seeds, "seeds, one split and run each")->delimiter(',');
  svm->add_option("--tag", svm_tag, "model name in results");

  // robustness
  Common rob_opts;
  std::vector<std::string> models;
  std::uint64_t rob_split = 0, noise_seed = 0;
  auto* robustness = app.add_subcommand("robustness", "noise, length and filterbank sweeps");
  add_common(robustness, rob_opts);
  robustness->add_option("--model", models, "tag=path of a checkpoint or SVM model (repeatable)");
  robustness->add_option("--split-seed", rob_split, "seed whose test split to use");
  robustness->add_option("--noise-seed", noise_seed, "noise stream seed (default: split seed)");

  // pca
  Common pca_opts;
  std::string pca_model;
  std::uint64_t pca_split = 0;
  auto* pca = app.add_subcommand("pca", "PCA of res8 embeddings on a test split");
  add_common(pca, pca_opts);
  pca->add_option("--model", pca_model, "res8 checkpoint");
  pca->add_option("--split-seed", pca_split, "seed whose test split to use");

  // report
  std::string report_dir;
  auto* report = app.add_subcommand("report", "collate an experiment directory into report.md");
  report->add_option("dir", report_dir, "experiment directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  json cfg;
  int rc = -1;
  if (synth->parsed()) {
    if ((rc = load_config(synth_opts.config_path, cfg)) >= 0) return rc;
    apply_common(synth_opts, cfg);
    if (!task.empty()) cfg["task"] = task;
    if (subjects > 0) cfg["n_subjects"] = subjects;
    if (clips > 0) cfg["clips_per_subject"] = clips;
    if (classes > 0) cfg["class_count"] = classes;
    if (synth->count("--seed")) cfg["seed"] = synth_seed;
    return run("synth", cfg);
  }
  if (import->parsed()) {
    if ((rc = load_config(import_opts.config_path, cfg)) >= 0) return rc;
    apply_common(import_opts, cfg);
    return run("import", cfg);
  }
  if (pretrain->parsed()) {
    if ((rc = load_config(pre_opts.config_path, cfg)) >= 0) return rc;
    apply_common(pre_opts, cfg);
    if (pretrain->count("--seed")) cfg["seed"] = pre_seed;
    if (!source_task.empty()) cfg["source_task"] = source_task;
    if (pre_epochs > 0) set_epochs(cfg, pre_epochs);
    return run("pretrain", cfg);
  }
  if (finetune->parsed()) {
    if ((rc = load_config(ft_opts.config_path, cfg)) >= 0) return rc;
    apply_common(ft_opts, cfg);
    if (!ft_seeds.empty()) cfg["seeds"] = ft_seeds;
    if (!init.empty()) cfg["init"] = init;
    if (!ft_tag.empty()) cfg["tag"] = ft_tag;
    if (ft_epochs > 0) set_epochs(cfg, ft_epochs);
    return run("finetune", cfg);
  }
  if (svm->parsed()) {
    if ((rc = load_config(svm_opts.config_path, cfg)) >= 0) return rc;
    apply_common(svm_opts, cfg);
    if (!svm_seeds.empty()) cfg["seeds"] = svm_seeds;
    if (!svm_tag.empty()) cfg["tag"] = svm_tag;
    return run("svm", cfg);
  }
  if (robustness->parsed()) {
    if ((rc = load_config(rob_opts.config_path, cfg)) >= 0) return rc;
    apply_common(rob_opts, cfg);
    if (!models.empty()) {
      cfg["models"] = json::array();
      for (const auto& m : models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0) {
          std::fprintf(stderr, "cryb robustness: --model expects tag=path, got '%s'\n", m.c_str());
          return 2;
        }
        cfg["models"].push_back({{"tag", m.substr(0, eq)}, {"path", m.substr(eq + 1)}});
      }
    }
    if (robustness->count("--split-seed")) cfg["split_seed"] = rob_split;
    if (robustness->count("--noise-seed")) cfg["noise_seed"] = noise_seed;
    return run("robustness", cfg);
  }
  if (pca->parsed()) {
    if ((rc = load_config(pca_opts.config_path, cfg)) >= 0) return rc;
    apply_common(pca_opts, cfg);
    if (!pca_model.empty()) cfg["model"] = pca_model;
    if (pca->count("--split-seed")) cfg["split_seed"] = pca_split;
    return run("pca", cfg);
  }
  if (report->parsed()) {
    char* result = nullptr;
    const cryb_status st = cryb_run("report", json{{"dir", report_dir}}.dump().c_str(), &result);
    if (st != CRYB_OK) {
      std::fprintf(stderr, "cryb report: %s\n", cryb_last_error());
      return cryb_exit_code(st);
    }
    std::printf("%s", json::parse(result).at("report").get<std::string>().c_str());
    cryb_string_free(result);
    return 0;
  }
  return 2;
}
