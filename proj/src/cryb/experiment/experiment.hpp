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

#include <filesystem>
#include <string>

#include "json.hpp"

namespace cryb::experiment {

using nlohmann::json;

/// "cryb <version> (<git describe>)".
std::string version_string();

// Every command takes a JSON config, writes only below its "out_dir" (report:
// "dir"), leaves config.json and VERSION there, and returns a JSON summary.
// Errors surface as cryb::Error.

/// {task, n_subjects, clips_per_subject, class_count, seed, out_dir}
json run_synth(const json& config);

/// {manifest, out_dir}: converts every listed WAV to 8 kHz mono 1 s clips and
/// writes a new manifest next to them.
json run_import(const json& config);

/// {manifest, out_dir, seed, source_task?, model?, train?, ratios?}
json run_pretrain(const json& config);

/// {manifest, out_dir, seeds, init: "random" | "transfer:<path>", model?, train?, ratios?}
json run_finetune(const json& config);

/// {manifest, out_dir, seeds, c_grid?, gamma_grid?, tol?, ratios?}
json run_svm(const json& config);

/// {manifest, out_dir, models: [{tag, path}], split_seed, noise_seed?, noise_levels?,
///  noise_files?: {kind: wav}, ratios?}
json run_robustness(const json& config);

/// {manifest, out_dir, model, split_seed, ratios?}
json run_pca(const json& config);

/// Collates <dir>/*/results.csv and sweep CSVs into <dir>/report.md and
/// returns the document. Throws MissingArtifacts when there are no results.
std::string run_report(const std::filesystem::path& dir);

}  // namespace cryb::experiment
