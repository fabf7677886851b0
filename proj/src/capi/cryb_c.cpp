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

#include "cryb/cryb.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "cryb/audio/audio.hpp"
#include "cryb/common/error.hpp"
#include "cryb/eval/evaluate.hpp"
#include "cryb/experiment/experiment.hpp"
#include "cryb/features/mfcc.hpp"

struct cryb_clip {
  cryb::audio::AudioClip clip;
};

struct cryb_model {
  cryb::eval::LoadedPredictor predictor;
  std::string kind;
};

namespace {

thread_local std::string g_last_error;

cryb_status to_status(cryb::Errc code) {
  // Errc and cryb_status list the same failures in the same order.
  return static_cast<cryb_status>(static_cast<int>(code) + 1);
}

template <typename F>
cryb_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CRYB_OK;
  } catch (const cryb::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
  } catch (...) {
    g_last_error = "internal error";
  }
  return CRYB_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  cryb::require(p != nullptr, cryb::Errc::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* cryb_version(void) {
  static const std::string v = cryb::experiment::version_string();
  return v.c_str();
}

const char* cryb_status_name(cryb_status status) {
  if (status == CRYB_OK) return "Ok";
  if (status == CRYB_ERR_INTERNAL) return "Internal";
  if (status > CRYB_OK && status < CRYB_ERR_INTERNAL)
    return cryb::errc_name(static_cast<cryb::Errc>(static_cast<int>(status) - 1));
  return "Unknown";
}

const char* cryb_last_error(void) { return g_last_error.c_str(); }

int cryb_exit_code(cryb_status status) {
  switch (status) {
    case CRYB_OK: return 0;
    case CRYB_ERR_ARCH_MISMATCH: return 3;
    case CRYB_ERR_DIVERGED_LOSS: return 4;
    case CRYB_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

cryb_status cryb_clip_read_wav(const char* path, cryb_clip** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cryb_clip{cryb::audio::read_wav(path)};
  });
}

cryb_status cryb_clip_from_samples(const float* samples, size_t count, int sample_rate, cryb_clip** out) {
  return guarded([&] {
    need(out, "out");
    if (count > 0) need(samples, "samples");
    cryb::require(cryb::audio::is_supported_rate(sample_rate), cryb::Errc::UnsupportedEncoding,
                  "unsupported sample rate " + std::to_string(sample_rate));
    auto c = std::make_unique<cryb_clip>();
    c->clip.sample_rate = sample_rate;
    c->clip.samples.assign(samples, samples + count);
    *out = c.release();
  });
}

cryb_status cryb_clip_to_pipeline(const cryb_clip* clip, cryb_clip** out) {
  return guarded([&] {
    need(clip, "clip");
    need(out, "out");
    *out = new cryb_clip{cryb::audio::to_pipeline_clip(clip->clip)};
  });
}

cryb_status cryb_clip_write_wav(const cryb_clip* clip, const char* path) {
  return guarded([&] {
    need(clip, "clip");
    need(path, "path");
    cryb::audio::write_wav(clip->clip, path);
  });
}

size_t cryb_clip_length(const cryb_clip* clip) { return clip ? clip->clip.samples.size() : 0; }
int cryb_clip_sample_rate(const cryb_clip* clip) { return clip ? clip->clip.sample_rate : 0; }
const float* cryb_clip_samples(const cryb_clip* clip) { return clip ? clip->clip.samples.data() : nullptr; }
void cryb_clip_free(cryb_clip* clip) { delete clip; }

cryb_status cryb_mfcc(const cryb_clip* clip, float* out) {
  return guarded([&] {
    need(clip, "clip");
    need(out, "out");
    const auto m = cryb::features::mfcc(clip->clip);
    std::memcpy(out, m.coeffs.data(), m.coeffs.size() * sizeof(float));
  });
}

cryb_status cryb_model_load(const char* path, cryb_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto p = cryb::eval::LoadedPredictor::load(path);
    auto m = std::make_unique<cryb_model>(cryb_model{std::move(p), ""});
    m->kind = m->predictor.kind();
    *out = m.release();
  });
}

int cryb_model_n_classes(const cryb_model* model) { return model ? model->predictor.get().n_classes() : 0; }
const char* cryb_model_kind(const cryb_model* model) { return model ? model->kind.c_str() : ""; }

cryb_status cryb_model_predict(const cryb_model* model, const cryb_clip* clip, int* label) {
  return guarded([&] {
    need(model, "model");
    need(clip, "clip");
    need(label, "label");
    const auto m = cryb::features::mfcc(cryb::audio::to_pipeline_clip(clip->clip));
    const cryb::features::MfccMatrix* in[1] = {&m};
    *label = model->predictor.get().predict(in).front();
  });
}

void cryb_model_free(cryb_model* model) { delete model; }

cryb_status cryb_run(const char* command, const char* config_json, char** result) {
  return guarded([&] {
    need(command, "command");
    need(config_json, "config_json");
    if (result) *result = nullptr;
    const auto cfg = nlohmann::json::parse(config_json, nullptr, false);
    cryb::require(!cfg.is_discarded(), cryb::Errc::BadConfig, "config is not valid JSON");
    namespace ex = cryb::experiment;
    const std::string cmd = command;
    nlohmann::json out;
    if (cmd == "synth") out = ex::run_synth(cfg);
    else if (cmd == "import") out = ex::run_import(cfg);
    else if (cmd == "pretrain") out = ex::run_pretrain(cfg);
    else if (cmd == "finetune") out = ex::run_finetune(cfg);
    else if (cmd == "svm") out = ex::run_svm(cfg);
    else if (cmd == "robustness") out = ex::run_robustness(cfg);
    else if (cmd == "pca") out = ex::run_pca(cfg);
    else if (cmd == "report") {
      cryb::require(cfg.is_object() && cfg.contains("dir") && cfg.at("dir").is_string(), cryb::Errc::BadConfig,
                    "report needs {\"dir\": <experiment directory>}");
      const std::string dir = cfg.at("dir");
      out = {{"report", ex::run_report(dir)}, {"path", dir + "/report.md"}};
    } else {
      cryb::fail(cryb::Errc::InvalidArgument, "unknown command '" + cmd + "'");
    }
    if (result) *result = dup_string(out.dump(2));
  });
}

void cryb_string_free(char* text) { std::free(text); }

}  // extern "C"
