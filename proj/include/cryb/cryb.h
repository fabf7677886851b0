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

/* C interface to the cryb library: audio clips, MFCC features, trained
 * models, and the experiment commands. All functions are thread-compatible;
 * the last-error message is per thread. Objects are opaque and owned by the
 * caller once returned. */
#ifndef CRYB_CRYB_H_
#define CRYB_CRYB_H_

#include <stddef.h>

#if defined(_WIN32)
#define CRYB_API __declspec(dllexport)
#else
#define CRYB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cryb_status {
  CRYB_OK = 0,
  CRYB_ERR_INVALID_ARGUMENT,
  CRYB_ERR_IO,
  CRYB_ERR_MALFORMED_WAV,
  CRYB_ERR_UNSUPPORTED_ENCODING,
  CRYB_ERR_UPSAMPLING_REQUESTED,
  CRYB_ERR_INVALID_SPEC,
  CRYB_ERR_WRONG_LENGTH,
  CRYB_ERR_BAD_BAND_INDEX,
  CRYB_ERR_SHAPE_MISMATCH,
  CRYB_ERR_BAD_CLASS_INDEX,
  CRYB_ERR_NO_FORWARD_RECORDED,
  CRYB_ERR_BAD_SHAPE,
  CRYB_ERR_BAD_CONFIG,
  CRYB_ERR_CORRUPT_CHECKPOINT,
  CRYB_ERR_ARCH_MISMATCH,
  CRYB_ERR_TOO_FEW_SUBJECTS,
  CRYB_ERR_EMPTY_CLASS,
  CRYB_ERR_DIVERGED_LOSS,
  CRYB_ERR_SINGLE_CLASS,
  CRYB_ERR_DIM_MISMATCH,
  CRYB_ERR_EMPTY_SET,
  CRYB_ERR_SILENT_SIGNAL,
  CRYB_ERR_SILENT_NOISE,
  CRYB_ERR_DEGENERATE_DATA,
  CRYB_ERR_MISSING_ARTIFACTS,
  CRYB_ERR_INTERNAL
} cryb_status;

#define CRYB_MFCC_COEFFS 40
#define CRYB_MFCC_FRAMES 101

typedef struct cryb_clip cryb_clip;
typedef struct cryb_model cryb_model;

CRYB_API const char* cryb_version(void);
CRYB_API const char* cryb_status_name(cryb_status status);
/* Message of the last failed call on this thread, or "". */
CRYB_API const char* cryb_last_error(void);
/* Process exit code for a status: 0 ok, 2 input/config, 3 architecture,
 * 4 numerical divergence, 1 internal. */
CRYB_API int cryb_exit_code(cryb_status status);

/* Clips. */
CRYB_API cryb_status cryb_clip_read_wav(const char* path, cryb_clip** out);
CRYB_API cryb_status cryb_clip_from_samples(const float* samples, size_t count, int sample_rate, cryb_clip** out);
/* Resampled to 8 kHz and fitted to 1.0 s. */
CRYB_API cryb_status cryb_clip_to_pipeline(const cryb_clip* clip, cryb_clip** out);
CRYB_API cryb_status cryb_clip_write_wav(const cryb_clip* clip, const char* path);
CRYB_API size_t cryb_clip_length(const cryb_clip* clip);
CRYB_API int cryb_clip_sample_rate(const cryb_clip* clip);
CRYB_API const float* cryb_clip_samples(const cryb_clip* clip);
CRYB_API void cryb_clip_free(cryb_clip* clip);

/* MFCCs of a pipeline clip, coefficient-major, 40 * 101 floats. */
CRYB_API cryb_status cryb_mfcc(const cryb_clip* clip, float* out);

/* Models: a res8 checkpoint or an SVM, told apart by file magic. */
CRYB_API cryb_status cryb_model_load(const char* path, cryb_model** out);
CRYB_API int cryb_model_n_classes(const cryb_model* model);
/* "res8" or "svm". */
CRYB_API const char* cryb_model_kind(const cryb_model* model);
/* Class of a clip; the clip is brought to pipeline form first. */
CRYB_API cryb_status cryb_model_predict(const cryb_model* model, const cryb_clip* clip, int* label);
CRYB_API void cryb_model_free(cryb_model* model);

/* Runs an experiment command with a JSON config. Commands: "synth",
 * "import", "pretrain", "finetune", "svm", "robustness", "pca", "report"
 * (config {"dir": ...}). On success *result receives a JSON summary to be
 * released with cryb_string_free; it may be NULL. */
CRYB_API cryb_status cryb_run(const char* command, const char* config_json, char** result);
CRYB_API void cryb_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* CRYB_CRYB_H_ */
