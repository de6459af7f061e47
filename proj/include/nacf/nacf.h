/* Copyright 2026 The NACF Authors
 * License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 *
 * C interface to the NACF library. Functions return NACF_OK or an error
 * code; nacf_last_error() then describes the failure on the calling thread.
 * Handles are opaque and owned by the caller once returned.
 */
#ifndef NACF_NACF_H_
#define NACF_NACF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NACF_API __declspec(dllexport)
#else
#define NACF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nacf_status {
  NACF_OK = 0,
  NACF_ERR_INVALID_ARGUMENT = 1,
  NACF_ERR_DEGENERATE_GEOMETRY = 2,
  NACF_ERR_INSUFFICIENT_DECAY = 3,
  NACF_ERR_DEGENERATE = 4,
  NACF_ERR_NON_FINITE = 5,
  NACF_ERR_IO = 6,
  NACF_ERR_FORMAT = 7,
  NACF_ERR_INTERNAL = 100
} nacf_status;

typedef enum nacf_split { NACF_SPLIT_TRAIN = 0, NACF_SPLIT_TEST = 1 } nacf_split;

typedef struct nacf_dataset nacf_dataset;
typedef struct nacf_model nacf_model;

NACF_API const char* nacf_version(void);
NACF_API const char* nacf_last_error(void);
NACF_API const char* nacf_status_name(nacf_status status);

/* Dataset generation. config_json may be NULL for the default scene.
 * threads <= 0 uses every hardware thread. */
NACF_API nacf_status nacf_generate_dataset(const char* config_json, const char* out_dir, uint64_t seed, int threads);

NACF_API nacf_status nacf_dataset_open(const char* dir, nacf_dataset** out);
NACF_API void nacf_dataset_free(nacf_dataset* dataset);
NACF_API nacf_status nacf_dataset_size(const nacf_dataset* dataset, size_t* out);
NACF_API nacf_status nacf_dataset_split_size(const nacf_dataset* dataset, nacf_split split, size_t* out);

/* Training. config_json follows the TrainConfig schema (NULL = defaults);
 * seed_override >= 0 replaces its seed. Checkpoints and the JSON-lines log
 * are written under out_dir. The refine stage starts from main_checkpoint
 * and fails with NACF_ERR_INVALID_ARGUMENT when that file is missing. */
NACF_API nacf_status nacf_train_main(const nacf_dataset* dataset, const char* config_json, int64_t seed_override,
                                     const char* out_dir);
NACF_API nacf_status nacf_train_refine(const nacf_dataset* dataset, const char* config_json, int64_t seed_override,
                                       const char* main_checkpoint, const char* out_dir);

NACF_API nacf_status nacf_model_load(const char* checkpoint, nacf_model** out);
NACF_API void nacf_model_free(nacf_model* model);
/* Samples per channel of a rendered RIR. */
NACF_API nacf_status nacf_model_rir_length(const nacf_model* model, size_t* out);
NACF_API nacf_status nacf_model_sample_rate(const nacf_model* model, int* out);

/* Renders dataset entry `index` into out (length x 2, interleaved L/R).
 * capacity counts doubles. The temporal module runs iff the checkpoint
 * came from the refine stage. */
NACF_API nacf_status nacf_render_entry(const nacf_model* model, const nacf_dataset* dataset, size_t index,
                                       double* out, size_t capacity);
/* Renders an arbitrary query in the dataset's room. */
NACF_API nacf_status nacf_render_query(const nacf_model* model, const nacf_dataset* dataset, double emitter_x,
                                       double emitter_y, double receiver_x, double receiver_y,
                                       double orientation_deg, double* out, size_t capacity);
/* Writes a stereo float32 WAV. samples is length x 2 interleaved. */
NACF_API nacf_status nacf_write_wav(const char* path, const double* samples, size_t length, int sample_rate);

/* Scores the model on a split and writes the JSON report. */
NACF_API nacf_status nacf_evaluate(const nacf_model* model, const nacf_dataset* dataset, nacf_split split,
                                   int threads, const char* report_path);

/* Few-shot sweep: one main-stage run per (seed, fraction); writes a JSON
 * report with per-run test metrics. */
NACF_API nacf_status nacf_fewshot(const nacf_dataset* dataset, const char* config_json, const double* fractions,
                                  size_t num_fractions, const uint64_t* seeds, size_t num_seeds,
                                  const char* report_path);

/* Writes plot_{index}.json for each index under out_dir. */
NACF_API nacf_status nacf_export_plots(const nacf_model* model, const nacf_dataset* dataset, const size_t* indices,
                                       size_t num_indices, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* NACF_NACF_H_ */
