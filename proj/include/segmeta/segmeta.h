/* segmeta — segment-level quality monitoring for semantic segmentation.
 *
 * C interface over the C++ core: opaque handles plus status codes. All
 * functions returning segmeta_status set the thread-local error state on
 * failure; query it with segmeta_last_error() / segmeta_last_error_code().
 */
#ifndef SEGMETA_H
#define SEGMETA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t segmeta_status;
#define SEGMETA_OK 0
#define SEGMETA_ERR_VALIDATION 1 /* bad inputs, malformed files, contract violations */
#define SEGMETA_ERR_IO 2         /* filesystem failures */

const char* segmeta_version(void);

/* Message / short code of the most recent failure on the calling thread.
 * Both stay valid until the next failing call on the same thread. */
const char* segmeta_last_error(void);
const char* segmeta_last_error_code(void);

/* ---------- arrays (npy v1.0 subset: <f4, <i4, |u1; C order) ---------- */

typedef struct segmeta_array segmeta_array;

#define SEGMETA_DTYPE_F32 0
#define SEGMETA_DTYPE_I32 1
#define SEGMETA_DTYPE_U8 2

segmeta_status segmeta_array_read(const char* path, segmeta_array** out);
segmeta_status segmeta_array_write(const segmeta_array* a, const char* path);
segmeta_status segmeta_array_create(int32_t dtype, const int64_t* shape, int32_t ndim,
                                    const void* data, segmeta_array** out);
void segmeta_array_free(segmeta_array* a);

int32_t segmeta_array_dtype(const segmeta_array* a);
int32_t segmeta_array_ndim(const segmeta_array* a);
int64_t segmeta_array_dim(const segmeta_array* a, int32_t axis);
int64_t segmeta_array_size(const segmeta_array* a);
const void* segmeta_array_data(const segmeta_array* a);

/* ---------- metric tables (csv) ---------- */

typedef struct segmeta_dataset segmeta_dataset;

segmeta_status segmeta_dataset_read_csv(const char* path, segmeta_dataset** out);
segmeta_status segmeta_dataset_write_csv(const segmeta_dataset* d, const char* path);
void segmeta_dataset_free(segmeta_dataset* d);

int64_t segmeta_dataset_rows(const segmeta_dataset* d);
int64_t segmeta_dataset_cols(const segmeta_dataset* d);
const char* segmeta_dataset_feature_name(const segmeta_dataset* d, int64_t col);
double segmeta_dataset_value(const segmeta_dataset* d, int64_t row, int64_t col);
int32_t segmeta_dataset_has_targets(const segmeta_dataset* d);
double segmeta_dataset_target_iou(const segmeta_dataset* d, int64_t row);
int32_t segmeta_dataset_target_is_fp(const segmeta_dataset* d, int64_t row);

/* ---------- meta models ---------- */

typedef struct segmeta_model segmeta_model;

/* task: "fp" | "iou"; kind: "linear" | "logistic" | "gbt" | "mlp";
 * penalty: "none" | "l1" | "l2" */
segmeta_status segmeta_model_train(const segmeta_dataset* data, const char* task,
                                   const char* kind, const char* penalty, double lambda,
                                   uint64_t seed, segmeta_model** out);
segmeta_status segmeta_model_load(const char* path, segmeta_model** out);
segmeta_status segmeta_model_save(const segmeta_model* m, const char* path);
void segmeta_model_free(segmeta_model* m);

/* scores must hold segmeta_dataset_rows(rows) doubles */
segmeta_status segmeta_model_predict(const segmeta_model* m, const segmeta_dataset* rows,
                                     double* scores);

/* (ordered pairs + 0.5 * ties) / (positive * negative pairs) */
segmeta_status segmeta_auroc(const double* scores, const int32_t* labels, int64_t n,
                             double* out);

/* ---------- pipeline stages ----------
 * Generic runner; `stage` is one of: synth, predict, segments, metrics,
 * train-meta, eval-meta, track, augment, compose, priors, cdf, render,
 * pipeline. Options are parallel key/value arrays; unknown keys are
 * rejected. */
segmeta_status segmeta_run_stage(const char* stage, const char* const* keys,
                                 const char* const* values, size_t count);

#ifdef __cplusplus
}
#endif

#endif /* SEGMETA_H */
