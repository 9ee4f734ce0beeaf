/*
 * lkcfu: large-kernel convolution fusion UNet, C interface.
 *
 * Every function returns an lkcf_status. On failure a human-readable message is
 * available from lkcf_last_error() on the calling thread until the next call.
 * Handles are opaque; free them with the matching *_free function. A model
 * handle may be shared by concurrent forward calls; training and loading create
 * new handles.
 */
#ifndef LKCFU_H_
#define LKCFU_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LKCF_API __declspec(dllexport)
#else
#define LKCF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lkcf_status {
  LKCF_OK = 0,
  LKCF_ERR_INVALID_ARGUMENT = 1,
  LKCF_ERR_REJECTED_INPUT = 2,
  LKCF_ERR_CONTRACT = 3,
  LKCF_ERR_IO = 4,
  LKCF_ERR_FINGERPRINT = 5,
  LKCF_ERR_DEGENERATE = 6,
  LKCF_ERR_DIVERGED = 7,
  LKCF_ERR_CORRUPT = 8,
  LKCF_ERR_INTERNAL = 99
} lkcf_status;

typedef struct lkcf_config lkcf_config;
typedef struct lkcf_model lkcf_model;
typedef struct lkcf_dataset lkcf_dataset;

LKCF_API const char* lkcf_last_error(void);
/* Stable identifier such as "fingerprint_mismatch". */
LKCF_API const char* lkcf_status_name(lkcf_status status);
LKCF_API const char* lkcf_version(void);

/* ---- model configuration ---------------------------------------------- */

LKCF_API lkcf_status lkcf_config_default(lkcf_config** out);
/* row: "I".."VI" or "Ours". */
LKCF_API lkcf_status lkcf_config_ablation(const char* row, lkcf_config** out);
LKCF_API lkcf_status lkcf_config_load(const char* path, lkcf_config** out);
LKCF_API lkcf_status lkcf_config_save(const lkcf_config* cfg, const char* path);
/* Switches to the desk-scale channel widths 8,16,32,64. */
LKCF_API lkcf_status lkcf_config_set_desk_scale(lkcf_config* cfg);
/* Writes the 16-hex-digit fingerprint plus NUL; buf_len must be >= 17. */
LKCF_API lkcf_status lkcf_config_fingerprint(const lkcf_config* cfg, char* buf, size_t buf_len);
LKCF_API void lkcf_config_free(lkcf_config* cfg);

/* ---- datasets ---------------------------------------------------------- */

/* Two folders with filename-matched images; unmatched files are an error. */
LKCF_API lkcf_status lkcf_dataset_load_dirs(const char* dir_a, const char* dir_b, lkcf_dataset** out);
LKCF_API lkcf_status lkcf_dataset_load_manifest(const char* path, lkcf_dataset** out);
LKCF_API lkcf_status lkcf_dataset_synthetic(int count, int64_t size, uint64_t seed, lkcf_dataset** out);
LKCF_API lkcf_status lkcf_dataset_size(const lkcf_dataset* ds, size_t* out);
LKCF_API void lkcf_dataset_free(lkcf_dataset* ds);

/* ---- models ------------------------------------------------------------ */

LKCF_API lkcf_status lkcf_model_create(const lkcf_config* cfg, uint64_t seed, lkcf_model** out);
/* expected may be NULL; otherwise a differing config fingerprint fails with LKCF_ERR_FINGERPRINT. */
LKCF_API lkcf_status lkcf_model_load(const char* checkpoint_path, const lkcf_config* expected, lkcf_model** out);
LKCF_API lkcf_status lkcf_model_save(const lkcf_model* model, const char* checkpoint_path);
/* Caller owns the returned config. */
LKCF_API lkcf_status lkcf_model_config(const lkcf_model* model, lkcf_config** out);
/*
 * pair: batch x 2 x height x width floats in [0,1] (channel 0 = modality A,
 * channel 1 = luminance of B). out: batch x height x width fused values in [0,1].
 * height and width must be multiples of 16.
 */
LKCF_API lkcf_status lkcf_model_forward(lkcf_model* model, const float* pair, int64_t batch, int64_t height,
                                        int64_t width, float* out);
LKCF_API void lkcf_model_free(lkcf_model* model);

/* ---- training ---------------------------------------------------------- */

typedef struct lkcf_train_options {
  int64_t epochs;
  double lr;
  int64_t batch;
  int64_t crop;
  uint64_t seed;
  int64_t checkpoint_every; /* epochs, 0 = final only */
  int desk_scale;
  int64_t max_steps;        /* 0 = epochs * steps per epoch */
  int log_wall_time;
} lkcf_train_options;

/* Defaults: 1000 epochs, lr 1e-4, batch 32, crop 64. */
LKCF_API void lkcf_train_options_default(lkcf_train_options* opt);

/*
 * Trains from scratch. checkpoint_path and log_path (line-delimited JSON) may be
 * NULL. out may be NULL; otherwise receives the trained model.
 */
LKCF_API lkcf_status lkcf_train(const lkcf_config* cfg, const lkcf_train_options* opt, const lkcf_dataset* data,
                                const char* checkpoint_path, const char* log_path, lkcf_model** out);

/*
 * rows: comma-separated ablation tags, e.g. "I,Ours". Writes the comparative
 * table CSV to out_csv. Failed rows appear with an error column.
 */
LKCF_API lkcf_status lkcf_ablate(const char* rows, const lkcf_train_options* opt, const lkcf_dataset* train_set,
                                 const lkcf_dataset* eval_set, const char* out_csv);

/* ---- inference and evaluation ----------------------------------------- */

/* Fuses every pair into out_dir/<id>.png; colour B images get their chroma reinjected. */
LKCF_API lkcf_status lkcf_fuse_dataset(lkcf_model* model, const lkcf_dataset* data, const char* out_dir);

/*
 * Scores fused images against filename-matched sources. Either output path may be
 * NULL. include_meta = 0 omits the timestamp line for byte-reproducible files.
 */
LKCF_API lkcf_status lkcf_eval_dirs(const char* fused_dir, const char* dir_a, const char* dir_b,
                                    const char* dataset_tag, const char* config_fingerprint, const char* csv_path,
                                    const char* json_path, int include_meta);

/*
 * The six metrics for one aligned triple of h x w grayscale images on the 0-255
 * scale, in the order SD, AG, SF, SCD, VIFF, SSIM. present[i] is 0 when metric i
 * is degenerate for this input.
 */
LKCF_API lkcf_status lkcf_metrics_evaluate(const double* fused, const double* src_a, const double* src_b,
                                           int64_t height, int64_t width, double values[6], int present[6]);

/* ---- analysis ---------------------------------------------------------- */

/* plot_path may be NULL. */
LKCF_API lkcf_status lkcf_analyze_histogram(const char* image_path, int bins, const char* csv_path,
                                            const char* plot_path);
/* Writes out_dir/<id>.txt with the InitBlock consistency grid of every pair. */
LKCF_API lkcf_status lkcf_analyze_consistency(lkcf_model* model, const lkcf_dataset* data, int64_t patch,
                                              const char* out_dir);
/* Times forward passes at each (heights[i], widths[i]) and writes a JSON report. */
LKCF_API lkcf_status lkcf_bench(lkcf_model* model, const int64_t* heights, const int64_t* widths, size_t count,
                                int warmup, int reps, const char* json_path);

#ifdef __cplusplus
}
#endif

#endif /* LKCFU_H_ */
