#ifndef CORIEM_H
#define CORIEM_H

/* C interface to the coriem library.
 *
 * Objects are opaque handles created by the create, load, synth, train and
 * evaluate functions and released by the matching destroy function. Every fallible call returns a
 * coriem_status; on failure the message is available from coriem_last_error()
 * on the calling thread until the next failing call. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CORIEM_API __declspec(dllexport)
#else
#define CORIEM_API __attribute__((visibility("default")))
#endif

typedef enum coriem_status {
  CORIEM_OK = 0,
  CORIEM_ERR_USAGE = 1,
  CORIEM_ERR_DATA = 2,
  CORIEM_ERR_RUNTIME = 3
} coriem_status;

typedef enum coriem_key_kind {
  CORIEM_KEY_INT = 0,
  CORIEM_KEY_REAL = 1,
  CORIEM_KEY_BOOL = 2,
  CORIEM_KEY_STRING = 3,
  CORIEM_KEY_CHOICE = 4
} coriem_key_kind;

typedef enum coriem_target { CORIEM_TARGET_VALID = 0, CORIEM_TARGET_TEST = 1 } coriem_target;

typedef struct coriem_config coriem_config;
typedef struct coriem_dataset coriem_dataset;
typedef struct coriem_model coriem_model;
typedef struct coriem_report coriem_report;

typedef struct coriem_progress {
  int epoch;
  size_t interval;
  double loss;
  double j_user;
  double j_item;
  double j_curv;
  double kappa_u;
  double kappa_i;
  double wall_ms;
} coriem_progress;

typedef void (*coriem_progress_fn)(const coriem_progress* row, void* user_data);
typedef void (*coriem_warning_fn)(const char* message, void* user_data);

CORIEM_API const char* coriem_version(void);
/* Message of the last failure on this thread; empty when none. */
CORIEM_API const char* coriem_last_error(void);
/* Routes library warnings to fn; NULL restores the default (stderr). */
CORIEM_API void coriem_set_warning_handler(coriem_warning_fn fn, void* user_data);

/* Configuration. Keys and value syntax match the CLI flags without "--". */
CORIEM_API coriem_status coriem_config_create(coriem_config** out);
CORIEM_API void coriem_config_destroy(coriem_config* config);
CORIEM_API coriem_status coriem_config_set(coriem_config* config, const char* key, const char* value);
/* Copies the value and its terminator into buf when it fits; *needed receives
 * the full length including the terminator. */
CORIEM_API coriem_status coriem_config_get(const coriem_config* config, const char* key, char* buf, size_t cap,
                                           size_t* needed);
CORIEM_API coriem_status coriem_config_apply_json_file(coriem_config* config, const char* path);
CORIEM_API coriem_status coriem_config_validate(const coriem_config* config);
CORIEM_API size_t coriem_config_key_count(void);
/* Strings stay valid for the lifetime of the process. choices is a
 * '|'-separated list for CORIEM_KEY_CHOICE and empty otherwise. */
CORIEM_API coriem_status coriem_config_key_info(size_t index, const char** name, const char** help,
                                                coriem_key_kind* kind, const char** choices);

/* Datasets. */
CORIEM_API coriem_status coriem_dataset_load(const char* path, coriem_dataset** out);
CORIEM_API coriem_status coriem_dataset_synth(uint32_t n_users, uint32_t n_items, uint32_t n_clusters,
                                              size_t n_events, double noise, size_t feature_dim, uint64_t seed,
                                              coriem_dataset** out);
CORIEM_API coriem_status coriem_dataset_save(const coriem_dataset* ds, const char* path);
CORIEM_API coriem_status coriem_dataset_info(const coriem_dataset* ds, uint32_t* n_users, uint32_t* n_items,
                                             size_t* n_events, size_t* feature_dim);
CORIEM_API void coriem_dataset_destroy(coriem_dataset* ds);

/* Curvature precomputation over the training segment. Writes one cache file
 * per (interval, side) into a subdirectory of cache_dir named by a hash of the
 * dataset and the curvature options, and, when summary_path is not NULL, a CSV
 * table. *entries receives the number of cache entries. */
CORIEM_API coriem_status coriem_curvature(const coriem_config* config, const coriem_dataset* ds,
                                          const char* cache_dir, const char* summary_path, size_t* entries);

/* Training. progress may be NULL. When cache_dir is not NULL, curvature is
 * read from and written to the same subdirectory coriem_curvature uses. */
CORIEM_API coriem_status coriem_train(const coriem_config* config, const coriem_dataset* ds,
                                      const char* cache_dir, coriem_progress_fn progress, void* user_data,
                                      coriem_model** out);
CORIEM_API coriem_status coriem_model_save(const coriem_model* model, const char* path);
CORIEM_API coriem_status coriem_model_load(const char* path, coriem_model** out);
/* 16 hex digits plus terminator. */
CORIEM_API coriem_status coriem_model_digest(const coriem_model* model, char out[17]);
CORIEM_API coriem_status coriem_model_write_log(const coriem_model* model, const char* path);
/* Fails with CORIEM_ERR_USAGE when config asks for another model shape and
 * CORIEM_ERR_DATA when the dataset's entity counts differ. */
CORIEM_API coriem_status coriem_model_check_compatible(const coriem_model* model, const coriem_dataset* ds,
                                                       const coriem_config* config);
/* Copy of the configuration the model was trained with. Path-valued keys are
 * empty. */
CORIEM_API coriem_status coriem_model_config(const coriem_model* model, coriem_config** out);
CORIEM_API void coriem_model_destroy(coriem_model* model);

/* Evaluation with the recall cutoffs of config. */
CORIEM_API coriem_status coriem_evaluate(const coriem_model* model, const coriem_dataset* ds,
                                         const coriem_config* config, coriem_target target, coriem_report** out);
CORIEM_API coriem_status coriem_report_summary(const coriem_report* report, double* mrr, size_t* events,
                                               size_t* skipped);
CORIEM_API size_t coriem_report_k_count(const coriem_report* report);
CORIEM_API coriem_status coriem_report_recall(const coriem_report* report, size_t index, int* k, double* recall);
/* ranks_path may be NULL. */
CORIEM_API coriem_status coriem_report_write(const coriem_report* report, const char* summary_path,
                                             const char* ranks_path);
CORIEM_API void coriem_report_destroy(coriem_report* report);

#ifdef __cplusplus
}
#endif

#endif
