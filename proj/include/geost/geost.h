/* Student-teacher point-cloud anomaly detection pipeline, C interface.
 *
 * All functions return GEOST_OK on success; on failure they return a status
 * code and geost_last_error() holds a human-readable message for the calling
 * thread. Handles are opaque; free them with the matching *_free call. */
#ifndef GEOST_H
#define GEOST_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum geost_status {
    GEOST_OK = 0,
    GEOST_ERR_INVALID_ARGUMENT = 1,
    GEOST_ERR_IO = 2,
    GEOST_ERR_FORMAT = 3,
    GEOST_ERR_NUMERIC = 4,
    GEOST_ERR_INTERNAL = 5
} geost_status;

/* Message of the most recent failed call in the current thread. Never NULL;
 * the pointer stays valid until the next failed call in the same thread. */
const char* geost_last_error(void);

/* ---- configuration ----------------------------------------------------- */

typedef struct geost_config geost_config;

/* Full-scale defaults; apply a preset or set keys to change them. */
geost_config* geost_config_new(void);
void geost_config_free(geost_config* config);

/* "paper" (the defaults) or "desk" (minutes-scale). */
geost_status geost_config_preset(geost_config* config, const char* name);

/* Flat `section.key = value` file; unknown keys are rejected. */
geost_status geost_config_load_file(geost_config* config, const char* path);

/* Set one key, e.g. geost_config_set(c, "net.d", "16"). */
geost_status geost_config_set(geost_config* config, const char* key,
                              const char* value);

/* 16 hex digits plus NUL; buf_len must be at least 17. */
geost_status geost_config_hash(const geost_config* config, char* buf,
                               size_t buf_len);

/* ---- pipeline stages ---------------------------------------------------- */

/* Progress callback; may be NULL. Messages are single lines without '\n'. */
typedef void (*geost_log_fn)(const char* message, void* user_data);

/* Synthetic benchmark scans (train/test geoscan files plus manifest). */
geost_status geost_run_synth(const geost_config* config, const char* out_dir,
                             geost_log_fn log, void* user_data);

/* Random multi-model scenes for pretraining (geopc files plus manifest). */
geost_status geost_run_gen_scenes(const geost_config* config,
                                  const char* out_dir, geost_log_fn log,
                                  void* user_data);

/* Self-supervised teacher pretraining; writes a checkpoint to out_path. */
geost_status geost_run_pretrain(const geost_config* config,
                                const char* scenes_dir, const char* out_path,
                                geost_log_fn log, void* user_data);

/* Per-category student training; writes <out_dir>/<category>/model.gst. */
geost_status geost_run_train(const geost_config* config,
                             const char* teacher_path, const char* data_dir,
                             const char* out_dir, geost_log_fn log,
                             void* user_data);

/* Scores all test scans; writes geoscore files per category. */
geost_status geost_run_score(const geost_config* config, const char* model_dir,
                             const char* data_dir, const char* out_dir,
                             geost_log_fn log, void* user_data);

/* AU-PRO evaluation; writes report.csv, curves.csv and report.json. */
geost_status geost_run_eval(const geost_config* config, const char* scores_dir,
                            const char* data_dir, const char* out_dir,
                            geost_log_fn log, void* user_data);

/* Full chain inside work_dir. */
geost_status geost_run_e2e(const geost_config* config, const char* work_dir,
                           geost_log_fn log, void* user_data);

#ifdef __cplusplus
}
#endif

#endif /* GEOST_H */
