/* Public C API for the frugal optimization library.
 *
 * All entry points are exported from the shared library with C linkage and
 * report failures through frugal_status codes; frugal_last_error() returns
 * a thread-local message for the most recent failure on the calling
 * thread. Strings returned through char** out-parameters are heap
 * allocated and must be released with frugal_string_free().
 */
#ifndef FRUGAL_H
#define FRUGAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FRUGAL_API __declspec(dllexport)
#else
#define FRUGAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum frugal_status {
    FRUGAL_OK = 0,
    FRUGAL_ERR_PARAM = 1,    /* bad argument values or shapes */
    FRUGAL_ERR_DATA = 2,     /* non-finite numeric input */
    FRUGAL_ERR_CONFIG = 3,   /* invalid configuration document */
    FRUGAL_ERR_DIVERGED = 4, /* trajectory escaped the divergence guard */
    FRUGAL_ERR_INTERNAL = 5
} frugal_status;

FRUGAL_API const char* frugal_version(void);
FRUGAL_API const char* frugal_last_error(void);
FRUGAL_API void frugal_string_free(char* s);

/* ---- high-level experiment runners (JSON config in, files out) ----
 *
 * config_json: run configuration document (see README for the schema).
 * out_dir:     directory for metrics CSV/JSON files; created if missing.
 * format:      "csv" or "json".
 * seed_override: >= 0 replaces the config's seed list with one seed.
 * summary_out: optional; receives the summary JSON text.
 */
FRUGAL_API frugal_status frugal_run_experiment(const char* config_json, const char* out_dir, const char* format,
                                               long seed_override, char** summary_out);
FRUGAL_API frugal_status frugal_run_reproj_toy(const char* ranks_csv, long update_gap, long seeds, long steps,
                                               const char* lrs_csv, double beta, const char* out_dir,
                                               const char* format, char** summary_out);
FRUGAL_API frugal_status frugal_run_angle_analysis(const char* config_json, const char* out_dir, const char* format,
                                                   char** summary_out);
FRUGAL_API frugal_status frugal_memory_report(const char* config_json, char** report_out);
FRUGAL_API frugal_status frugal_rate_check(const char* config_json, const char* out_dir, const char* format,
                                           long seed_override, char** summary_out);

/* ---- engine handle ----
 *
 * The engine config document has the shape
 *   { "groups": [ {"name": "...", "rows": R, "cols": C, "role": "..."} ],
 *     "optimizer": { ... same schema as the experiment config ... } }
 * Parameters start at zero; load them with frugal_engine_set_param.
 */
typedef struct frugal_engine frugal_engine;

FRUGAL_API frugal_status frugal_engine_create(const char* config_json, frugal_engine** out);
FRUGAL_API void frugal_engine_destroy(frugal_engine* engine);

FRUGAL_API frugal_status frugal_engine_group_count(const frugal_engine* engine, size_t* out);
FRUGAL_API frugal_status frugal_engine_group_name(const frugal_engine* engine, size_t group, const char** out);
FRUGAL_API frugal_status frugal_engine_group_shape(const frugal_engine* engine, size_t group, long* rows, long* cols);

/* buf must hold rows*cols doubles, row-major. */
FRUGAL_API frugal_status frugal_engine_set_param(frugal_engine* engine, size_t group, const double* buf, size_t len);
FRUGAL_API frugal_status frugal_engine_get_param(const frugal_engine* engine, size_t group, double* buf, size_t len);

/* grads: one row-major buffer per group, in group order. */
FRUGAL_API frugal_status frugal_engine_step(frugal_engine* engine, const double* const* grads, size_t ngroups);

FRUGAL_API frugal_status frugal_engine_step_count(const frugal_engine* engine, long* out);
/* Allocated optimizer-state floats (moment buffers plus stored bases). */
FRUGAL_API frugal_status frugal_engine_state_floats(const frugal_engine* engine, long* out);

#ifdef __cplusplus
}
#endif

#endif /* FRUGAL_H */
