/* arbor C API: opaque handles plus error codes over the tree-search engine.
 * All functions are thread-compatible; handles must not be shared across
 * threads without external synchronization. Strings returned through char**
 * are owned by the caller and freed with arbor_string_free. */

#ifndef ARBOR_ARBOR_H
#define ARBOR_ARBOR_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef ARBOR_API
#if defined(_WIN32)
#define ARBOR_API __declspec(dllexport)
#else
#define ARBOR_API __attribute__((visibility("default")))
#endif
#endif

typedef enum arbor_status {
  ARBOR_OK = 0,
  ARBOR_ERR_INVALID_ARGUMENT = 1,
  ARBOR_ERR_IO = 2,
  ARBOR_ERR_PARSE = 3,
  ARBOR_ERR_CONFIG = 4,
  ARBOR_ERR_GATEWAY = 5,
  ARBOR_ERR_EXEC = 6,
  ARBOR_ERR_STATE = 7,
  ARBOR_ERR_PARTIAL = 8, /* run finished but some problems failed */
  ARBOR_ERR_UNKNOWN = 9
} arbor_status;

typedef struct arbor_problem_set arbor_problem_set;
typedef struct arbor_config arbor_config;
typedef struct arbor_run arbor_run;

ARBOR_API const char* arbor_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
ARBOR_API const char* arbor_last_error(void);

ARBOR_API void arbor_string_free(char* s);

/* ---------------------------------------------------------------- problems */

ARBOR_API arbor_status arbor_problem_set_load(const char* path,
                                              arbor_problem_set** out);
ARBOR_API size_t arbor_problem_set_size(const arbor_problem_set* set);
ARBOR_API const char* arbor_problem_set_id(const arbor_problem_set* set,
                                           size_t index);
ARBOR_API void arbor_problem_set_free(arbor_problem_set* set);

/* ----------------------------------------------------------------- config */

ARBOR_API arbor_status arbor_config_create(arbor_config** out);
ARBOR_API arbor_status arbor_config_load(const char* path, arbor_config** out);

/* Dotted keys with string values, coerced per key. Keys include: policy,
 * budget, max_depth, max_width, verification_enabled, abort_enabled,
 * critic_scoring_enabled, seed, backend, transcript, record, out_dir,
 * workers, prompts_dir, scratch_root, exec.per_test_timeout_ms,
 * exec.memory_cap_bytes, exec.max_output_bytes, exec.workers,
 * agents.<role>.model_id, agents.<role>.temperature,
 * live.base_url, live.path, live.api_key_env. */
ARBOR_API arbor_status arbor_config_set(arbor_config* config, const char* key,
                                        const char* value);
ARBOR_API arbor_status arbor_config_to_json(const arbor_config* config,
                                            char** json_out);
ARBOR_API void arbor_config_free(arbor_config* config);

/* -------------------------------------------------------------------- run */

typedef void (*arbor_progress_fn)(const char* problem_id, int completed,
                                  int total, int solved, void* user);

ARBOR_API arbor_status arbor_run_execute(const arbor_problem_set* problems,
                                         const arbor_config* config,
                                         arbor_progress_fn progress, void* user,
                                         arbor_run** out);

ARBOR_API double arbor_run_pass_at_1(const arbor_run* run);
ARBOR_API size_t arbor_run_problem_count(const arbor_run* run);
ARBOR_API size_t arbor_run_error_count(const arbor_run* run);
ARBOR_API arbor_status arbor_run_emit_report(const arbor_run* run,
                                             const char* out_dir);
ARBOR_API arbor_status arbor_run_summary_json(const arbor_run* run,
                                              char** json_out);
ARBOR_API void arbor_run_free(arbor_run* run);

/* Single-problem search with a verbose tree trace (the CLI demo verb).
 * problem_id may be NULL to take the first problem in the set. */
ARBOR_API arbor_status arbor_demo(const arbor_problem_set* problems,
                                  const arbor_config* config,
                                  const char* problem_id, char** trace_out);

/* Recomputes summary and curve files from an emitted report directory and
 * returns the summary as JSON. */
ARBOR_API arbor_status arbor_report_recompute(const char* report_dir,
                                              char** summary_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ARBOR_ARBOR_H */
