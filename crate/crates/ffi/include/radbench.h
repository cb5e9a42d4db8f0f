#ifndef RADBENCH_H
#define RADBENCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RbStatus {
  RB_STATUS_OK = 0,
  RB_STATUS_NULL_ARGUMENT = 1,
  RB_STATUS_INVALID_UTF8 = 2,
  RB_STATUS_CONFIG_ERROR = 3,
  RB_STATUS_IO_ERROR = 4,
  // Some cells failed, the replay diverged or the report had no rows.
  RB_STATUS_PARTIAL_FAILURE = 5,
  RB_STATUS_NOT_FOUND = 6,
  RB_STATUS_INVALID_ARGUMENT = 7,
  RB_STATUS_PANIC = 8,
} RbStatus;

typedef enum RbMessageKind {
  RB_MESSAGE_KIND_CALL = 0,
  RB_MESSAGE_KIND_END_CALL = 1,
  RB_MESSAGE_KIND_NO_CALL = 2,
  RB_MESSAGE_KIND_PARSE_FAILURE = 3,
} RbMessageKind;

// A loaded run configuration.
typedef struct RbConfig RbConfig;

// A generated tool set together with the record and task it was built for.
typedef struct RbToolset RbToolset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *rb_last_error(void);

// Library version as a static string.
const char *rb_version(void);

// # Safety
// `s` must come from this library and not have been freed.
void rb_string_free(char *s);

// Load a TOML run configuration. Relative paths resolve against the
// file's directory.
//
// # Safety
// `path` must be a valid C string and `out` a writable pointer.
enum RbStatus rb_config_load(const char *path, struct RbConfig **out);

// Parse a TOML run configuration from text.
//
// # Safety
// `text` must be a valid C string and `out` a writable pointer.
enum RbStatus rb_config_parse(const char *text, struct RbConfig **out);

// # Safety
// `config` must be a live handle and `dir` a valid C string.
enum RbStatus rb_config_set_output_dir(struct RbConfig *config, const char *dir);

// Number of cells the configuration enumerates.
//
// # Safety
// `config` must be a live handle and `out` a writable pointer.
enum RbStatus rb_config_cell_count(const struct RbConfig *config, size_t *out);

// # Safety
// `config` must be null or a handle not yet freed.
void rb_config_free(struct RbConfig *config);

// Execute every pending cell. `done` and `failed` may be null.
// Returns [`RbStatus::PartialFailure`] when any cell failed.
//
// # Safety
// `config` must be a live handle; `done` and `failed` null or writable.
enum RbStatus rb_run(const struct RbConfig *config, bool resume, size_t *done, size_t *failed);

// Write the report files into a run directory.
//
// # Safety
// `dir` must be a valid C string.
enum RbStatus rb_report(const char *dir);

// Re-drive the stored sessions of the config's output directory.
// `sessions` may be null. Returns [`RbStatus::PartialFailure`] on any
// mismatch.
//
// # Safety
// `config` must be a live handle; `sessions` null or writable.
enum RbStatus rb_replay(const struct RbConfig *config, size_t *sessions);

// Generate the tool set of one bundled record, task and condition.
//
// # Safety
// `condition` and `record_id` must be valid C strings and `out` writable.
enum RbStatus rb_toolset_generate(const char *condition,
                                  uint64_t seed,
                                  const char *record_id,
                                  uint8_t task,
                                  struct RbToolset **out);

// # Safety
// `toolset` must be a live handle.
size_t rb_toolset_len(const struct RbToolset *toolset);

// Tool cards as a JSON object keyed by tool name. Free with
// [`rb_string_free`].
//
// # Safety
// `toolset` must be a live handle.
char *rb_toolset_json(const struct RbToolset *toolset);

// The withheld resource as JSON, or null for sets without a gap.
//
// # Safety
// `toolset` must be a live handle.
char *rb_toolset_gap_json(const struct RbToolset *toolset);

// Whether the task can be completed with the set.
//
// # Safety
// `toolset` must be a live handle and `out` writable.
enum RbStatus rb_toolset_solvable(const struct RbToolset *toolset, bool *out);

// # Safety
// `toolset` must be null or a handle not yet freed.
void rb_toolset_free(struct RbToolset *toolset);

// Classify an agent response by the protocol block it carries.
//
// # Safety
// `text` must be a valid C string and `out` writable.
enum RbStatus rb_parse_response(const char *text, enum RbMessageKind *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RADBENCH_H */
