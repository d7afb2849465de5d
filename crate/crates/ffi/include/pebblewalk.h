#ifndef PEBBLEWALK_H
#define PEBBLEWALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  PW_STATUS_OK = 0,
  PW_STATUS_NULL_ARGUMENT = 1,
  PW_STATUS_INVALID_INPUT = 2,
  PW_STATUS_RUNTIME_FAULT = 3,
  PW_STATUS_NOT_FOUND = 4,
  PW_STATUS_OUT_OF_RANGE = 5,
  PW_STATUS_OUT_OF_SCOPE = 6,
  PW_STATUS_INCONCLUSIVE = 7,
  PW_STATUS_PANIC = 8,
} PwStatus;

/**
 * A strategy: collective definition plus initial configuration.
 */
typedef struct PwCollective PwCollective;

/**
 * A recorded realization.
 */
typedef struct PwTrace PwTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Look up a builtin strategy by name.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
PwStatus pw_collective_builtin(const char *name, PwCollective **out);

/**
 * Parse a strategy file given as TOML text.
 *
 * # Safety
 * `src` must be a valid NUL-terminated string and `out` a valid pointer.
 */
PwStatus pw_collective_from_toml(const char *src, PwCollective **out);

/**
 * # Safety
 * `c` must come from this library and not be used afterwards; null is a
 * no-op.
 */
void pw_collective_free(PwCollective *c);

/**
 * Number of members, automaton included.
 *
 * # Safety
 * `c` must be a live handle and `out` a valid pointer.
 */
PwStatus pw_collective_size(const PwCollective *c, size_t *out);

/**
 * Run `horizon` steps under the named adversary (`first`, `oscillator`,
 * `seeded:N`, `script:...`, `cycle:...`). On a runtime fault the partial
 * trace is still returned through `out` together with
 * `PwStatus::RuntimeFault`.
 *
 * # Safety
 * `c` must be a live handle, `adversary` a valid string, `out` a valid
 * pointer.
 */
PwStatus pw_simulate(const PwCollective *c, const char *adversary, size_t horizon, PwTrace **out);

/**
 * Number of records (moments) in the trace; 0 for null.
 *
 * # Safety
 * `t` must be a live handle or null.
 */
size_t pw_trace_len(const PwTrace *t);

/**
 * Position of `member` (1 = automaton) at moment `step`.
 *
 * # Safety
 * `t` must be a live handle; `x` and `y` valid pointers.
 */
PwStatus pw_trace_position(const PwTrace *t, size_t step, size_t member, int64_t *x, int64_t *y);

/**
 * Serialize the trace as JSON lines. Free the string with
 * [`pw_string_free`].
 *
 * # Safety
 * `t` must be a live handle and `out` a valid pointer.
 */
PwStatus pw_trace_to_jsonl(const PwTrace *t, char **out);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards; null is a
 * no-op.
 */
void pw_trace_free(PwTrace *t);

/**
 * Directedness check. `holds` receives the verdict; on a violation
 * `violated_at` receives the offending moment (it may be null).
 *
 * # Safety
 * `t` must be a live handle and `holds` a valid pointer.
 */
PwStatus pw_check_directed(const PwTrace *t,
                           int64_t c1,
                           size_t c2,
                           bool *holds,
                           size_t *violated_at);

/**
 * Number of schemas for 2 or 3 pebbles.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
PwStatus pw_schema_count(size_t pebbles, size_t *out);

/**
 * Search for a replay-validated zero-displacement lasso. On success the
 * certificate's prefix and cycle lengths (in steps) are written out.
 *
 * # Safety
 * `c` must be a live handle; `prefix_steps` and `cycle_steps` valid
 * pointers.
 */
PwStatus pw_defeat(const PwCollective *c,
                   size_t max_depth,
                   size_t *prefix_steps,
                   size_t *cycle_steps);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *pw_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; null is a
 * no-op.
 */
void pw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEBBLEWALK_H */
