#ifndef CHAINSYNTH_H
#define CHAINSYNTH_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_UTF8 = 2,
  CS_STATUS_PARSE = 3,
  CS_STATUS_INVALID_REQUEST = 4,
  CS_STATUS_SOLVER = 5,
  CS_STATUS_PANIC = 6,
} CsStatus;

/**
 * Opaque handle to a loaded family.
 */
typedef struct CsFamily CsFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cs_version(void);

/**
 * Message for the last failed call on this thread. Empty after a success.
 * The pointer stays valid until the next call into the library on this
 * thread.
 */
const char *cs_last_error(void);

/**
 * Parse a family written in the sketch language.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CsStatus cs_family_from_sketch(const char *src, struct CsFamily **out);

/**
 * Parse a family in the JSON exchange format.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CsStatus cs_family_from_json(const char *src, struct CsFamily **out);

/**
 * # Safety
 * `fam` must come from one of the loaders and not be freed twice.
 */
void cs_family_free(struct CsFamily *fam);

/**
 * Number of states, holes and realisations. The realisation count
 * saturates at `UINT64_MAX`. Any output pointer may be null.
 *
 * # Safety
 * `fam` must be a live handle; non-null outputs must be writable.
 */
enum CsStatus cs_family_info(const struct CsFamily *fam,
                             size_t *states,
                             size_t *holes,
                             uint64_t *realisations);

/**
 * Check one realisation. `assign` is `hole=option,...` (null or empty for a
 * family without holes); `prop` is a property such as `P>=0.5 [F s=4]`.
 * Writes `{"realisation", "spec", "value", "holds"}` to `out`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum CsStatus cs_check(const struct CsFamily *fam,
                       const char *assign,
                       const char *prop,
                       char **out);

/**
 * Run a synthesis query described by a JSON request, for example
 * `{"query": "partition", "spec": "P>=0.1 [F s=4]", "engine": "cegis"}`.
 *
 * Fields: `query` (feasible, partition, max, min, eps), `spec`, `goal`,
 * `engine` (enum, cegar, cegis; default enum), `epsilon`, `budget`,
 * `cheapest`, `cost` (structural, option-sum), `assign`, `tolerance`,
 * `threads`, `trace`. The report is written to `out` as JSON.
 *
 * # Safety
 * `request` must be NUL-terminated; `out` must be writable.
 */
enum CsStatus cs_synth(const struct CsFamily *fam, const char *request, char **out);

/**
 * Release a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAINSYNTH_H */
