#ifndef LIPCOMP_H
#define LIPCOMP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LipcompStatus {
  LIPCOMP_STATUS_OK = 0,
  LIPCOMP_STATUS_INVALID_INPUT = 1,
  LIPCOMP_STATUS_EMPTY_DOMAIN = 2,
  LIPCOMP_STATUS_GENERATION = 3,
  /*
   Two decision routes or a certificate check disagreed.
   */
  LIPCOMP_STATUS_INCONSISTENCY = 4,
  LIPCOMP_STATUS_NULL_POINTER = 5,
  LIPCOMP_STATUS_UTF8 = 6,
  LIPCOMP_STATUS_PANIC = 7,
} LipcompStatus;

typedef enum LipcompMethod {
  LIPCOMP_METHOD_ORACLE = 0,
  LIPCOMP_METHOD_THEOREM = 1,
  LIPCOMP_METHOD_BOTH = 2,
} LipcompMethod;

/*
 A basepoint-preserving map between two spaces, holding its own copies.
 */
typedef struct LipcompMap LipcompMap;

/*
 A validated finite pointed metric space.
 */
typedef struct LipcompSpace LipcompSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer
 stays valid until the next `lipcomp_*` call on the same thread.
 */
const char *lipcomp_last_error(void);

/*
 # Safety
 `s` is NULL or a string returned by this library and not yet freed.
 */
void lipcomp_string_free(char *s);

/*
 Parses and validates a space from its JSON form.

 # Safety
 `json` is a NUL-terminated string; `out` is writable.
 */
enum LipcompStatus lipcomp_space_from_json(const char *json, struct LipcompSpace **out);

/*
 # Safety
 `space` is NULL or a live handle from [`lipcomp_space_from_json`].
 */
void lipcomp_space_free(struct LipcompSpace *space);

/*
 Number of points, or 0 for a NULL handle.

 # Safety
 `space` is NULL or a live handle.
 */
size_t lipcomp_space_len(const struct LipcompSpace *space);

/*
 # Safety
 `space` is a live handle; `out` is writable.
 */
enum LipcompStatus lipcomp_space_is_concave(const struct LipcompSpace *space, bool *out);

/*
 Writes `{"peak_property": bool, "witness": [x, y] | null}`.

 # Safety
 `space` is a live handle; `out_json` is writable.
 */
enum LipcompStatus lipcomp_space_peak_property(const struct LipcompSpace *space, char **out_json);

/*
 Writes the molecule classification table as a JSON array.

 # Safety
 `space` is a live handle; `out_json` is writable.
 */
enum LipcompStatus lipcomp_space_molecules(const struct LipcompSpace *space, char **out_json);

/*
 Binds a map JSON to a domain and codomain. The handle keeps its own
 copies of both spaces.

 # Safety
 `domain` and `codomain` are live handles; `json` is a NUL-terminated
 string; `out` is writable.
 */
enum LipcompStatus lipcomp_map_from_json(const struct LipcompSpace *domain,
                                         const struct LipcompSpace *codomain,
                                         const char *json,
                                         struct LipcompMap **out);

/*
 # Safety
 `map` is NULL or a live handle from [`lipcomp_map_from_json`].
 */
void lipcomp_map_free(struct LipcompMap *map);

/*
 Decides whether the composition operator is an isometry and writes the
 verdict JSON (certificate, `lip_phi`, hypotheses). Route disagreement
 under `Both` returns `Inconsistency`.

 # Safety
 `map` is a live handle; `out_json` is writable.
 */
enum LipcompStatus lipcomp_map_isometry(const struct LipcompMap *map,
                                        enum LipcompMethod method,
                                        char **out_json);

/*
 Re-checks a verdict JSON (such as the output of
 [`lipcomp_map_isometry`]) against the map.

 # Safety
 `map` is a live handle; `verdict_json` is a NUL-terminated string;
 `confirmed` is writable.
 */
enum LipcompStatus lipcomp_map_verify_verdict(const struct LipcompMap *map,
                                              const char *verdict_json,
                                              bool *confirmed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPCOMP_H */
