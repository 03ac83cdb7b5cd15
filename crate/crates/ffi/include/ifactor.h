#ifndef IFACTOR_H
#define IFACTOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum IfStatus {
  IF_STATUS_OK = 0,
  IF_STATUS_NULL_POINTER = 1,
  IF_STATUS_INVALID_UTF8 = 2,
  // Rejected input or failed computation; see `if_last_error`.
  IF_STATUS_DOMAIN = 3,
  // Output buffer too small.
  IF_STATUS_BUFFER_TOO_SMALL = 4,
  IF_STATUS_PANIC = 5,
} IfStatus;

// Route selection for [`if_identify`].
typedef enum IfRoute {
  IF_ROUTE_AUTO = 0,
  IF_ROUTE_JUNCTION_TREE = 1,
  IF_ROUTE_ALGEBRAIC = 2,
} IfRoute;

// Opaque fitted energy model.
typedef struct IfModel IfModel;

// Opaque interventional factor model structure.
typedef struct IfStructure IfStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version and model format, e.g. `0.1.0 (model format 1)`.
// Static storage; do not free.
const char *if_version(void);

// Message for the last failed call on this thread; empty after a
// success. Valid until the next call on the same thread.
const char *if_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void if_string_free(char *s);

// Parses a graph spec JSON document into a structure handle.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum IfStatus if_structure_from_json(const char *json, struct IfStructure **out);

// # Safety
// `s` must come from [`if_structure_from_json`] and not have been freed.
void if_structure_free(struct IfStructure *s);

// Identifies `target_json` (a level array) from `train_json` (an array of
// level arrays). Writes the certificate JSON to `out_json`; an
// unidentifiable target is a successful answer with `"identifiable": false`.
//
// # Safety
// Pointers must be valid; strings nul-terminated; `out_json` writable.
enum IfStatus if_identify(const struct IfStructure *s,
                          const char *train_json,
                          const char *target_json,
                          enum IfRoute route,
                          char **out_json);

// Loads a fitted model file.
//
// # Safety
// `path` must be nul-terminated; `out` writable.
enum IfStatus if_model_load(const char *path, struct IfModel **out);

// # Safety
// `m` must come from [`if_model_load`] and not have been freed.
void if_model_free(struct IfModel *m);

// Number of random variables; 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t if_model_num_vars(const struct IfModel *m);

// Number of intervention variables; 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t if_model_num_interventions(const struct IfModel *m);

// Unnormalized log density of one point under a regime.
//
// # Safety
// `x` holds `x_len` values and `regime` holds `regime_len` levels; `out`
// must be writable.
enum IfStatus if_model_log_unnorm(const struct IfModel *m,
                                  const double *x,
                                  size_t x_len,
                                  const size_t *regime,
                                  size_t regime_len,
                                  double *out);

// Draws `n` Gibbs samples (burn-in 500, thinning 5) into `out`, row-major
// `n × num_vars`. `out_len` is the buffer length in doubles.
//
// # Safety
// `regime` holds `regime_len` levels; `out` holds `out_len` doubles.
enum IfStatus if_model_gibbs(const struct IfModel *m,
                             const size_t *regime,
                             size_t regime_len,
                             size_t n,
                             uint64_t seed,
                             double *out,
                             size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IFACTOR_H */
