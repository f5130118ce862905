#ifndef SPLITINV_H
#define SPLITINV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SplitinvFamily {
  SPLITINV_FAMILY_RING = 0,
  SPLITINV_FAMILY_STAR = 1,
  SPLITINV_FAMILY_TORUS = 2,
  SPLITINV_FAMILY_LINE = 3,
} SplitinvFamily;

typedef enum SplitinvMode {
  SPLITINV_MODE_AG = 0,
  SPLITINV_MODE_SPLIT_FORM = 1,
} SplitinvMode;

typedef enum SplitinvProtocol {
  SPLITINV_PROTOCOL_DINING = 0,
  SPLITINV_PROTOCOL_MUTEX = 1,
  SPLITINV_PROTOCOL_MUTEX_LAST = 2,
} SplitinvProtocol;

typedef enum SplitinvStatus {
  SPLITINV_STATUS_OK = 0,
  SPLITINV_STATUS_NULL_ARGUMENT = 1,
  SPLITINV_STATUS_INVALID_UTF8 = 2,
  SPLITINV_STATUS_INVALID_MODEL = 3,
  SPLITINV_STATUS_INVALID_ARGUMENT = 4,
  SPLITINV_STATUS_OUT_OF_RANGE = 5,
  SPLITINV_STATUS_PANIC = 6,
} SplitinvStatus;

typedef enum SplitinvStrategy {
  SPLITINV_STRATEGY_EXPOSE = 0,
  SPLITINV_STRATEGY_LAST = 1,
} SplitinvStrategy;

typedef enum SplitinvVerdict {
  SPLITINV_VERDICT_PROVED = 0,
  SPLITINV_VERDICT_UNKNOWN = 1,
  SPLITINV_VERDICT_VIOLATED = 2,
} SplitinvVerdict;

// A parsed and compiled model.
typedef struct SplitinvModel SplitinvModel;

// A computed split invariant with its verdict.
typedef struct SplitinvResult SplitinvResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *splitinv_last_error(void);

// NUL-terminated version string with static lifetime.
const char *splitinv_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void splitinv_string_free(char *s);

// Parses and compiles a JSON model.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum SplitinvStatus splitinv_model_from_json(const char *json, struct SplitinvModel **out);

// Generates a model. `size` is the ring/line size or the number of star
// leaves; torus uses `size` rows and `cols` columns. Mutex protocols use
// the generated network's node count.
//
// # Safety
// `out` must be writable.
enum SplitinvStatus splitinv_model_generate(enum SplitinvFamily family,
                                            uintptr_t size,
                                            uintptr_t cols,
                                            enum SplitinvProtocol protocol,
                                            struct SplitinvModel **out);

// Canonical JSON of the model; free with `splitinv_string_free`.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_model_to_json(const struct SplitinvModel *model, char **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uintptr_t splitinv_model_node_count(const struct SplitinvModel *model);

// # Safety
// `model` must be null or a live handle; it is invalid afterwards.
void splitinv_model_free(struct SplitinvModel *model);

// Computes the strongest split invariant and checks the property.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_check(const struct SplitinvModel *model,
                                   enum SplitinvMode mode,
                                   struct SplitinvResult **out);

// Runs the refinement loop; `state_cap` bounds the oracle used when
// nothing is left to refine.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_refine(const struct SplitinvModel *model,
                                    enum SplitinvStrategy strategy,
                                    uintptr_t budget,
                                    uintptr_t state_cap,
                                    struct SplitinvResult **out);

// # Safety
// `result` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_result_verdict(const struct SplitinvResult *result,
                                            enum SplitinvVerdict *out);

// Number of nodes in the (possibly refined) model behind a result.
//
// # Safety
// `result` must be null or a live handle.
uintptr_t splitinv_result_node_count(const struct SplitinvResult *result);

// Number of local states in the component of `node`.
//
// # Safety
// `result` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_result_component_size(const struct SplitinvResult *result,
                                                   uintptr_t node,
                                                   uintptr_t *out);

// Per-node sorted listing of the invariant; free with
// `splitinv_string_free`.
//
// # Safety
// `result` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_result_dump(const struct SplitinvResult *result, char **out);

// Verdict and evidence as JSON; free with `splitinv_string_free`.
//
// # Safety
// `result` must be a live handle; `out` must be writable.
enum SplitinvStatus splitinv_result_verdict_json(const struct SplitinvResult *result, char **out);

// # Safety
// `result` must be null or a live handle; it is invalid afterwards.
void splitinv_result_free(struct SplitinvResult *result);

// Explores reachable global states up to `cap`.
//
// # Safety
// `model` must be a live handle; `states` and `complete` must be writable.
enum SplitinvStatus splitinv_reach(const struct SplitinvModel *model,
                                   uintptr_t cap,
                                   uintptr_t *states,
                                   bool *complete);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITINV_H */
