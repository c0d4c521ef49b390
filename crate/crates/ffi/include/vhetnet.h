#ifndef VHETNET_H
#define VHETNET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum VhStatus {
  VH_STATUS_OK = 0,
  VH_STATUS_NULL_POINTER = 1,
  VH_STATUS_INVALID_UTF8 = 2,
  VH_STATUS_INVALID_CONFIG = 3,
  VH_STATUS_UNKNOWN_KEY = 4,
  VH_STATUS_INVALID_ARGUMENT = 5,
  VH_STATUS_COMPUTATION = 6,
  VH_STATUS_PANIC = 7,
} VhStatus;

/*
 Association policy used by [`vh_coverage_simulate`].
 */
typedef enum VhPolicy {
  VH_POLICY_COMP3_SAME_TIER = 0,
  VH_POLICY_SINGLE_NEAREST = 1,
  VH_POLICY_STRONGEST_THREE = 2,
} VhPolicy;

/*
 Opaque scenario handle.
 */
typedef struct VhConfig VhConfig;

/*
 Effort knobs for [`vh_coverage_analytic`]. Zero fields take the defaults.
 */
typedef struct VhAnalyticOptions {
  uint64_t moment_trials;
  uint64_t assoc_trials;
  uint64_t triples;
} VhAnalyticOptions;

typedef struct VhCoverage {
  double p_total;
  double p_abs_cond;
  double p_tbs_cond;
  /*
   Probability of associating with the ABS tier.
   */
  double p_assoc_abs;
  double std_error;
  uint64_t trials;
} VhCoverage;

typedef struct VhAssociation {
  double p_abs;
  double std_error;
  double p_top3_abs;
  double p_top3_tbs;
  double p_mixed;
} VhAssociation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call into this library from the same thread.
 */
const char *vh_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *vh_version(void);

/*
 New handle holding the reference parameter set. Release with
 [`vh_config_free`].
 */
struct VhConfig *vh_config_default(void);

/*
 Parses and validates a JSON scenario into `*out`.

 # Safety
 `json` must be null or a NUL-terminated string; `out` must be null or
 writable.
 */
enum VhStatus vh_config_from_json(const char *json, struct VhConfig **out);

/*
 Sets one field by its JSON name; the handle is unchanged on failure.

 # Safety
 `cfg` must be null or a live handle; `key` and `value` null or
 NUL-terminated.
 */
enum VhStatus vh_config_set(struct VhConfig *cfg, const char *key, const char *value);

/*
 Serializes the handle to JSON. Release the string with [`vh_string_free`].

 # Safety
 `cfg` must be null or a live handle; `out` null or writable.
 */
enum VhStatus vh_config_to_json(const struct VhConfig *cfg, char **out);

/*
 # Safety
 `cfg` must be null or a handle not yet freed.
 */
void vh_config_free(struct VhConfig *cfg);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void vh_string_free(char *s);

/*
 Semi-analytic coverage probability at threshold `gamma_db`.

 # Safety
 `cfg` must be null or a live handle; `opts` null (defaults) or readable;
 `out` null or writable.
 */
enum VhStatus vh_coverage_analytic(const struct VhConfig *cfg,
                                   double gamma_db,
                                   uint64_t seed,
                                   const struct VhAnalyticOptions *opts,
                                   struct VhCoverage *out);

/*
 Monte Carlo coverage probability under `policy`.

 # Safety
 `cfg` must be null or a live handle; `out` null or writable.
 */
enum VhStatus vh_coverage_simulate(const struct VhConfig *cfg,
                                   double gamma_db,
                                   enum VhPolicy policy,
                                   uint64_t trials,
                                   uint64_t seed,
                                   struct VhCoverage *out);

/*
 Monte Carlo tier association for a user below the ABS disk centre.

 # Safety
 `cfg` must be null or a live handle; `out` null or writable.
 */
enum VhStatus vh_association_mc(const struct VhConfig *cfg,
                                uint64_t trials,
                                uint64_t seed,
                                struct VhAssociation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VHETNET_H */
