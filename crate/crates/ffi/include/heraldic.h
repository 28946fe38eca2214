#ifndef HERALDIC_H
#define HERALDIC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum HeraldicStatus {
  HERALDIC_STATUS_OK = 0,
  HERALDIC_STATUS_NULL_POINTER = 1,
  HERALDIC_STATUS_INVALID_UTF8 = 2,
  HERALDIC_STATUS_PARSE_ERROR = 3,
  HERALDIC_STATUS_INVALID_SCHEME = 4,
  HERALDIC_STATUS_PHOTON_CAP_EXCEEDED = 5,
  HERALDIC_STATUS_UNKNOWN_BUILTIN = 6,
  HERALDIC_STATUS_INVALID_ARGUMENT = 7,
  /**
   * The requested quantity does not exist (a Pb whose herald never fires).
   */
  HERALDIC_STATUS_UNDEFINED = 8,
  HERALDIC_STATUS_PANIC = 9,
} HeraldicStatus;

typedef enum HeraldicTarget {
  HERALDIC_TARGET_CZ = 0,
  HERALDIC_TARGET_CX = 1,
} HeraldicTarget;

typedef enum HeraldicDetector {
  HERALDIC_DETECTOR_PNR = 0,
  HERALDIC_DETECTOR_THRESHOLD = 1,
} HeraldicDetector;

/**
 * Opaque metrics report handle.
 */
typedef struct HeraldicReport HeraldicReport;

/**
 * Opaque scheme handle.
 */
typedef struct HeraldicScheme HeraldicScheme;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *heraldic_last_error(void);

/**
 * Library version as a static string; do not free.
 */
const char *heraldic_version(void);

/**
 * Loads a library scheme by name (`NSx`, `CZ_1_16`, `CX_1_9`, `CZ_1_9`, `CZ_2_27`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum HeraldicStatus heraldic_scheme_builtin(const char *name, struct HeraldicScheme **out);

/**
 * Parses and validates a scheme JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HeraldicStatus heraldic_scheme_from_json(const char *json, struct HeraldicScheme **out);

/**
 * Serializes a scheme; free the result with [`heraldic_string_free`].
 *
 * # Safety
 * `scheme` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_scheme_to_json(const struct HeraldicScheme *scheme, char **out);

/**
 * # Safety
 * `scheme` must come from this library and `out` must be writable.
 */
enum HeraldicStatus heraldic_scheme_mode_count(const struct HeraldicScheme *scheme, size_t *out);

/**
 * # Safety
 * `scheme` must be null or come from this library, and not be used afterwards.
 */
void heraldic_scheme_free(struct HeraldicScheme *scheme);

/**
 * Evaluates a two-qubit scheme against a target gate.
 *
 * `corrected` adds the signal coincidence check when the scheme passes the
 * migration check. `photon_cap` of 0 keeps the default cap.
 *
 * # Safety
 * `scheme` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_evaluate(const struct HeraldicScheme *scheme,
                                      enum HeraldicTarget target,
                                      enum HeraldicDetector detector,
                                      bool corrected,
                                      size_t photon_cap,
                                      struct HeraldicReport **out);

/**
 * True when photons cannot leak into empty signal modes on a successful herald.
 *
 * # Safety
 * `scheme` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_migration_check(const struct HeraldicScheme *scheme, bool *out);

/**
 * # Safety
 * `report` must be null or come from this library, and not be used afterwards.
 */
void heraldic_report_free(struct HeraldicReport *report);

/**
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_fidelity(const struct HeraldicReport *report, double *out);

/**
 * Actuation probability.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_probability(const struct HeraldicReport *report, double *out);

/**
 * Herald probability for logical input 0..3.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_pa(const struct HeraldicReport *report,
                                       size_t input,
                                       double *out);

/**
 * Conditional success probability for logical input 0..3; `Undefined` when
 * the herald never fires for that input.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_pb(const struct HeraldicReport *report,
                                       size_t input,
                                       double *out);

/**
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_pa_mean(const struct HeraldicReport *report, double *out);

/**
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_pb_mean(const struct HeraldicReport *report, double *out);

/**
 * Whether the coincidence correction was applied.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_corrected(const struct HeraldicReport *report, bool *out);

/**
 * Report as JSON; free the result with [`heraldic_string_free`].
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
enum HeraldicStatus heraldic_report_to_json(const struct HeraldicReport *report, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, and not be used afterwards.
 */
void heraldic_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HERALDIC_H */
