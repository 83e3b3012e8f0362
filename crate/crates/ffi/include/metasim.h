#ifndef METASIM_H
#define METASIM_H

/* Generated by cbindgen from metasim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes for every fallible entry point.
typedef enum MetasimStatus {
  // Success.
  METASIM_STATUS_OK = 0,
  // A required pointer argument was NULL.
  METASIM_STATUS_NULL_ARGUMENT = 1,
  // An input string was not valid UTF-8.
  METASIM_STATUS_INVALID_UTF8 = 2,
  // The scenario text failed to parse or validate.
  METASIM_STATUS_PARSE_ERROR = 3,
  // The run aborted on an internal invariant breach.
  METASIM_STATUS_RUN_FAILED = 4,
  // The transcript does not match a fresh run.
  METASIM_STATUS_MISMATCH = 5,
  // An unexpected internal error.
  METASIM_STATUS_INTERNAL = 6,
} MetasimStatus;

// Crypto provider selector.
typedef enum MetasimProvider {
  // X25519 + Ed25519 + ChaCha20-Poly1305 + HKDF-SHA256.
  METASIM_PROVIDER_DEFAULT = 0,
  // Deterministic test provider (not secure; for conformance vectors).
  METASIM_PROVIDER_TEST = 1,
} MetasimProvider;

// Opaque parsed scenario.
typedef struct MetasimScenario MetasimScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static human-readable text for a status code.
const char *metasim_status_message(enum MetasimStatus status);

// Library version as a static string.
const char *metasim_version(void);

// Parse scenario text into an opaque handle.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be a valid pointer.
// On `OK` the caller owns the handle and must free it with
// [`metasim_scenario_free`].
enum MetasimStatus metasim_scenario_parse(const char *text, struct MetasimScenario **out);

// Release a scenario handle. NULL is a no-op.
//
// # Safety
// `scenario` must be a pointer returned by [`metasim_scenario_parse`] that
// has not been freed already.
void metasim_scenario_free(struct MetasimScenario *scenario);

// Run a scenario under a seed and provider; write the transcript text to
// `out_transcript`.
//
// # Safety
// `scenario` must be a live handle from [`metasim_scenario_parse`];
// `out_transcript` must be a valid pointer. The returned string must be
// released with [`metasim_string_free`].
enum MetasimStatus metasim_run(const struct MetasimScenario *scenario,
                               uint64_t seed,
                               enum MetasimProvider provider,
                               char **out_transcript);

// Re-run the scenario and compare against a stored transcript.
//
// # Safety
// `scenario` must be a live handle; `transcript` must be a NUL-terminated
// string.
enum MetasimStatus metasim_verify(const struct MetasimScenario *scenario,
                                  uint64_t seed,
                                  enum MetasimProvider provider,
                                  const char *transcript);

// Release a string returned by this library. NULL is a no-op.
//
// # Safety
// `s` must be a pointer previously returned through an out-param of this
// library and not yet freed.
void metasim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METASIM_H */
