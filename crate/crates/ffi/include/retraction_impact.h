#ifndef RETRACTION_IMPACT_H
#define RETRACTION_IMPACT_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RiAlternative {
  RI_ALTERNATIVE_TWO_SIDED = 0,
  RI_ALTERNATIVE_LESS = 1,
  RI_ALTERNATIVE_GREATER = 2,
} RiAlternative;

typedef enum RiMetric {
  RI_METRIC_POST_IMPACT = 0,
  RI_METRIC_CHANGE_RATIO = 1,
} RiMetric;

// Result of every fallible call.
typedef enum RiStatus {
  RI_STATUS_OK = 0,
  RI_STATUS_NULL_ARGUMENT = 1,
  RI_STATUS_INVALID_UTF8 = 2,
  RI_STATUS_INVALID_ARGUMENT = 3,
  // Input could not be read or written.
  RI_STATUS_IO = 4,
  // Input was read but rejected by an analysis step.
  RI_STATUS_DATA = 5,
  RI_STATUS_PANIC = 6,
} RiStatus;

// Opaque corpus handle.
typedef struct RiCorpus RiCorpus;

typedef struct RiComparison {
  size_t treatments;
  size_t pairs_used;
  size_t pairs_excluded;
  double median_treatment;
  double median_control;
  double p_value;
} RiComparison;

typedef struct RiMannWhitney {
  double u_statistic;
  double p_value;
  double median_treatment;
  double median_control;
  // 1 when the exact distribution was used.
  int32_t exact;
} RiMannWhitney;

typedef struct RiGranger {
  double f_statistic;
  double p_value;
  size_t df_numerator;
  size_t df_denominator;
  int32_t degenerate_regressor;
} RiGranger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on the same thread.
const char *ri_last_error(void);

// Library version as a static string.
const char *ri_version(void);

// # Safety
// `s` must come from this library and not have been freed.
void ri_string_free(char *s);

// Loads a JSONL or CSV corpus file; `format` is "jsonl", "csv" or null to
// guess from the extension.
//
// # Safety
// `path` and `format` must be NUL-terminated strings or null; `out` must be
// writable.
enum RiStatus ri_corpus_load(const char *path, const char *format, struct RiCorpus **out_corpus);

// Builds a corpus from JSONL text held in memory.
//
// # Safety
// `jsonl` must be a NUL-terminated string; `out_corpus` must be writable.
enum RiStatus ri_corpus_from_jsonl(const char *jsonl, struct RiCorpus **out_corpus);

// # Safety
// `corpus` must come from `ri_corpus_load` or `ri_corpus_from_jsonl` and
// not have been freed.
void ri_corpus_free(struct RiCorpus *corpus);

// Number of papers; 0 for a null handle.
//
// # Safety
// `corpus` must be a live handle or null.
size_t ri_corpus_len(const struct RiCorpus *corpus);

// Number of retracted papers; 0 for a null handle.
//
// # Safety
// `corpus` must be a live handle or null.
size_t ri_corpus_retracted(const struct RiCorpus *corpus);

// Descriptive tables (rates, delays, ESI rates, citation distributions) as
// a JSON string.
//
// # Safety
// `corpus` must be a live handle; `out_json` must be writable.
enum RiStatus ri_describe_json(const struct RiCorpus *corpus, char **out_json);

// Matched cohort of one kind ("P_t", "A_t", "I_t", "P_citing", "P_coref",
// "A_coaut") as CSV text.
//
// # Safety
// `corpus` must be a live handle, `kind` a NUL-terminated string and
// `out_csv` writable.
enum RiStatus ri_cohort_csv(const struct RiCorpus *corpus,
                            const char *kind_name,
                            int32_t horizon,
                            int32_t yr_in_pre,
                            char **out_csv);

// Treatment versus control comparison for one kind.
//
// # Safety
// `corpus` must be a live handle, `kind` a NUL-terminated string and
// `out_result` writable.
enum RiStatus ri_compare(const struct RiCorpus *corpus,
                         const char *kind_name,
                         enum RiMetric metric,
                         enum RiAlternative alt,
                         int32_t horizon,
                         int32_t yr_in_pre,
                         struct RiComparison *out_result);

// Mann-Whitney U test of `a` against `b`.
//
// # Safety
// `a` and `b` must point to `na` and `nb` doubles; `out_result` must be
// writable.
enum RiStatus ri_mann_whitney(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              enum RiAlternative alt,
                              struct RiMannWhitney *out_result);

// Does `x` Granger-cause `y` at `lags`?
//
// # Safety
// `x` and `y` must each point to `len` doubles; `out_result` must be
// writable.
enum RiStatus ri_granger(const double *x,
                         const double *y,
                         size_t len,
                         size_t lags,
                         struct RiGranger *out_result);

// Fleiss' kappa of a row-major `subjects` x `categories` count matrix.
//
// # Safety
// `counts` must point to `subjects * categories` values; `out_kappa` must be
// writable.
enum RiStatus ri_fleiss_kappa(const uint32_t *counts,
                              size_t subjects,
                              size_t categories,
                              double *out_kappa);

// Generates a synthetic corpus with the default configuration and `seed`
// and writes it with its sidecar files. `config_json` may be null or a JSON
// object overriding configuration fields.
//
// # Safety
// `out_path` must be a NUL-terminated string; `config_json` a
// NUL-terminated string or null.
enum RiStatus ri_synth_write(uint64_t seed, const char *config_json, const char *out_path);

// Runs the full pipeline and writes the report directory. Optional inputs
// may be null. `timestamp` 0 leaves the timestamp out of the manifest.
//
// # Safety
// Every non-null pointer must be a NUL-terminated string.
enum RiStatus ri_report_write(const char *corpus_path,
                              const char *out_dir,
                              const char *annotations,
                              const char *dictionary,
                              const char *media_list,
                              int32_t timestamp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RETRACTION_IMPACT_H */
