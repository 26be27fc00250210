#ifndef PAPAGENO_H
#define PAPAGENO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PapagenoStatus {
  PAPAGENO_STATUS_OK = 0,
  PAPAGENO_STATUS_NULL_POINTER = 1,
  PAPAGENO_STATUS_INVALID_UTF8 = 2,
  PAPAGENO_STATUS_INVALID_INPUT = 3,
  PAPAGENO_STATUS_IO = 4,
  PAPAGENO_STATUS_PARSE = 5,
  PAPAGENO_STATUS_VALIDATION = 6,
  PAPAGENO_STATUS_UNKNOWN_LABEL = 7,
  PAPAGENO_STATUS_DEGENERATE = 8,
  PAPAGENO_STATUS_BUFFER_TOO_SMALL = 9,
  PAPAGENO_STATUS_INTERNAL = 10,
} PapagenoStatus;

typedef enum PapagenoLevel {
  PAPAGENO_LEVEL_FINE = 12,
  PAPAGENO_LEVEL_TASK1 = 6,
  PAPAGENO_LEVEL_TASK2 = 2,
} PapagenoLevel;

typedef enum PapagenoMessageType {
  PAPAGENO_MESSAGE_TYPE_PERSONAL_EXPERIENCE = 0,
  PAPAGENO_MESSAGE_TYPE_NEWS_EXPERIENCE = 1,
  PAPAGENO_MESSAGE_TYPE_BEREAVED_EXPERIENCE = 2,
  PAPAGENO_MESSAGE_TYPE_CASE_REPORT = 3,
  PAPAGENO_MESSAGE_TYPE_CALL_FOR_ACTION = 4,
  PAPAGENO_MESSAGE_TYPE_IRRELEVANT = 5,
} PapagenoMessageType;

typedef enum PapagenoPerspective {
  PAPAGENO_PERSPECTIVE_PROBLEM_SUFFERING = 0,
  PAPAGENO_PERSPECTIVE_SOLUTION_COPING = 1,
  PAPAGENO_PERSPECTIVE_BOTH = 2,
  PAPAGENO_PERSPECTIVE_NEITHER = 3,
} PapagenoPerspective;

typedef enum PapagenoPerson {
  PAPAGENO_PERSON_FIRST = 0,
  PAPAGENO_PERSON_THIRD = 1,
  PAPAGENO_PERSON_MIXED = 2,
  PAPAGENO_PERSON_NOT_APPLICABLE = 3,
} PapagenoPerson;

/**
 * Opaque trained model.
 */
typedef struct PapagenoModel PapagenoModel;

/**
 * Coder dimensions for [`papageno_derive_category`].
 */
typedef struct PapagenoDimensions {
  enum PapagenoMessageType message_type;
  enum PapagenoPerspective perspective;
  enum PapagenoPerson person;
  bool serious;
  bool focus_on_bereaved;
  bool mentions_case;
} PapagenoDimensions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread; empty after a success.
 * The pointer stays valid until the next papageno call on the same thread.
 */
const char *papageno_last_error(void);

/**
 * Loads a model file written by `papageno train`.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum PapagenoStatus papageno_model_load(const char *path, struct PapagenoModel **out);

/**
 * Loads a model from its JSON text.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum PapagenoStatus papageno_model_from_json(const char *json, struct PapagenoModel **out);

/**
 * # Safety
 * `model` must come from a papageno load function and not be used afterwards. Null is ignored.
 */
void papageno_model_free(struct PapagenoModel *model);

/**
 * Label granularity the model predicts at.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum PapagenoStatus papageno_model_level(const struct PapagenoModel *model,
                                         enum PapagenoLevel *out);

/**
 * Predicts one post; `out_class` receives an index into the model level's classes
 * (see [`papageno_class_name`]).
 *
 * # Safety
 * `model` must be valid, `text` a valid C string, `out_class` a valid pointer.
 */
enum PapagenoStatus papageno_model_predict(const struct PapagenoModel *model,
                                           const char *text,
                                           uint32_t *out_class);

/**
 * Predicts `n` posts at once. `out_classes` must have room for `n` indices.
 *
 * # Safety
 * `texts` must point to `n` valid C strings and `out_classes` to `n` writable `uint32_t`.
 */
enum PapagenoStatus papageno_model_predict_batch(const struct PapagenoModel *model,
                                                 const char *const *texts,
                                                 uintptr_t n,
                                                 uint32_t *out_classes);

/**
 * Number of classes at `level`.
 */
uint32_t papageno_class_count(enum PapagenoLevel level);

/**
 * Static name of class `index` at `level`, or null when out of range.
 */
const char *papageno_class_name(enum PapagenoLevel level, uint32_t index);

/**
 * URL and mention replacement plus lowercasing. Writes into `buf` (capacity `len`);
 * `needed` receives the size including the terminating NUL, so a first call with a null
 * buffer can size the second.
 *
 * # Safety
 * `text` must be a valid C string; `buf` must have `len` writable bytes or be null.
 */
enum PapagenoStatus papageno_normalize(const char *text,
                                       char *buf,
                                       uintptr_t len,
                                       uintptr_t *needed);

/**
 * Exact binomial interval for `successes` out of `trials` at the given confidence (e.g. 0.95).
 *
 * # Safety
 * `lower` and `upper` must be valid pointers.
 */
enum PapagenoStatus papageno_clopper_pearson(uint64_t successes,
                                             uint64_t trials,
                                             double confidence,
                                             double *lower,
                                             double *upper);

/**
 * Cohen's kappa for two raters' integer codes over `n` items. `ci_lower`/`ci_upper` may be null.
 *
 * # Safety
 * `a` and `b` must point to `n` values; `kappa` must be valid.
 */
enum PapagenoStatus papageno_cohens_kappa(const uint32_t *a,
                                          const uint32_t *b,
                                          uintptr_t n,
                                          double *kappa,
                                          double *ci_lower,
                                          double *ci_upper);

/**
 * Fine category for a set of coder dimensions, as an index into the 12 fine classes.
 * `needs_adjudication` (may be null) is set when the combination should be reviewed.
 *
 * # Safety
 * `dims` and `out_category` must be valid pointers.
 */
enum PapagenoStatus papageno_derive_category(const struct PapagenoDimensions *dims,
                                             uint32_t *out_category,
                                             bool *needs_adjudication);

/**
 * Coarsens fine class `fine_index` to `level`, writing the class index at that level.
 *
 * # Safety
 * `out_class` must be a valid pointer.
 */
enum PapagenoStatus papageno_coarsen(uint32_t fine_index,
                                     enum PapagenoLevel level,
                                     uint32_t *out_class);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAPAGENO_H */
