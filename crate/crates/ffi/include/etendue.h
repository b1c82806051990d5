#ifndef ETENDUE_H
#define ETENDUE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EtStatus {
  ET_STATUS_OK = 0,
  ET_STATUS_NULL_ARGUMENT = 1,
  ET_STATUS_INVALID_UTF8 = 2,
  ET_STATUS_MALFORMED_INPUT = 3,
  ET_STATUS_AXIOM_VIOLATION = 4,
  ET_STATUS_UNKNOWN_OBJECT = 5,
  ET_STATUS_BUDGET_EXCEEDED = 6,
  ET_STATUS_HYPOTHESIS_FAILED = 7,
  ET_STATUS_THEOREM_VIOLATION = 8,
  ET_STATUS_INTERNAL = 9,
} EtStatus;

/*
 A validated finite category.
 */
typedef struct EtCategory EtCategory;

/*
 A finite presheaf together with its base.
 */
typedef struct EtPresheaf EtPresheaf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Parses and validates a category from its JSON description.

 # Safety
 `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum EtStatus et_category_from_json(const char *json, struct EtCategory **out);

/*
 Builds the truncation Δ_≤k.

 # Safety
 `out` must be a writable pointer.
 */
enum EtStatus et_category_build_delta(size_t k, struct EtCategory **out);

/*
 Builds the category of finite sets {1..m}, 1 ≤ m ≤ k.

 # Safety
 `out` must be a writable pointer.
 */
enum EtStatus et_category_build_finset(size_t k, struct EtCategory **out);

/*
 # Safety
 `cat` must be null or a handle returned by this library, not yet freed.
 */
void et_category_free(struct EtCategory *cat);

/*
 # Safety
 `cat` must be a live handle; the out-pointers must be writable.
 */
enum EtStatus et_category_counts(const struct EtCategory *cat, size_t *objects, size_t *morphisms);

/*
 Height of object `object` (objects are numbered in declaration order).

 # Safety
 `cat` must be a live handle and `out` writable.
 */
enum EtStatus et_category_height(const struct EtCategory *cat, size_t object, size_t *out);

/*
 JSON description of the category; free the result with [`et_string_free`].

 # Safety
 `cat` must be a live handle and `out` writable.
 */
enum EtStatus et_category_to_json(const struct EtCategory *cat, char **out);

/*
 Parses a presheaf description. A named base is a generated site such as
 `delta:2` or a path to a category JSON file.

 # Safety
 `json` must be a NUL-terminated string and `out` writable.
 */
enum EtStatus et_presheaf_from_json(const char *json, struct EtPresheaf **out);

/*
 Builds a bundled example (`representable:<obj>`, `boundary:<n>`,
 `loop_Y`, `collapsed_Z`) over a generated site (`delta:K`, `finset:K`).

 # Safety
 `example` and `site` must be NUL-terminated strings and `out` writable.
 */
enum EtStatus et_presheaf_example(const char *example, const char *site, struct EtPresheaf **out);

/*
 # Safety
 `x` must be null or a handle returned by this library, not yet freed.
 */
void et_presheaf_free(struct EtPresheaf *x);

/*
 Dimension of the presheaf; -1 for the empty presheaf.

 # Safety
 `x` must be a live handle and `out` writable.
 */
enum EtStatus et_presheaf_dim(const struct EtPresheaf *x, int64_t *out);

/*
 Depth of the site of minimal figures; -1 for the empty presheaf.

 # Safety
 `x` must be a live handle and `out` writable.
 */
enum EtStatus et_presheaf_depth(const struct EtPresheaf *x, int64_t *out);

/*
 Dimension report as JSON; `n_max < 0` selects the default range.
 Free the result with [`et_string_free`].

 # Safety
 `x` must be a live handle and `out` writable.
 */
enum EtStatus et_presheaf_report_json(const struct EtPresheaf *x, int64_t n_max, char **out);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void et_string_free(char *s);

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next call into the library on the same thread.
 */
const char *et_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ETENDUE_H */
