/* C ABI for the concession-analysis toolkit.
 *
 * Conventions:
 *   - fallible functions return a status code (CONCEDE_OK on success) and
 *     write results through out-pointers;
 *   - concede_last_error() returns a copy of this thread's last error
 *     message (free with concede_string_free), or NULL;
 *   - strings written through out-pointers are heap-allocated; release
 *     them with concede_string_free;
 *   - handles are opaque; release with the matching *_free function.
 *
 * Kept in sync with the Rust exports by a test in the concede-ffi crate.
 */

#ifndef CONCEDE_H
#define CONCEDE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CONCEDE_OK 0
#define CONCEDE_ERR_NULL_ARG 1
#define CONCEDE_ERR_UTF8 2
#define CONCEDE_ERR_PARSE 3
#define CONCEDE_ERR_IO 4
#define CONCEDE_ERR_INVALID 5
#define CONCEDE_ERR_PANIC 6

/* Opaque handles. */
typedef struct ConcedePatterns ConcedePatterns;
typedef struct ConcedeClassifier ConcedeClassifier;

/* Library version; static storage, do not free. */
const char *concede_version(void);

/* Copy of the last error message on this thread, or NULL.
 * Free with concede_string_free. */
char *concede_last_error(void);

/* Release a string returned by this library. */
void concede_string_free(char *s);

/* Split text into sentences; *out_json receives a JSON array of strings. */
int32_t concede_segment_sentences(const char *text, char **out_json);

/* Tokenize text; *out_json receives a JSON array of lowercase tokens. */
int32_t concede_tokenize(const char *text, char **out_json);

/* Jaccard similarity of two texts after tokenization and stopword
 * removal. */
int32_t concede_jaccard(const char *a, const char *b, double *out);

/* Pearson chi-square independence test over a row-major counts table. */
int32_t concede_chi2_independence(const uint64_t *counts, size_t rows,
                                  size_t cols, double *out_stat,
                                  double *out_p);

/* Fleiss kappa over a row-major items-by-categories vote table. */
int32_t concede_fleiss_kappa(const uint32_t *counts, size_t items,
                             size_t categories, double *out);

/* Load a curated pattern file ("[*]" is a gap; "#" starts a comment). */
int32_t concede_patterns_load(const char *path, ConcedePatterns **out);

/* Number of patterns held by the handle. */
size_t concede_patterns_len(const ConcedePatterns *handle);

/* Does any pattern match the conceding span of this marker use?
 * marker is one of "but", "though", "however", "while";
 * prev_sentence may be NULL. */
int32_t concede_patterns_match(const ConcedePatterns *handle,
                               const char *marker, const char *sentence,
                               const char *prev_sentence, bool *out);

void concede_patterns_free(ConcedePatterns *handle);

/* Load trained artifacts (vocab.json, selection.json, model_*.json, and
 * optionally a curated pattern file; pass NULL to skip the pattern
 * override). Predictions over this interface never use the Jaccard
 * feature. */
int32_t concede_classifier_load(const char *vocab_path,
                                const char *selection_path,
                                const char *model_path,
                                const char *patterns_path,
                                ConcedeClassifier **out);

/* Classify one marker use. prev_sentence/next_sentence may be NULL.
 * *out_label receives 1 for arg_c, 0 for other; *out_decision the raw
 * decision value; *out_pattern_hit whether a curated pattern forced the
 * label. */
int32_t concede_classifier_predict(const ConcedeClassifier *handle,
                                   const char *marker, const char *sentence,
                                   const char *prev_sentence,
                                   const char *next_sentence,
                                   int32_t *out_label, double *out_decision,
                                   bool *out_pattern_hit);

void concede_classifier_free(ConcedeClassifier *handle);

#ifdef __cplusplus
}
#endif

#endif /* CONCEDE_H */
