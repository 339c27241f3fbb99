/* C interface to the boxtrack corpus synthesizer.
 *
 * Conventions:
 *   - A corpus is an opaque handle from bt_corpus_generate(), released with
 *     bt_corpus_free().
 *   - Fallible calls return a status code; BT_OK (0) means the out
 *     parameter was written. bt_status_name() names any code.
 *   - Structured data crosses the boundary as JSON in NUL-terminated,
 *     heap-allocated strings; release them with bt_string_free(). Strings
 *     returned as const char * are static and must not be freed.
 *   - Passing a pointer that is neither NULL nor a live value from this
 *     library is undefined behavior, as is releasing a handle twice.
 */

#ifndef BOXTRACK_H
#define BOXTRACK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define BT_OK 0
#define BT_NULL_ARGUMENT 1
#define BT_INVALID_ARGUMENT 2
#define BT_INVALID_UTF8 3
#define BT_INDEX_OUT_OF_RANGE 4
#define BT_GENERATION_FAILED 5
#define BT_RENDER_FAILED 6

/* Opaque: a world configuration plus its sampled scenarios. */
typedef struct BtCorpus BtCorpus;

/* Library version as a static string; do not free. */
const char *bt_version(void);

/* Static name of a status code; "unknown" for undefined values. */
const char *bt_status_name(int32_t status);

/* Sample `count` scenarios of the standard world under `seed`. */
int32_t bt_corpus_generate(size_t count, uint64_t seed, BtCorpus **out);

/* Release a corpus handle. NULL is accepted and ignored. */
void bt_corpus_free(BtCorpus *corpus);

/* Number of scenarios in the corpus. */
int32_t bt_corpus_len(const BtCorpus *corpus, size_t *out);

/* Scenario `index` as a JSON object; free with bt_string_free(). */
int32_t bt_scenario_json(const BtCorpus *corpus, size_t index, char **out);

/* All cloze examples of scenario `index` rendered under the named lexicon
 * ("base", "altform", or "base-rare"), as a JSON array; free with
 * bt_string_free(). */
int32_t bt_examples_json(const BtCorpus *corpus, size_t index,
                         const char *lexicon, char **out);

/* Few-shot prompt for one example (a JSON object from bt_examples_json()).
 * mode: 0 = all boxes, 1 = per box. demos: 0 = matched, 1 = alternative
 * form. Free the prompt with bt_string_free(). */
int32_t bt_prompt(int32_t mode, int32_t demos, const char *example_json,
                  char **out);

/* Release a string returned through a char **out parameter. NULL is
 * accepted and ignored. */
void bt_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* BOXTRACK_H */
