#ifndef CLPNLP_H
#define CLPNLP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClpStatus {
  CLP_STATUS_OK = 0,
  CLP_STATUS_NULL_POINTER = 1,
  CLP_STATUS_INVALID_UTF8 = 2,
  /**
   * Grammar text or file could not be loaded.
   */
  CLP_STATUS_LOAD = 3,
  /**
   * The input sentence or constraint text is malformed.
   */
  CLP_STATUS_INPUT = 4,
  /**
   * The store rejected the request, e.g. an unknown variable.
   */
  CLP_STATUS_STORE = 5,
  CLP_STATUS_OUT_OF_RANGE = 6,
  CLP_STATUS_PANIC = 7,
} ClpStatus;

typedef enum ClpMode {
  CLP_MODE_CFG = 0,
  CLP_MODE_HPSG = 1,
} ClpMode;

typedef enum ClpStrategy {
  CLP_STRATEGY_ACTIVE = 0,
  CLP_STRATEGY_GENTEST = 1,
} ClpStrategy;

typedef struct ClpGrammar ClpGrammar;

typedef struct ClpResult ClpResult;

typedef struct ClpStore ClpStore;

typedef struct ClpStats {
  uint64_t windows_tried;
  uint64_t reductions_applied;
  uint64_t backtracks;
  uint64_t node_expansions;
} ClpStats;

/**
 * Message of the last failed call on this thread, or NULL. Borrowed; valid
 * until the next call into the library from this thread.
 */
const char *clp_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void clp_string_free(char *s);

/**
 * Loads a grammar from source text.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out_grammar` must be writable.
 */
enum ClpStatus clp_grammar_load(const char *source, struct ClpGrammar **out_grammar);

/**
 * Loads a grammar file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_grammar` must be writable.
 */
enum ClpStatus clp_grammar_load_file(const char *path, struct ClpGrammar **out_grammar);

/**
 * # Safety
 * `g` must be NULL or a grammar from `clp_grammar_load*`, freed once.
 */
void clp_grammar_free(struct ClpGrammar *g);

/**
 * Parses one whitespace-separated sentence. In `CLP_MODE_CFG` the tokens
 * are category names; in `CLP_MODE_HPSG` they are word forms. `limit` 0
 * means no limit. A sentence without analyses still succeeds, with an
 * empty result.
 *
 * # Safety
 * `g` must be a live grammar, `input` a NUL-terminated string and
 * `out_result` writable.
 */
enum ClpStatus clp_parse(const struct ClpGrammar *g,
                         const char *input,
                         enum ClpMode mode,
                         enum ClpStrategy strategy,
                         size_t limit,
                         struct ClpResult **out_result);

/**
 * Number of analyses; 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live result.
 */
size_t clp_result_count(const struct ClpResult *r);

/**
 * Printed form of analysis `i`, borrowed from the result; NULL when out of
 * range.
 *
 * # Safety
 * `r` must be NULL or a live result.
 */
const char *clp_result_get(const struct ClpResult *r, size_t i);

/**
 * # Safety
 * `r` must be a live result and `out_stats` writable.
 */
enum ClpStatus clp_result_stats(const struct ClpResult *r, struct ClpStats *out_stats);

/**
 * # Safety
 * `r` must be NULL or a result from `clp_parse`, freed once.
 */
void clp_result_free(struct ClpResult *r);

struct ClpStore *clp_store_new(void);

/**
 * # Safety
 * `s` must be NULL or a store from `clp_store_new`, freed once.
 */
void clp_store_free(struct ClpStore *s);

/**
 * Declares variable `name` with the complete domain given as
 * whitespace-separated values, e.g. `"1 2 3"`.
 *
 * # Safety
 * `s` must be a live store; `name` and `values` NUL-terminated strings.
 */
enum ClpStatus clp_store_var(struct ClpStore *s, const char *name, const char *values);

/**
 * Declares a boolean variable `name`.
 *
 * # Safety
 * `s` must be a live store; `name` a NUL-terminated string.
 */
enum ClpStatus clp_store_bool(struct ClpStore *s, const char *name);

/**
 * Tells a constraint in text syntax, e.g. `"x != y"` or
 * `"alldistinct(x,y,z)"`. `*consistent` is set to 0 when the store
 * rejected it (the store is then unchanged).
 *
 * # Safety
 * `s` must be a live store, `constraint` a NUL-terminated string and
 * `consistent` writable.
 */
enum ClpStatus clp_store_tell(struct ClpStore *s, const char *constraint, int32_t *consistent);

/**
 * Current domain of `name` as a newly allocated string such as `"{1,3}"`,
 * or its status letter for booleans. Free with `clp_string_free`.
 *
 * # Safety
 * `s` must be a live store, `name` a NUL-terminated string and
 * `out_text` writable.
 */
enum ClpStatus clp_store_domain(const struct ClpStore *s, const char *name, char **out_text);

/**
 * Takes a snapshot and writes its id.
 *
 * # Safety
 * `s` must be a live store and `id` writable.
 */
enum ClpStatus clp_store_snapshot(struct ClpStore *s, uint64_t *id);

/**
 * Undoes everything since snapshot `id`. Snapshots unwind LIFO.
 *
 * # Safety
 * `s` must be a live store.
 */
enum ClpStatus clp_store_restore(struct ClpStore *s, uint64_t id);

#endif  /* CLPNLP_H */
