#ifndef LEXFREE_H
#define LEXFREE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LfLevel {
  LF_LEVEL_CHAR = 0,
  LF_LEVEL_WORD = 1,
} LfLevel;

typedef enum LfMode {
  LF_MODE_WORD_LM_LEXICON = 0,
  LF_MODE_CHAR_LM_LEXICON = 1,
  LF_MODE_CHAR_LM_FREE = 2,
} LfMode;

typedef enum LfSilenceTerm {
  LF_SILENCE_TERM_PER_SEGMENT = 0,
  LF_SILENCE_TERM_PER_FRAME = 1,
} LfSilenceTerm;

typedef enum LfStatus {
  LF_STATUS_OK = 0,
  LF_STATUS_NULL_POINTER = 1,
  LF_STATUS_INVALID_UTF8 = 2,
  LF_STATUS_IO = 3,
  LF_STATUS_PARSE = 4,
  LF_STATUS_INVALID_ARGUMENT = 5,
  LF_STATUS_DECODE_FAILED = 6,
  LF_STATUS_PANIC = 7,
} LfStatus;

typedef struct LfDecodeResult LfDecodeResult;

typedef struct LfEmissions LfEmissions;

typedef struct LfLanguageModel LfLanguageModel;

typedef struct LfLexicon LfLexicon;

typedef struct LfDecoderOptions {
  double alpha;
  double beta;
  double gamma;
  size_t beam_size;
  /**
   * Use `INFINITY` to disable threshold pruning.
   */
  double beam_threshold;
  enum LfMode mode;
  enum LfSilenceTerm silence_term;
} LfDecoderOptions;

typedef struct LfScores {
  double am;
  /**
   * Natural log, unweighted.
   */
  double lm;
  double word_penalty;
  double silence_penalty;
  double total;
  size_t word_count;
  size_t silence_count;
  size_t effective_beam_size;
} LfScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *lf_last_error(void);

/**
 * Loads an ARPA file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LfStatus lf_lm_load_arpa(const char *path, enum LfLevel level, struct LfLanguageModel **out);

/**
 * # Safety
 * `lm` must come from [`lf_lm_load_arpa`] (or be null) and not be used afterwards.
 */
void lf_lm_free(struct LfLanguageModel *lm);

/**
 * Model order, or 0 for a null handle.
 *
 * # Safety
 * `lm` must be a live handle or null.
 */
size_t lf_lm_order(const struct LfLanguageModel *lm);

/**
 * log10 probability of a space-separated sentence, end of sentence
 * included. Character models read one token per space-separated item.
 *
 * # Safety
 * `lm` must be a live handle, `sentence` NUL-terminated, `out` valid.
 */
enum LfStatus lf_lm_sentence_logprob(const struct LfLanguageModel *lm,
                                     const char *sentence,
                                     double *out);

/**
 * Reads a `W2E1` emission file.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum LfStatus lf_emissions_load(const char *path, struct LfEmissions **out);

/**
 * Builds emissions from `frames * n_tokens` row-major natural-log scores.
 *
 * # Safety
 * `tokens` must hold `n_tokens` NUL-terminated strings and `scores`
 * `frames * n_tokens` values; `out` must be valid.
 */
enum LfStatus lf_emissions_new(const char *const *tokens,
                               size_t n_tokens,
                               const double *scores,
                               size_t frames,
                               struct LfEmissions **out);

/**
 * Number of frames, or 0 for a null handle.
 *
 * # Safety
 * `em` must be a live handle or null.
 */
size_t lf_emissions_frames(const struct LfEmissions *em);

/**
 * # Safety
 * `em` must come from this library (or be null) and not be used afterwards.
 */
void lf_emissions_free(struct LfEmissions *em);

/**
 * Loads a lexicon file against the token set of `em`. A non-null `word_lm`
 * enables lookahead smearing with its unigram scores.
 *
 * # Safety
 * `path` must be NUL-terminated, `em` live, `word_lm` live or null, `out` valid.
 */
enum LfStatus lf_lexicon_load(const char *path,
                              const struct LfEmissions *em,
                              const struct LfLanguageModel *word_lm,
                              struct LfLexicon **out);

/**
 * # Safety
 * `lex` must come from [`lf_lexicon_load`] (or be null) and not be used afterwards.
 */
void lf_lexicon_free(struct LfLexicon *lex);

struct LfDecoderOptions lf_decoder_options_default(void);

/**
 * Decodes one utterance. `lexicon` may be null in `CharLmFree` mode.
 *
 * # Safety
 * Handles must be live (or null where allowed); `opts` and `out` valid.
 */
enum LfStatus lf_decode(const struct LfEmissions *em,
                        const struct LfLanguageModel *lm,
                        const struct LfLexicon *lexicon,
                        const struct LfDecoderOptions *opts,
                        struct LfDecodeResult **out);

/**
 * Space-joined words, owned by the result.
 *
 * # Safety
 * `r` must be a live result handle or null.
 */
const char *lf_result_transcript(const struct LfDecodeResult *r);

/**
 * # Safety
 * `r` must be a live result handle; `out` valid.
 */
enum LfStatus lf_result_scores(const struct LfDecodeResult *r, struct LfScores *out);

/**
 * Copies up to `capacity` alignment token indices into `buf` and returns
 * the alignment length (one entry per frame).
 *
 * # Safety
 * `r` must be live or null; `buf` must hold `capacity` values (may be null if 0).
 */
size_t lf_result_alignment(const struct LfDecodeResult *r, size_t *buf, size_t capacity);

/**
 * # Safety
 * `r` must come from [`lf_decode`] (or be null) and not be used afterwards.
 */
void lf_result_free(struct LfDecodeResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXFREE_H */
