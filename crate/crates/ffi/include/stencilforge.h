#ifndef STENCILFORGE_H
#define STENCILFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_ARGUMENT = 1,
  SF_STATUS_INVALID_UTF8 = 2,
  SF_STATUS_INVALID_CONFIG = 3,
  SF_STATUS_IO = 4,
  SF_STATUS_PARSE = 5,
  SF_STATUS_MISSING_SOLUTION = 6,
  SF_STATUS_OUT_OF_RANGE = 7,
  SF_STATUS_RENDER = 8,
  SF_STATUS_INTERNAL = 9,
} SfStatus;

/**
 * Stencil document.
 */
typedef struct SfDocument SfDocument;

/**
 * Evolution run advanced one generation at a time.
 */
typedef struct SfRun SfRun;

/**
 * Target alphabet.
 */
typedef struct SfTargets SfTargets;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static string.
 */
const char *sf_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next `sf_*` call on the same thread.
 */
const char *sf_last_error_message(void);

void sf_string_free(char *s);

void sf_bytes_free(uint8_t *data, size_t len);

/**
 * Built-in A–Z alphabet rendered at `canvas_size` pixels.
 */
enum SfStatus sf_targets_builtin(uint32_t canvas_size, struct SfTargets **out);

/**
 * Loads a target directory (manifest.txt plus PGM files).
 */
enum SfStatus sf_targets_load(const char *dir, struct SfTargets **out);

/**
 * Number of characters, 0 for a null handle.
 */
size_t sf_targets_len(const struct SfTargets *targets);

void sf_targets_free(struct SfTargets *targets);

/**
 * Creates a run and evaluates generation 0. `config_json` holds an
 * evolution config where every field is optional; null means all defaults.
 * `threads` 0 uses the global pool.
 */
enum SfStatus sf_run_new(const char *config_json,
                         const struct SfTargets *targets,
                         uint32_t threads,
                         struct SfRun **out);

/**
 * Advances up to `max_generations`; stops early when the run is finished.
 * Writes the number of generations advanced to `advanced` when non-null.
 */
enum SfStatus sf_run_step(struct SfRun *run, uint32_t max_generations, uint32_t *advanced);

/**
 * Latest completed generation.
 */
size_t sf_run_generation(const struct SfRun *run);

bool sf_run_is_finished(const struct SfRun *run);

size_t sf_run_population_size(const struct SfRun *run);

enum SfStatus sf_run_best_fitness(const struct SfRun *run, double *out);

/**
 * Per-generation statistics as CSV.
 */
enum SfStatus sf_run_stats_csv(const struct SfRun *run, char **out);

/**
 * Document of the population member at `rank` (0 = fittest).
 */
enum SfStatus sf_run_document(const struct SfRun *run, size_t rank, struct SfDocument **out);

void sf_run_free(struct SfRun *run);

enum SfStatus sf_document_load(const char *path, struct SfDocument **out);

enum SfStatus sf_document_from_json(const char *json, struct SfDocument **out);

enum SfStatus sf_document_to_json(const struct SfDocument *doc, char **out);

enum SfStatus sf_document_save(const struct SfDocument *doc, const char *path);

size_t sf_document_segment_count(const struct SfDocument *doc);

/**
 * Every segment in its own color.
 */
enum SfStatus sf_document_stencil_svg(const struct SfDocument *doc, char **out);

/**
 * Best expression of the character with Unicode scalar `codepoint`.
 */
enum SfStatus sf_document_glyph_svg(const struct SfDocument *doc, uint32_t codepoint, char **out);

/**
 * Grayscale PNG of the best expression. Release with `sf_bytes_free`.
 */
enum SfStatus sf_document_glyph_png(const struct SfDocument *doc,
                                    uint32_t codepoint,
                                    uint8_t **out,
                                    size_t *out_len);

/**
 * Text specimen. `mapping_json` is null for plain strokes, otherwise a shape
 * mapping applied with the built-in shape library.
 */
enum SfStatus sf_document_specimen_svg(const struct SfDocument *doc,
                                       const char *text,
                                       const char *mapping_json,
                                       double tracking,
                                       char **out);

void sf_document_free(struct SfDocument *doc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STENCILFORGE_H */
