#ifndef DIALECTID_C_API_H_
#define DIALECTID_C_API_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DLID_API __declspec(dllexport)
#else
#define DLID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dlid_status {
  DLID_OK = 0,
  DLID_INVALID_ARGUMENT = 1,
  DLID_IO = 2,
  DLID_PARSE = 3,
  DLID_DUPLICATE_CONSTRUCTION = 4,
  DLID_INSUFFICIENT_DATA = 5,
  DLID_DEGENERATE_DATA = 6,
  DLID_SPACE_MISMATCH = 7,
  DLID_EMPTY_REGION = 8,
  DLID_INVALID_PROFILE = 9,
  DLID_FEATURE_SPACE_EXHAUSTED = 10,
  DLID_CONFIG = 11,
  DLID_STAGE = 12,
  DLID_INTERNAL = 13,
} dlid_status;

DLID_API const char* dlid_version(void);
DLID_API const char* dlid_status_string(dlid_status status);
// Message of the last failed call on this thread; "" after a success.
DLID_API const char* dlid_last_error(void);

// Grammars ----------------------------------------------------------------

typedef struct dlid_grammar dlid_grammar;

DLID_API dlid_status dlid_grammar_parse(const char* text, const char* name,
                                        dlid_grammar** out);
// name may be NULL (the file stem is used).
DLID_API dlid_status dlid_grammar_load(const char* path, const char* name,
                                       dlid_grammar** out);
DLID_API size_t dlid_grammar_size(const dlid_grammar* grammar);
DLID_API void dlid_grammar_free(dlid_grammar* grammar);

// Lexicons ----------------------------------------------------------------

typedef struct dlid_lexicon dlid_lexicon;

DLID_API dlid_status dlid_lexicon_parse(const char* tsv, dlid_lexicon** out);
DLID_API dlid_status dlid_lexicon_load(const char* path, dlid_lexicon** out);
DLID_API size_t dlid_lexicon_size(const dlid_lexicon* lexicon);
DLID_API void dlid_lexicon_free(dlid_lexicon* lexicon);

// Splits `text` on whitespace, annotates it with `lexicon` and writes one
// count per construction into counts[0 .. dlid_grammar_size).
DLID_API dlid_status dlid_count_matches(const dlid_grammar* grammar,
                                        const dlid_lexicon* lexicon,
                                        const char* text, uint32_t* counts,
                                        size_t counts_len);

// Models ------------------------------------------------------------------

typedef struct dlid_model dlid_model;

DLID_API dlid_status dlid_model_load(const char* path, dlid_model** out);
DLID_API size_t dlid_model_num_classes(const dlid_model* model);
DLID_API uint32_t dlid_model_dim(const dlid_model* model);
// NULL when k is out of range. Owned by the model.
DLID_API const char* dlid_model_class_label(const dlid_model* model, size_t k);
DLID_API const char* dlid_model_space(const dlid_model* model);
// Sparse input with strictly increasing indices below the model dim.
// `space` must equal dlid_model_space() (DLID_SPACE_MISMATCH otherwise).
DLID_API dlid_status dlid_model_predict_sparse(const dlid_model* model,
                                               const char* space,
                                               const uint32_t* indices,
                                               const double* values, size_t nnz,
                                               size_t* class_out);
DLID_API void dlid_model_free(dlid_model* model);

// Pipeline ----------------------------------------------------------------

typedef struct dlid_config dlid_config;

DLID_API dlid_status dlid_config_create(dlid_config** out);
DLID_API dlid_status dlid_config_load(const char* path, dlid_config** out);
DLID_API dlid_status dlid_config_set(dlid_config* config, const char* key,
                                     const char* value);
DLID_API dlid_status dlid_config_validate(const dlid_config* config);
DLID_API void dlid_config_free(dlid_config* config);

typedef void (*dlid_log_fn)(const char* line, void* user);

// Runs the named stages (all configured stages when n_stages is 0) in
// dependency order. `log` may be NULL.
DLID_API dlid_status dlid_run(const dlid_config* config, const char* const* stages,
                              size_t n_stages, dlid_log_fn log, void* user);

#ifdef __cplusplus
}
#endif

#endif  // DIALECTID_C_API_H_
