/* ddselect: domain-relevance data selection for parallel corpora.
 *
 * C interface over the C++ core. All objects are opaque handles created and
 * destroyed through this API; every fallible call returns a dds_status and
 * leaves a human-readable message in dds_last_error() (thread-local) on
 * failure. Out-parameters are written only on DDS_OK.
 */
#ifndef DDSELECT_H
#define DDSELECT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DDS_API __declspec(dllexport)
#else
#define DDS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dds_status {
  DDS_OK = 0,
  DDS_ERR_USAGE = 1, /* bad parameters / flag combinations */
  DDS_ERR_DATA = 2,  /* validation or content errors */
  DDS_ERR_IO = 3     /* filesystem errors */
} dds_status;

typedef enum dds_side { DDS_SIDE_SOURCE = 0, DDS_SIDE_TARGET = 1 } dds_side;

typedef struct dds_corpus dds_corpus;
typedef struct dds_vocab dds_vocab;
typedef struct dds_lm dds_lm;
typedef struct dds_records dds_records;
typedef struct dds_ranking dds_ranking;
typedef struct dds_weights dds_weights;
typedef struct dds_manifests dds_manifests;

DDS_API const char* dds_version(void);

/* Message for the most recent failing call on this thread. */
DDS_API const char* dds_last_error(void);

/* Frees strings returned through char** out-parameters. */
DDS_API void dds_string_free(char* s);

/* ---- corpus ---- */

DDS_API dds_status dds_corpus_load(const char* source_path, const char* target_path,
                                   const char* name, dds_corpus** out);
DDS_API dds_status dds_corpus_preprocess(const dds_corpus* corpus, size_t max_len,
                                         int lowercase, dds_corpus** out);
DDS_API dds_status dds_corpus_sample(const dds_corpus* corpus, uint64_t target_size_tokens,
                                     uint64_t seed, dds_corpus** out);
DDS_API dds_status dds_corpus_write(const dds_corpus* corpus, const char* source_path,
                                    const char* target_path, const char* ids_path_or_null);
DDS_API uint64_t dds_corpus_num_pairs(const dds_corpus* corpus);
DDS_API uint64_t dds_corpus_source_tokens(const dds_corpus* corpus);
DDS_API uint64_t dds_corpus_target_tokens(const dds_corpus* corpus);
DDS_API void dds_corpus_free(dds_corpus* corpus);

/* ---- vocabulary and language models ---- */

DDS_API dds_status dds_vocab_build(const dds_corpus* corpus, dds_side side, uint32_t min_count,
                                   dds_vocab** out);
DDS_API uint64_t dds_vocab_size(const dds_vocab* vocab);
DDS_API void dds_vocab_free(dds_vocab* vocab);

/* smoothing: "kn" (modified Kneser-Ney) or "wb" (Witten-Bell). */
DDS_API dds_status dds_lm_train(const dds_corpus* corpus, dds_side side, const dds_vocab* vocab,
                                uint32_t order, const char* smoothing, dds_lm** out);
DDS_API dds_status dds_lm_save_arpa(const dds_lm* lm, const char* path);
DDS_API dds_status dds_lm_load_arpa(const char* path, dds_lm** out);
/* sentence: space-separated tokens; result in nats per token. */
DDS_API dds_status dds_lm_cross_entropy(const dds_lm* lm, const char* sentence, double* out);
DDS_API dds_status dds_lm_perplexity(const dds_lm* lm, const dds_corpus* corpus, dds_side side,
                                     double* out);
DDS_API void dds_lm_free(dds_lm* lm);

/* ---- scoring and ranking ---- */

DDS_API dds_status dds_ced_compute(const dds_corpus* bitext, const dds_lm* lm_in_source,
                                   const dds_lm* lm_general_source, const dds_lm* lm_in_target,
                                   const dds_lm* lm_general_target, unsigned workers,
                                   dds_records** out);
DDS_API dds_status dds_records_save_tsv(const dds_records* records, const char* path);
DDS_API dds_status dds_records_load_tsv(const char* path, const dds_corpus* bitext,
                                        dds_records** out);
DDS_API uint64_t dds_records_count(const dds_records* records);
DDS_API void dds_records_free(dds_records* records);

DDS_API dds_status dds_ranking_relevance(const dds_records* records, dds_ranking** out);
DDS_API dds_status dds_ranking_random(const dds_corpus* bitext, uint64_t seed,
                                      dds_ranking** out);
DDS_API dds_status dds_ranking_save(const dds_ranking* ranking, const char* path);
DDS_API dds_status dds_ranking_load(const char* path, dds_ranking** out);
DDS_API void dds_ranking_free(dds_ranking* ranking);

/* ---- selection schedules and manifests ---- */

typedef struct dds_schedule {
  const char* method;      /* "static" | "sampling" | "gradual" */
  uint32_t epochs;         /* >= 1 */
  int64_t budget_tokens;   /* -1 when absent */
  int64_t budget_sentences;/* -1 when absent */
  double alpha;            /* gradual; NAN when absent */
  double beta;             /* gradual; NAN when absent */
  int32_t eta;             /* gradual; -1 when absent */
  int64_t seed;            /* sampling; -1 when absent */
} dds_schedule;

DDS_API dds_status dds_weights_compute(const dds_records* records, dds_weights** out);
DDS_API void dds_weights_free(dds_weights* weights);

DDS_API dds_status dds_manifests_build(const dds_ranking* ranking, const dds_corpus* bitext,
                                       const dds_schedule* schedule,
                                       const dds_weights* weights_or_null, dds_manifests** out);
DDS_API dds_status dds_manifests_save(const dds_manifests* manifests, const char* path);
DDS_API dds_status dds_manifests_load(const char* path, dds_manifests** out);
DDS_API dds_status dds_manifests_emit_text(const dds_manifests* manifests,
                                           const dds_corpus* bitext, const char* dir);
DDS_API uint32_t dds_manifests_epochs(const dds_manifests* manifests);
DDS_API dds_status dds_relative_training_time(const dds_manifests* manifests,
                                              const dds_corpus* bitext,
                                              uint32_t baseline_epochs, double* out);
DDS_API dds_status dds_manifests_summary_json(const dds_manifests* manifests,
                                              const dds_corpus* bitext,
                                              uint32_t baseline_epochs, char** json_out);
DDS_API void dds_manifests_free(dds_manifests* manifests);

/* ---- diagnostics ---- */

/* Coverage of the test file's source word types by the union of all epochs. */
DDS_API dds_status dds_coverage(const char* test_source_path, const dds_manifests* manifests,
                                const dds_corpus* bitext, uint64_t* test_types,
                                uint64_t* unseen_types);
DDS_API dds_status dds_frequencies_json(const dds_manifests* manifests, char** json_out);

/* Proxy in-domain fit (nats/token, lower is better) of the pairs selected in
 * the given epoch (1-based), or of the union of all epochs when epoch == 0. */
DDS_API dds_status dds_proxy_fit(const dds_manifests* manifests, uint32_t epoch,
                                 const dds_corpus* bitext, const dds_corpus* dev, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DDSELECT_H */
