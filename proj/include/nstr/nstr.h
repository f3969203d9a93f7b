/*
 * nstr - noisy self-training for dense passage retrieval.
 *
 * C API over the C++ core. All objects are opaque handles created and
 * destroyed through these functions; every fallible call returns a status
 * code and leaves a message retrievable via nstr_last_error() on failure.
 * Handles are not thread-safe for concurrent mutation, but read-only use
 * (search, encode) may run concurrently.
 */
#ifndef NSTR_H
#define NSTR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t nstr_status;

enum {
  NSTR_OK = 0,
  NSTR_ERR_INVALID = 1, /* bad argument or failed validation */
  NSTR_ERR_PARSE = 2,   /* malformed input file */
  NSTR_ERR_IO = 3,      /* filesystem failure */
  NSTR_ERR_STATE = 4,   /* wrong object state, format or shape mismatch */
  NSTR_ERR_EXISTS = 5,  /* output exists and overwrite not requested */
  NSTR_ERR_UNKNOWN = 6
};

/* Message describing the most recent failure on this thread. */
const char* nstr_last_error(void);
const char* nstr_version(void);

typedef struct nstr_passages nstr_passages;
typedef struct nstr_queries nstr_queries;
typedef struct nstr_qrels nstr_qrels;
typedef struct nstr_vocab nstr_vocab;
typedef struct nstr_bm25 nstr_bm25;
typedef struct nstr_encoder nstr_encoder;
typedef struct nstr_dense nstr_dense;
typedef struct nstr_config nstr_config;

/* ---- corpus ---------------------------------------------------------- */

/* TSV `id<TAB>text`. */
nstr_status nstr_passages_load(const char* path, nstr_passages** out);
void nstr_passages_free(nstr_passages* passages);
int64_t nstr_passages_count(const nstr_passages* passages);

/* TSV `id<TAB>text[<TAB>answer1|answer2|...]`. */
nstr_status nstr_queries_load(const char* path, nstr_queries** out);
void nstr_queries_free(nstr_queries* queries);
int64_t nstr_queries_count(const nstr_queries* queries);

/* TREC TSV `qid<TAB>0<TAB>pid<TAB>rel`; every qid must exist in queries. */
nstr_status nstr_qrels_load(const char* path, const nstr_queries* queries, nstr_qrels** out);
void nstr_qrels_free(nstr_qrels* qrels);

/* ---- vocabulary ------------------------------------------------------ */

nstr_status nstr_vocab_build(const nstr_passages* passages,
                             const nstr_queries* queries /* may be NULL */,
                             int32_t min_frequency, nstr_vocab** out);
nstr_status nstr_vocab_load(const char* path, nstr_vocab** out);
nstr_status nstr_vocab_save(const nstr_vocab* vocab, const char* path);
void nstr_vocab_free(nstr_vocab* vocab);
int64_t nstr_vocab_size(const nstr_vocab* vocab);

/* Writes up to `cap` token ids; fails if the tokenization needs more. */
nstr_status nstr_tokenize(const nstr_vocab* vocab, const char* text, int32_t max_len,
                          int32_t* out_ids, int32_t cap, int32_t* out_len);

/* ---- bm25 ------------------------------------------------------------ */

nstr_status nstr_bm25_build(const nstr_passages* passages, const nstr_vocab* vocab,
                            int32_t max_passage_len, nstr_bm25** out);
nstr_status nstr_bm25_save(const nstr_bm25* index, const char* path);
nstr_status nstr_bm25_load(const char* path, nstr_bm25** out);
void nstr_bm25_free(nstr_bm25* index);

/* Top-k by BM25; zero-score documents omitted, so *out_n may be < k. */
nstr_status nstr_bm25_search(const nstr_bm25* index, const nstr_vocab* vocab,
                             const char* query_text, int32_t max_query_len, int32_t k, double k1,
                             double b, int64_t* out_ids, double* out_scores, int32_t* out_n);

/* ---- dual encoder ---------------------------------------------------- */

nstr_status nstr_encoder_init(uint64_t seed, int64_t vocab_size, int32_t dim, nstr_encoder** out);
nstr_status nstr_encoder_load(const char* path, nstr_encoder** out);
nstr_status nstr_encoder_save(const nstr_encoder* encoder, const char* path);
void nstr_encoder_free(nstr_encoder* encoder);
int32_t nstr_encoder_dim(const nstr_encoder* encoder);

/* Mean-pooled embedding; out_vec must hold dim doubles. */
nstr_status nstr_encode_text(const nstr_encoder* encoder, const nstr_vocab* vocab,
                             const char* text, int32_t max_len, double positional_scale,
                             double* out_vec);

/* ---- exact dense retrieval ------------------------------------------- */

nstr_status nstr_dense_build(const nstr_encoder* encoder, const nstr_passages* passages,
                             const nstr_vocab* vocab, int32_t max_passage_len,
                             double positional_scale, nstr_dense** out);
nstr_status nstr_dense_save(const nstr_dense* index, const char* path);
nstr_status nstr_dense_load(const char* path, nstr_dense** out);
void nstr_dense_free(nstr_dense* index);

/* Exact top-k by dot product; *out_n = min(k, passage count). */
nstr_status nstr_dense_search(const nstr_dense* index, const double* query_vec, int32_t dim,
                              int32_t k, int64_t* out_ids, double* out_scores, int32_t* out_n);

/* ---- configuration --------------------------------------------------- */

/* `key = value` lines, `#` comments; unknown keys are rejected. */
nstr_status nstr_config_load(const char* path, nstr_config** out);
nstr_status nstr_config_parse(const char* text, nstr_config** out);
nstr_status nstr_config_set(nstr_config* config, const char* key, const char* value);
void nstr_config_free(nstr_config* config);

/* ---- evaluation ------------------------------------------------------ */

/* metric: "mrr" | "recall" | "answer_recall" | "ndcg". queries/passages may
 * be NULL except for answer_recall (both required). */
nstr_status nstr_eval_metric(const char* metric, const char* run_path, const char* qrels_path,
                             const char* queries_path, const char* passages_path, int32_t k,
                             double* out_value);

/* ---- orchestration ---------------------------------------------------
 * One call per CLI subcommand: ingest, build-vocab, bm25-index,
 * bm25-search, train-teacher, gen-queries, encode-corpus, mine-negatives,
 * soft-label, pretrain, finetune, self-train, rerank-train, rerank, eval,
 * robustness, bench. Artifacts are written into run_dir; pass
 * seed_override < 0 to keep the config's seed. */
nstr_status nstr_command_run(const char* name, const nstr_config* config, const char* run_dir,
                             int64_t seed_override, int32_t overwrite);

#ifdef __cplusplus
}
#endif

#endif /* NSTR_H */
