#include "nstr/nstr.h"

#include <cstring>
#include <string>

#include "commands.hpp"
#include "common.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "dense.hpp"
#include "eval.hpp"
#include "lexical.hpp"
#include "model.hpp"

namespace {

thread_local std::string g_last_error;

nstr_status status_of(const nstr::Error& e) {
  switch (e.code()) {
    case nstr::Errc::invalid:
      return NSTR_ERR_INVALID;
    case nstr::Errc::parse:
      return NSTR_ERR_PARSE;
    case nstr::Errc::io:
      return NSTR_ERR_IO;
    case nstr::Errc::state:
      return NSTR_ERR_STATE;
    case nstr::Errc::exists:
      return NSTR_ERR_EXISTS;
  }
  return NSTR_ERR_UNKNOWN;
}

// Runs fn, translating exceptions into status codes + last_error.
template <typename Fn>
nstr_status guarded(Fn&& fn) {
  try {
    fn();
    return NSTR_OK;
  } catch (const nstr::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NSTR_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return NSTR_ERR_UNKNOWN;
  }
}

nstr_status require(bool ok, const char* msg) {
  if (ok) return NSTR_OK;
  g_last_error = msg;
  return NSTR_ERR_INVALID;
}

}  // namespace

struct nstr_passages {
  nstr::PassageCollection value;
};
struct nstr_queries {
  nstr::QueryCollection value;
};
struct nstr_qrels {
  nstr::QRelSet value;
};
struct nstr_vocab {
  nstr::Vocabulary value;
};
struct nstr_bm25 {
  nstr::InvertedIndex value;
};
struct nstr_encoder {
  nstr::EncoderParams value;
};
struct nstr_dense {
  nstr::DenseIndex value;
};
struct nstr_config {
  nstr::Config value;
};

extern "C" {

const char* nstr_last_error(void) { return g_last_error.c_str(); }

const char* nstr_version(void) { return "0.1.0"; }

nstr_status nstr_passages_load(const char* path, nstr_passages** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_passages{nstr::load_passages(path)}; });
}

void nstr_passages_free(nstr_passages* passages) { delete passages; }

int64_t nstr_passages_count(const nstr_passages* passages) {
  return passages == nullptr ? 0 : static_cast<int64_t>(passages->value.size());
}

nstr_status nstr_queries_load(const char* path, nstr_queries** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded(
      [&] { *out = new nstr_queries{nstr::load_queries(path, std::nullopt).first}; });
}

void nstr_queries_free(nstr_queries* queries) { delete queries; }

int64_t nstr_queries_count(const nstr_queries* queries) {
  return queries == nullptr ? 0 : static_cast<int64_t>(queries->value.size());
}

nstr_status nstr_qrels_load(const char* path, const nstr_queries* queries, nstr_qrels** out) {
  if (auto s = require(path && queries && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_qrels{nstr::load_qrels(path, queries->value)}; });
}

void nstr_qrels_free(nstr_qrels* qrels) { delete qrels; }

nstr_status nstr_vocab_build(const nstr_passages* passages, const nstr_queries* queries,
                             int32_t min_frequency, nstr_vocab** out) {
  if (auto s = require(passages && out, "null argument")) return s;
  return guarded([&] {
    nstr::QueryCollection empty;
    *out = new nstr_vocab{nstr::build_vocab(
        passages->value, queries != nullptr ? queries->value : empty, min_frequency)};
  });
}

nstr_status nstr_vocab_load(const char* path, nstr_vocab** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_vocab{nstr::Vocabulary::load(path)}; });
}

nstr_status nstr_vocab_save(const nstr_vocab* vocab, const char* path) {
  if (auto s = require(vocab && path, "null argument")) return s;
  return guarded([&] { vocab->value.save(path); });
}

void nstr_vocab_free(nstr_vocab* vocab) { delete vocab; }

int64_t nstr_vocab_size(const nstr_vocab* vocab) {
  return vocab == nullptr ? 0 : static_cast<int64_t>(vocab->value.size());
}

nstr_status nstr_tokenize(const nstr_vocab* vocab, const char* text, int32_t max_len,
                          int32_t* out_ids, int32_t cap, int32_t* out_len) {
  if (auto s = require(vocab && text && out_ids && out_len, "null argument")) return s;
  return guarded([&] {
    auto tokens = nstr::tokenize(text, vocab->value, static_cast<std::size_t>(max_len));
    nstr::check(tokens.size() <= static_cast<std::size_t>(cap), nstr::Errc::invalid,
                "token buffer too small");
    for (std::size_t i = 0; i < tokens.size(); ++i) out_ids[i] = tokens[i];
    *out_len = static_cast<int32_t>(tokens.size());
  });
}

nstr_status nstr_bm25_build(const nstr_passages* passages, const nstr_vocab* vocab,
                            int32_t max_passage_len, nstr_bm25** out) {
  if (auto s = require(passages && vocab && out, "null argument")) return s;
  return guarded([&] {
    *out = new nstr_bm25{nstr::build_inverted_index(passages->value, vocab->value,
                                                    static_cast<std::size_t>(max_passage_len))};
  });
}

nstr_status nstr_bm25_save(const nstr_bm25* index, const char* path) {
  if (auto s = require(index && path, "null argument")) return s;
  return guarded([&] { index->value.save(path); });
}

nstr_status nstr_bm25_load(const char* path, nstr_bm25** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_bm25{nstr::InvertedIndex::load(path)}; });
}

void nstr_bm25_free(nstr_bm25* index) { delete index; }

nstr_status nstr_bm25_search(const nstr_bm25* index, const nstr_vocab* vocab,
                             const char* query_text, int32_t max_query_len, int32_t k, double k1,
                             double b, int64_t* out_ids, double* out_scores, int32_t* out_n) {
  if (auto s = require(index && vocab && query_text && out_ids && out_scores && out_n,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    auto tokens =
        nstr::tokenize(query_text, vocab->value, static_cast<std::size_t>(max_query_len));
    auto ranked = nstr::bm25_search(index->value, tokens, static_cast<std::size_t>(k), k1, b);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out_ids[i] = ranked[i].passage_id;
      out_scores[i] = ranked[i].score;
    }
    *out_n = static_cast<int32_t>(ranked.size());
  });
}

nstr_status nstr_encoder_init(uint64_t seed, int64_t vocab_size, int32_t dim,
                              nstr_encoder** out) {
  if (auto s = require(out != nullptr, "null argument")) return s;
  return guarded([&] { *out = new nstr_encoder{nstr::init_params(seed, vocab_size, dim)}; });
}

nstr_status nstr_encoder_load(const char* path, nstr_encoder** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_encoder{nstr::load_checkpoint(path)}; });
}

nstr_status nstr_encoder_save(const nstr_encoder* encoder, const char* path) {
  if (auto s = require(encoder && path, "null argument")) return s;
  return guarded([&] { nstr::save_checkpoint(encoder->value, path); });
}

void nstr_encoder_free(nstr_encoder* encoder) { delete encoder; }

int32_t nstr_encoder_dim(const nstr_encoder* encoder) {
  return encoder == nullptr ? 0 : encoder->value.dim;
}

nstr_status nstr_encode_text(const nstr_encoder* encoder, const nstr_vocab* vocab,
                             const char* text, int32_t max_len, double positional_scale,
                             double* out_vec) {
  if (auto s = require(encoder && vocab && text && out_vec, "null argument")) return s;
  return guarded([&] {
    auto tokens = nstr::tokenize(text, vocab->value, static_cast<std::size_t>(max_len));
    auto vec = nstr::encode(encoder->value, tokens, positional_scale);
    std::memcpy(out_vec, vec.data(), vec.size() * sizeof(double));
  });
}

nstr_status nstr_dense_build(const nstr_encoder* encoder, const nstr_passages* passages,
                             const nstr_vocab* vocab, int32_t max_passage_len,
                             double positional_scale, nstr_dense** out) {
  if (auto s = require(encoder && passages && vocab && out, "null argument")) return s;
  return guarded([&] {
    *out = new nstr_dense{nstr::build_dense_index(encoder->value, passages->value, vocab->value,
                                                  static_cast<std::size_t>(max_passage_len),
                                                  positional_scale)};
  });
}

nstr_status nstr_dense_save(const nstr_dense* index, const char* path) {
  if (auto s = require(index && path, "null argument")) return s;
  return guarded([&] { index->value.save(path); });
}

nstr_status nstr_dense_load(const char* path, nstr_dense** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_dense{nstr::DenseIndex::load(path)}; });
}

void nstr_dense_free(nstr_dense* index) { delete index; }

nstr_status nstr_dense_search(const nstr_dense* index, const double* query_vec, int32_t dim,
                              int32_t k, int64_t* out_ids, double* out_scores, int32_t* out_n) {
  if (auto s = require(index && query_vec && out_ids && out_scores && out_n, "null argument")) {
    return s;
  }
  return guarded([&] {
    nstr::EmbeddingVector vec(query_vec, query_vec + dim);
    auto ranked = nstr::dense_search(index->value, vec, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out_ids[i] = ranked[i].passage_id;
      out_scores[i] = ranked[i].score;
    }
    *out_n = static_cast<int32_t>(ranked.size());
  });
}

nstr_status nstr_config_load(const char* path, nstr_config** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_config{nstr::Config::from_file(path)}; });
}

nstr_status nstr_config_parse(const char* text, nstr_config** out) {
  if (auto s = require(text && out, "null argument")) return s;
  return guarded([&] { *out = new nstr_config{nstr::Config::from_string(text)}; });
}

nstr_status nstr_config_set(nstr_config* config, const char* key, const char* value) {
  if (auto s = require(config && key && value, "null argument")) return s;
  return guarded([&] { config->value.set(key, value); });
}

void nstr_config_free(nstr_config* config) { delete config; }

nstr_status nstr_eval_metric(const char* metric, const char* run_path, const char* qrels_path,
                             const char* queries_path, const char* passages_path, int32_t k,
                             double* out_value) {
  if (auto s = require(metric && run_path && out_value, "null argument")) return s;
  return guarded([&] {
    const std::string name = metric;
    auto run = nstr::RunResult::load_trec(run_path);
    if (name == "answer_recall") {
      nstr::check(queries_path != nullptr && passages_path != nullptr, nstr::Errc::invalid,
                  "answer_recall needs queries and passages");
      auto queries = nstr::load_queries(queries_path, std::nullopt).first;
      auto passages = nstr::load_passages(passages_path);
      *out_value = nstr::answer_recall_at_k(run, queries, passages,
                                            static_cast<std::size_t>(k));
      return;
    }
    nstr::check(qrels_path != nullptr && queries_path != nullptr, nstr::Errc::invalid,
                "metric needs qrels and queries");
    auto queries = nstr::load_queries(queries_path, std::nullopt).first;
    auto qrels = nstr::load_qrels(qrels_path, queries);
    if (name == "mrr") {
      *out_value = nstr::mrr_at_k(run, qrels, static_cast<std::size_t>(k));
    } else if (name == "recall") {
      *out_value = nstr::recall_at_k(run, qrels, static_cast<std::size_t>(k));
    } else if (name == "ndcg") {
      *out_value = nstr::ndcg_at_k(run, qrels, static_cast<std::size_t>(k));
    } else {
      nstr::fail(nstr::Errc::invalid, "unknown metric: " + name);
    }
  });
}

nstr_status nstr_command_run(const char* name, const nstr_config* config, const char* run_dir,
                             int64_t seed_override, int32_t overwrite) {
  if (auto s = require(name && config && run_dir, "null argument")) return s;
  return guarded([&] {
    nstr::Config effective = config->value;
    if (seed_override >= 0) effective.override_seed(static_cast<std::uint64_t>(seed_override));
    nstr::run_subcommand(name, effective, run_dir, overwrite != 0);
  });
}

}  // extern "C"
