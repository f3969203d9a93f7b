#pragma once

#include <string>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "lexical.hpp"
#include "model.hpp"
#include "train.hpp"

namespace nstr {

// Exact retrieval over encoded passages. Every search is a full scan; ties
// break by ascending passage id so rankings are deterministic.
struct DenseIndex {
  std::vector<DocId> ids;
  std::int32_t dim = 0;
  std::vector<float> embeddings;  // row-major ids.size() x dim

  const float* row(std::size_t i) const { return embeddings.data() + i * std::size_t(dim); }

  // Embedding matrix file: magic NSTE, u32 version=1, u32 rows, u32 dim,
  // i64 passage ids, then f32 rows.
  void save(const std::string& path) const;
  static DenseIndex load(const std::string& path);
};

DenseIndex build_dense_index(const EncoderParams& params, const PassageCollection& passages,
                             const Vocabulary& vocab, std::size_t max_passage_len,
                             double positional_scale = 0.0);

std::vector<ScoredDoc> dense_search(const DenseIndex& index, const EmbeddingVector& q_vec,
                                    std::size_t k);

// Top-(pool_size) teacher-ranked passages per query, gold excluded.
NegativePools mine_hard_negatives(const DenseIndex& index, const EncoderParams& params,
                                  const std::vector<std::pair<TokenizedText, DocId>>& pairs,
                                  const std::vector<QueryId>& query_ids, std::size_t pool_size,
                                  double positional_scale = 0.0);

void save_pools(const NegativePools& pools, const std::string& path);
NegativePools load_pools(const std::string& path);

}  // namespace nstr
