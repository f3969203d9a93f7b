#pragma once

#include <map>
#include <string>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "dense.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace nstr {

// Per-query ranked retrieval output; scores non-increasing, ids distinct.
// An ordered map keeps every aggregation and serialization in ascending
// query-id order.
struct RunResult {
  std::map<QueryId, std::vector<ScoredDoc>> by_query;

  void validate() const;
  void save_trec(const std::string& path, const std::string& tag) const;
  static RunResult load_trec(const std::string& path);
};

struct MetricValue {
  std::string metric;
  std::size_t k = 0;
  double value = 0.0;
};

struct MetricReport {
  std::vector<MetricValue> aggregates;
  // (metric, k) -> qid -> value, for per-query breakdowns.
  std::map<std::pair<std::string, std::size_t>, std::map<QueryId, double>> per_query;

  void write_csv(const std::string& path) const;
  void write_per_query_csv(const std::string& path) const;
  double find(const std::string& metric, std::size_t k) const;
};

// Mean reciprocal rank of the first passage with relevance >= 1 in the
// top-k. A run query must at least be known to the qrels; a query whose
// rows are all zero-relevance contributes 0.
double mrr_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k);

// |relevant in top-k| / |relevant|; queries without relevant passages are
// excluded (with a warning counted by the caller via n_excluded).
double recall_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k,
                   std::size_t* n_excluded = nullptr);

// 1 if any top-k passage text contains any answer string (lowercase
// substring match); queries without answers are excluded.
double answer_recall_at_k(const RunResult& run, const QueryCollection& queries,
                          const PassageCollection& passages, std::size_t k,
                          std::size_t* n_excluded = nullptr);

// Exponential-gain DCG with log2(i+1) discount, normalized by the ideal
// ranking; queries with zero ideal gain are excluded.
double ndcg_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k,
                 std::size_t* n_excluded = nullptr);

MetricReport evaluate_run(const RunResult& run, const QRelSet& qrels,
                          const QueryCollection& queries, const PassageCollection& passages,
                          const std::vector<std::size_t>& ks);

// Encodes the queries and fetches exact top-k from the index.
RunResult retrieve(const EncoderParams& params, const DenseIndex& index,
                   const QueryCollection& queries, const Vocabulary& vocab,
                   std::size_t max_query_len, std::size_t k, double positional_scale = 0.0);

struct RobustnessRow {
  double proportion = 0.0;
  double mrr_at_10 = 0.0;
};

// Shuffles ceil(p * len) uniformly chosen token positions of each query,
// re-encodes, re-searches, and reports MRR@10 per proportion.
std::vector<RobustnessRow> robustness_sweep(const EncoderParams& params,
                                            const QueryCollection& queries,
                                            const DenseIndex& index, const QRelSet& qrels,
                                            const std::vector<double>& proportions,
                                            const Rng& rng_root, const Vocabulary& vocab,
                                            std::size_t max_query_len,
                                            double positional_scale = 0.0);

void write_robustness_csv(const std::vector<RobustnessRow>& rows, const std::string& path);

}  // namespace nstr
