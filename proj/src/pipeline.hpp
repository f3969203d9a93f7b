#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "dense.hpp"
#include "eval.hpp"
#include "lexical.hpp"
#include "model.hpp"
#include "querygen.hpp"
#include "train.hpp"

namespace nstr {

// Serialized teacher distribution over a synthetic query's candidate set;
// candidates hold the positive first, probabilities sum to 1 within 1e-9.
struct SoftLabelRecord {
  QueryId query_id = 0;
  std::vector<DocId> candidates;
  CandidateDistribution probs;

  void validate() const;
};

// JSONL, one `{"qid":..,"candidates":[..],"probs":[..]}` per line with probs
// at 9 significant digits; loading renormalizes to restore the sum-to-1
// invariant after the 9-digit round trip.
void save_soft_labels(const std::vector<SoftLabelRecord>& records, const std::string& path);
std::vector<SoftLabelRecord> load_soft_labels(const std::string& path);

struct RunManifest {
  std::string run_dir;
  std::uint64_t seed = 0;
  int iterations = 1;
  std::map<std::string, std::string> checkpoints;         // stage -> file name
  std::map<std::string, std::string> checksums;           // stage -> fnv64 hex
  std::map<std::string, std::vector<MetricValue>> stage_metrics;
  std::map<std::string, std::string> config_snapshot;

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

// Everything a pipeline stage needs to look at: the corpus, tokenized views,
// gold pairs, and the shared hyperparameters.
struct PipelineContext {
  const PassageCollection* passages = nullptr;
  const Vocabulary* vocab = nullptr;
  TokenStore tokens;
  std::vector<TrainPair> gold_pairs;
  std::vector<SyntheticPair> synthetic;

  std::size_t max_query_len = 32;
  std::size_t max_passage_len = 128;
  double positional_scale = 0.0;
  std::size_t pool_size = 100;
  std::uint64_t seed = 0;
  std::int32_t dim = 64;
  double bm25_k1 = 0.9;
  double bm25_b = 0.4;

  void index_synthetic_tokens();
  std::vector<std::pair<TokenizedText, DocId>> pair_tokens(
      const std::vector<TrainPair>& pairs) const;
};

PipelineContext make_context(const PassageCollection& passages, const Vocabulary& vocab,
                             const QueryCollection& train_queries, const QRelSet& train_qrels,
                             const std::vector<SyntheticPair>& synthetic, const Config& config);

// Gold pair per train query: its lowest-id passage with relevance >= 1.
std::vector<TrainPair> gold_pairs_from_qrels(const QueryCollection& queries,
                                             const QRelSet& qrels);

// Top-(pool_size) BM25 candidates per query, gold excluded; queries with no
// lexical match get an empty pool (they train on in-batch negatives only)
// and are counted in n_empty.
NegativePools bm25_pools(const PipelineContext& ctx, const InvertedIndex& index,
                         const std::vector<TrainPair>& pairs, std::size_t* n_empty = nullptr);

NegativePools dense_pools(const PipelineContext& ctx, const DenseIndex& index,
                          const EncoderParams& params, const std::vector<TrainPair>& pairs);

// Two-stage teacher: stage 1 trains from scratch against BM25-mined pools;
// stage 2 re-mines pools with the stage-1 dense index and continues from the
// stage-1 checkpoint.
struct TeacherResult {
  EncoderParams stage1;
  EncoderParams stage2;
  std::vector<EpochLoss> stage1_log;
  std::vector<EpochLoss> stage2_log;
};
TeacherResult train_teacher_two_stage(const PipelineContext& ctx, const TrainingConfig& stage1,
                                      const TrainingConfig& stage2);

// Candidate set = originating passage + first n_negatives pool entries;
// probabilities are the teacher softmax over clean inputs.
std::vector<SoftLabelRecord> generate_soft_labels(const PipelineContext& ctx,
                                                  const EncoderParams& teacher,
                                                  const std::vector<SyntheticPair>& pairs,
                                                  const NegativePools& pools, int n_negatives,
                                                  double temperature);

// Keeps a pair iff the teacher retrieves its originating passage at rank 1.
std::vector<SyntheticPair> consistency_filter(const PipelineContext& ctx,
                                              const EncoderParams& teacher,
                                              const std::vector<SyntheticPair>& pairs,
                                              const DenseIndex& index);

EncoderParams pretrain_student(const PipelineContext& ctx, EncoderParams init,
                               const std::vector<SoftLabelRecord>& soft_labels,
                               const NoiseConfig& noise, const TrainingConfig& config,
                               const Rng& rng_root, std::vector<EpochLoss>* log = nullptr);

EncoderParams finetune(const PipelineContext& ctx, EncoderParams params,
                       const NegativePools& pools, const TrainingConfig& config,
                       const Rng& rng_root, std::vector<EpochLoss>* log = nullptr);

// Executes Algorithm: teacher prep, then per iteration index build, negative
// mining, soft labeling, noisy pre-training, finetuning; the student becomes
// the next iteration's teacher. Ablation flags reroute stages. All artifacts
// land in run_dir.
RunManifest run_self_training(const PassageCollection& passages, const Vocabulary& vocab,
                              const QueryCollection& train_queries, const QRelSet& train_qrels,
                              const QueryCollection& eval_queries, const QRelSet& eval_qrels,
                              const std::vector<SyntheticPair>& synthetic, const Config& config,
                              const std::string& run_dir);

// Reranker extension. Teacher mode trains contrastively on gold pairs with
// retriever-mined pools; student mode distills the provided reranker soft
// labels with noisy inputs and then finetunes on gold pairs.
struct RerankerTrainInputs {
  const NegativePools* gold_pools = nullptr;
  const std::vector<SoftLabelRecord>* soft_labels = nullptr;  // student mode when set
};
CrossEncoderParams train_reranker(const PipelineContext& ctx, CrossEncoderParams params,
                                  const RerankerTrainInputs& inputs,
                                  const TrainingConfig& teacher_or_finetune_config,
                                  const TrainingConfig* pretrain_config,
                                  const NoiseConfig& noise,
                                  std::vector<EpochLoss>* log = nullptr);

// Teacher-reranker softmax over the same candidate sets as the retriever
// soft labels.
std::vector<SoftLabelRecord> generate_cross_soft_labels(const PipelineContext& ctx,
                                                        const CrossEncoderParams& teacher,
                                                        const std::vector<SyntheticPair>& pairs,
                                                        const NegativePools& pools,
                                                        int n_negatives, double temperature);

// Reorders candidate ids by descending cross_score, ties by ascending id.
std::vector<ScoredDoc> rerank(const CrossEncoderParams& params, const TokenizedText& query,
                              const std::vector<DocId>& candidate_ids, const TokenStore& tokens);

// Reranks the top-k of an existing run.
RunResult rerank_run(const CrossEncoderParams& params, const RunResult& run,
                     const QueryCollection& queries, const PassageCollection& passages,
                     const Vocabulary& vocab, std::size_t max_query_len,
                     std::size_t max_passage_len, std::size_t top_k);

}  // namespace nstr
