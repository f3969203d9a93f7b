#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "rng.hpp"

namespace nstr {

// Per-query training unit: one positive and an ordered list of distinct
// negatives; the positive never appears among the negatives.
struct CandidateSet {
  QueryId query_id = 0;
  DocId positive_id = 0;
  std::vector<DocId> negative_ids;
};

// Probability vector aligned with [positive] + negatives.
using CandidateDistribution = std::vector<double>;

enum class OptimizerKind { sgd, adam };

struct TrainingConfig {
  double learning_rate = 0.1;
  int batch_size = 32;
  int n_hard_negatives = 7;
  int epochs = 1;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  bool use_in_batch_negatives = true;
  double clip_norm = 5.0;
  double positional_scale = 0.0;

  void validate() const;
};

// Sparse gradient of the tied embedding table: touched row -> d-vector.
struct DualGrads {
  std::int32_t dim = 0;
  std::unordered_map<TokenId, std::vector<double>> rows;

  void add_to_row(TokenId t, const std::vector<double>& vec, double scale);
  void accumulate(const DualGrads& other, double scale);
  double squared_norm() const;
  void scale_all(double factor);
  bool finite() const;
};

// Cross-encoder gradient: sparse embedding rows plus dense mlp blocks.
struct CrossGrads {
  std::int32_t dim = 0;
  std::int32_t hidden = 0;
  std::unordered_map<TokenId, std::vector<double>> rows;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;

  void init_shape(const CrossEncoderParams& params);
  void add_row_scaled(TokenId t, const std::vector<double>& vec, double scale);
  void accumulate(const CrossGrads& other, double scale);
  double squared_norm() const;
  void scale_all(double factor);
  bool finite() const;
};

struct TrainPair {
  QueryId query_id = 0;
  DocId positive_id = 0;
};

struct NegativePools {
  std::unordered_map<QueryId, std::vector<DocId>> by_query;

  const std::vector<DocId>* find(QueryId qid) const {
    auto it = by_query.find(qid);
    return it == by_query.end() ? nullptr : &it->second;
  }
};

// Distillation example: fixed candidate set plus the teacher's distribution
// over it (positive first). In-batch negatives never join the KL term; the
// teacher probabilities were computed offline over exactly these candidates.
struct KlExample {
  QueryId query_id = 0;
  std::vector<DocId> candidates;
  CandidateDistribution teacher_probs;
};

// Tokenized views of every query/passage a training stage touches.
struct TokenStore {
  std::unordered_map<QueryId, TokenizedText> queries;
  std::unordered_map<DocId, TokenizedText> passages;

  const TokenizedText& query(QueryId id) const;
  const TokenizedText& passage(DocId id) const;
};

CandidateDistribution softmax_scores(const std::vector<double>& scores, double temperature);

double kl_divergence(const CandidateDistribution& t, const CandidateDistribution& s);

// Negative log likelihood of the positive under the softmax of dot products.
// When noise is given, it perturbs the query and candidate token sequences
// before encoding (fresh draws from `noise_rng` per call).
double contrastive_loss_and_grad(const EncoderParams& params, const TokenizedText& query,
                                 const std::vector<const TokenizedText*>& candidates,
                                 double temperature, double positional_scale, DualGrads& grads,
                                 const NoiseConfig* noise = nullptr, Rng* noise_rng = nullptr);

// KL(T || S): teacher probabilities are constants, gradient flows only
// through the student softmax.
double kl_loss_and_grad(const EncoderParams& params, const CandidateDistribution& teacher,
                        const TokenizedText& query,
                        const std::vector<const TokenizedText*>& candidates, double temperature,
                        double positional_scale, DualGrads& grads,
                        const NoiseConfig* noise = nullptr, Rng* noise_rng = nullptr);

// Cross-encoder variants over cross_score logits.
double cross_contrastive_loss_and_grad(const CrossEncoderParams& params,
                                       const TokenizedText& query,
                                       const std::vector<const TokenizedText*>& candidates,
                                       double temperature, CrossGrads& grads,
                                       const NoiseConfig* noise = nullptr,
                                       Rng* noise_rng = nullptr);
double cross_kl_loss_and_grad(const CrossEncoderParams& params,
                              const CandidateDistribution& teacher, const TokenizedText& query,
                              const std::vector<const TokenizedText*>& candidates,
                              double temperature, CrossGrads& grads,
                              const NoiseConfig* noise = nullptr, Rng* noise_rng = nullptr);

// Sum of the mean contrastive loss over the labelled batch and the mean KL
// loss over the synthetic batch; gradients are additive.
double joint_loss_and_grad(const EncoderParams& params,
                           const std::vector<CandidateSet>& labelled_batch,
                           const std::vector<KlExample>& synthetic_batch,
                           const TokenStore& tokens, const TrainingConfig& config,
                           DualGrads& grads, const NoiseConfig* noise = nullptr,
                           Rng* noise_rng = nullptr);

// Builds per-query candidate sets: own positive + n_hard_negatives sampled
// without replacement from the query's pool + (optionally) the positives of
// the other in-batch queries. An empty pool yields a set with in-batch
// negatives only; a non-empty pool smaller than n_hard_negatives is an error.
std::vector<CandidateSet> assemble_batch(const std::vector<TrainPair>& pairs,
                                         const NegativePools& pools,
                                         const TrainingConfig& config, Rng& rng);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t n_params);

  // theta <- theta - lr * g (sgd) or the bias-corrected adam update with
  // beta1=0.9, beta2=0.999, eps=1e-8. Aborts on non-finite gradients.
  void step_rows(std::vector<float>& params, std::int32_t dim, const DualGrads& grads, double lr);
  void step_dense(std::vector<float>& params, std::size_t offset, const std::vector<double>& grad,
                  double lr);
  void step_scalar(float& param, std::size_t offset, double grad, double lr);
  void next_step() { ++t_; }

 private:
  double update(std::size_t slot, double grad);

  OptimizerKind kind_;
  std::int64_t t_ = 1;
  std::vector<double> m_;
  std::vector<double> v_;
};

void optimizer_step(EncoderParams& params, const DualGrads& grads, const TrainingConfig& config,
                    Optimizer& opt);
void optimizer_step(CrossEncoderParams& params, const CrossGrads& grads,
                    const TrainingConfig& config, Optimizer& opt);

void clip_gradients(DualGrads& grads, double max_norm);
void clip_gradients(CrossGrads& grads, double max_norm);

enum class LossKind { contrastive, kl, joint };

struct EpochLoss {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainData {
  std::vector<TrainPair> pairs;       // contrastive / joint labelled side
  const NegativePools* pools = nullptr;
  std::vector<KlExample> kl_examples;  // kl / joint synthetic side
};

// Shuffles example order per epoch (stream "shuffle-epoch-{i}"), assembles
// batches, applies the selected loss and optimizer. Returns the last-epoch
// parameters in place plus the per-epoch loss log.
std::vector<EpochLoss> train_epochs(EncoderParams& params, const TrainData& data,
                                    const TokenStore& tokens, const TrainingConfig& config,
                                    LossKind kind, const NoiseConfig* noise, const Rng& rng_root);

std::vector<EpochLoss> train_cross_epochs(CrossEncoderParams& params, const TrainData& data,
                                          const TokenStore& tokens, const TrainingConfig& config,
                                          LossKind kind, const NoiseConfig* noise,
                                          const Rng& rng_root);

void write_loss_log(const std::vector<EpochLoss>& log, const std::string& path);

}  // namespace nstr
