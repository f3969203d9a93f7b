#include <doctest.h>

#include <cmath>

#include "bench.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "test_util.hpp"
#include "train.hpp"

using namespace nstr;

namespace {

struct DualInstance {
  EncoderParams params;
  TokenizedText query;
  std::vector<TokenizedText> candidates;
  double temperature = 1.0;
  double positional_scale = 0.0;

  std::vector<const TokenizedText*> candidate_ptrs() const {
    std::vector<const TokenizedText*> out;
    for (const auto& c : candidates) out.push_back(&c);
    return out;
  }
};

TokenizedText random_tokens(Rng& rng, std::int64_t vocab_size, std::size_t max_len) {
  TokenizedText tokens;
  const auto len = 1 + rng.below(max_len);
  for (std::uint64_t i = 0; i < len; ++i) {
    tokens.push_back(static_cast<TokenId>(kReservedTokens +
                                          rng.below(std::uint64_t(vocab_size) - kReservedTokens)));
  }
  return tokens;
}

DualInstance random_dual_instance(std::uint64_t seed) {
  Rng rng(seed, "gradcheck-dual");
  DualInstance inst;
  const std::int64_t vocab_size = 16;
  const auto dim = static_cast<std::int32_t>(2 + rng.below(7));  // d <= 8
  inst.params = init_params(rng.next_u64(), vocab_size, dim);
  inst.query = random_tokens(rng, vocab_size, 5);
  const auto n_cands = 2 + rng.below(5);  // <= 6
  for (std::uint64_t c = 0; c < n_cands; ++c) {
    inst.candidates.push_back(random_tokens(rng, vocab_size, 5));
  }
  const double temperatures[] = {0.7, 1.0, 1.6};
  inst.temperature = temperatures[rng.below(3)];
  inst.positional_scale = rng.below(2) == 0 ? 0.0 : 0.8;
  return inst;
}

CandidateDistribution random_distribution(Rng& rng, std::size_t n) {
  CandidateDistribution probs(n);
  double sum = 0.0;
  for (auto& p : probs) {
    p = 0.05 + rng.next_double();
    sum += p;
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

// Checks every touched embedding row entry against central differences.
template <typename LossFn>
void check_rows_against_fd(EncoderParams& params, const DualGrads& grads, const LossFn& loss,
                           double tolerance = 1e-4) {
  for (const auto& [row, vec] : grads.rows) {
    for (std::size_t d = 0; d < vec.size(); ++d) {
      const std::size_t idx = std::size_t(row) * std::size_t(params.dim) + d;
      const double fd = oracle::fd_slope(params.embedding, idx, 1e-4, loss);
      CHECK(oracle::rel_error(vec[d], fd) <= tolerance);
    }
  }
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("softmax_scores matches hand values and normalizes") {
  CHECK(softmax_scores({2.5}, 1.0) == CandidateDistribution{1.0});

  auto probs = softmax_scores({1.0, 3.0}, 1.0);
  CHECK(std::abs(probs[0] - 0.1192) < 1e-4);
  CHECK(std::abs(probs[1] - 0.8808) < 1e-4);
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(softmax_scores({}, 1.0), Error);
  CHECK_THROWS_AS(softmax_scores({1.0}, 0.0), Error);
  CHECK_THROWS_AS(softmax_scores({std::nan("")}, 1.0), Error);
}

TEST_CASE("softmax preserves the argmax at every temperature") {
  const std::vector<double> scores{1.0, 3.0, -0.5};
  for (double tau : {0.05, 0.5, 1.0, 7.0}) {
    auto probs = softmax_scores(scores, tau);
    CHECK(std::max_element(probs.begin(), probs.end()) - probs.begin() == 1);
  }
}

TEST_CASE("softmax is invariant to a constant shift of the scores") {
  const std::vector<double> scores{0.2, -1.0, 2.2, 0.9};
  auto base = softmax_scores(scores, 1.0);
  std::vector<double> shifted = scores;
  for (auto& s : shifted) s += 13.5;
  auto moved = softmax_scores(shifted, 1.0);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(base[i] == doctest::Approx(moved[i]).epsilon(1e-12));
  }
}

TEST_CASE("contrastive loss on equal scores is ln(n)") {
  // zero params score every candidate identically
  EncoderParams params;
  params.vocab_size = 10;
  params.dim = 4;
  params.embedding.assign(40, 0.0f);
  TokenizedText query{3};
  std::vector<TokenizedText> cands{{4}, {5}};
  DualGrads grads;
  double loss = contrastive_loss_and_grad(params, query, {&cands[0], &cands[1]}, 1.0, 0.0, grads);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("contrastive loss reproduces the hand-evaluated two-candidate value") {
  // craft embeddings so s+ = 2, s- = 0
  EncoderParams params;
  params.vocab_size = 6;
  params.dim = 2;
  params.embedding.assign(12, 0.0f);
  params.row(3)[0] = 1.0f;  // query
  params.row(4)[0] = 2.0f;  // positive: dot = 2
  params.row(5)[1] = 1.0f;  // negative: dot = 0
  TokenizedText query{3};
  std::vector<TokenizedText> cands{{4}, {5}};
  DualGrads grads;
  double loss = contrastive_loss_and_grad(params, query, {&cands[0], &cands[1]}, 1.0, 0.0, grads);
  CHECK(loss == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(std::abs(loss - 0.1269) < 1e-4);
}

TEST_CASE("contrastive gradients match finite differences") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    DualInstance inst = random_dual_instance(i);
    auto ptrs = inst.candidate_ptrs();
    DualGrads grads;
    contrastive_loss_and_grad(inst.params, inst.query, ptrs, inst.temperature,
                              inst.positional_scale, grads);
    auto loss_fn = [&] {
      DualGrads unused;
      return contrastive_loss_and_grad(inst.params, inst.query, ptrs, inst.temperature,
                                       inst.positional_scale, unused);
    };
    check_rows_against_fd(inst.params, grads, loss_fn);
  }
}

TEST_CASE("kl loss is zero with zero gradient at T = S") {
  DualInstance inst = random_dual_instance(77);
  auto ptrs = inst.candidate_ptrs();
  EmbeddingVector q_vec = encode(inst.params, inst.query, inst.positional_scale);
  std::vector<double> scores;
  for (const auto* c : ptrs) {
    scores.push_back(score_pair(q_vec, encode(inst.params, *c, inst.positional_scale)));
  }
  CandidateDistribution teacher = softmax_scores(scores, inst.temperature);
  DualGrads grads;
  double loss = kl_loss_and_grad(inst.params, teacher, inst.query, ptrs, inst.temperature,
                                 inst.positional_scale, grads);
  CHECK(std::abs(loss) < 1e-12);
  for (const auto& [row, vec] : grads.rows) {
    for (double g : vec) CHECK(std::abs(g) < 1e-12);
  }
}

TEST_CASE("kl divergence worked value and nonnegativity") {
  CHECK(kl_divergence({0.5, 0.5}, {0.25, 0.75}) == doctest::Approx(0.14384104).epsilon(1e-6));
  CHECK(std::abs(kl_divergence({0.5, 0.5}, {0.25, 0.75}) - 0.1438) < 1e-4);
  Rng rng(5, "kl-pairs");
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.below(6);
    auto t = random_distribution(rng, n);
    auto s = random_distribution(rng, n);
    CHECK(kl_divergence(t, s) >= 0.0);
    CHECK(kl_divergence(t, t) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("kl gradients match finite differences") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    DualInstance inst = random_dual_instance(1000 + i);
    auto ptrs = inst.candidate_ptrs();
    Rng rng(i, "kl-teacher");
    CandidateDistribution teacher = random_distribution(rng, ptrs.size());
    DualGrads grads;
    kl_loss_and_grad(inst.params, teacher, inst.query, ptrs, inst.temperature,
                     inst.positional_scale, grads);
    auto loss_fn = [&] {
      DualGrads unused;
      return kl_loss_and_grad(inst.params, teacher, inst.query, ptrs, inst.temperature,
                              inst.positional_scale, unused);
    };
    check_rows_against_fd(inst.params, grads, loss_fn);
  }
}

TEST_CASE("kl loss rejects misaligned teacher distributions") {
  DualInstance inst = random_dual_instance(3);
  auto ptrs = inst.candidate_ptrs();
  CandidateDistribution wrong(ptrs.size() + 1, 1.0 / double(ptrs.size() + 1));
  DualGrads grads;
  CHECK_THROWS_AS(
      kl_loss_and_grad(inst.params, wrong, inst.query, ptrs, 1.0, 0.0, grads), Error);
}

TEST_CASE("cross-encoder gradients match finite differences") {
  for (std::uint64_t i = 0; i < 25; ++i) {
    Rng rng(i, "gradcheck-cross");
    const std::int64_t vocab_size = 12;
    const auto dim = static_cast<std::int32_t>(2 + rng.below(3));   // d <= 4
    const auto hidden = static_cast<std::int32_t>(1 + rng.below(2));  // h <= 2
    auto params = init_cross_params(rng.next_u64(), vocab_size, dim, hidden);
    TokenizedText query = random_tokens(rng, vocab_size, 4);
    std::vector<TokenizedText> cands;
    const auto n_cands = 2 + rng.below(4);
    for (std::uint64_t c = 0; c < n_cands; ++c) {
      cands.push_back(random_tokens(rng, vocab_size, 4));
    }
    std::vector<const TokenizedText*> ptrs;
    for (const auto& c : cands) ptrs.push_back(&c);

    const bool use_teacher = rng.below(2) == 0;
    CandidateDistribution teacher;
    if (use_teacher) teacher = random_distribution(rng, ptrs.size());

    CrossGrads grads;
    if (use_teacher) {
      cross_kl_loss_and_grad(params, teacher, query, ptrs, 1.0, grads);
    } else {
      cross_contrastive_loss_and_grad(params, query, ptrs, 1.0, grads);
    }
    auto loss_fn = [&] {
      CrossGrads unused;
      return use_teacher
                 ? cross_kl_loss_and_grad(params, teacher, query, ptrs, 1.0, unused)
                 : cross_contrastive_loss_and_grad(params, query, ptrs, 1.0, unused);
    };
    for (const auto& [row, vec] : grads.rows) {
      for (std::size_t d = 0; d < vec.size(); ++d) {
        const std::size_t idx = std::size_t(row) * std::size_t(dim) + d;
        const double fd = oracle::fd_slope(params.embedding, idx, 1e-4, loss_fn);
        CHECK(oracle::rel_error(vec[d], fd) <= 1e-4);
      }
    }
    for (std::size_t i2 = 0; i2 < grads.w1.size(); ++i2) {
      const double fd = oracle::fd_slope(params.w1, i2, 1e-4, loss_fn);
      CHECK(oracle::rel_error(grads.w1[i2], fd) <= 1e-4);
    }
    for (std::size_t i2 = 0; i2 < grads.b1.size(); ++i2) {
      const double fd = oracle::fd_slope(params.b1, i2, 1e-4, loss_fn);
      CHECK(oracle::rel_error(grads.b1[i2], fd) <= 1e-4);
    }
    for (std::size_t i2 = 0; i2 < grads.w2.size(); ++i2) {
      const double fd = oracle::fd_slope(params.w2, i2, 1e-4, loss_fn);
      CHECK(oracle::rel_error(grads.w2[i2], fd) <= 1e-4);
    }
  }
}

TEST_CASE("joint loss adds the component means and their gradients") {
  Rng rng(55, "joint");
  auto params = init_params(rng.next_u64(), 20, 6);
  TokenStore tokens;
  for (DocId p = 0; p < 8; ++p) tokens.passages[p] = random_tokens(rng, 20, 4);
  tokens.queries[100] = random_tokens(rng, 20, 3);
  tokens.queries[101] = random_tokens(rng, 20, 3);
  tokens.queries[200] = random_tokens(rng, 20, 3);

  std::vector<CandidateSet> labelled{
      CandidateSet{100, 0, {1, 2}},
      CandidateSet{101, 3, {4}},
  };
  std::vector<KlExample> synthetic{
      KlExample{200, {5, 6, 7}, {0.6, 0.3, 0.1}},
  };
  TrainingConfig config;
  config.temperature = 1.0;

  DualGrads joint_grads;
  double joint = joint_loss_and_grad(params, labelled, synthetic, tokens, config, joint_grads);

  double expected = 0.0;
  DualGrads expected_grads;
  for (const auto& set : labelled) {
    DualGrads g;
    std::vector<const TokenizedText*> ptrs{&tokens.passage(set.positive_id)};
    for (DocId n : set.negative_ids) ptrs.push_back(&tokens.passage(n));
    expected += 0.5 * contrastive_loss_and_grad(params, tokens.query(set.query_id), ptrs, 1.0,
                                                0.0, g);
    expected_grads.accumulate(g, 0.5);
  }
  {
    DualGrads g;
    std::vector<const TokenizedText*> ptrs;
    for (DocId c : synthetic[0].candidates) ptrs.push_back(&tokens.passage(c));
    expected += kl_loss_and_grad(params, synthetic[0].teacher_probs, tokens.query(200), ptrs,
                                 1.0, 0.0, g);
    expected_grads.accumulate(g, 1.0);
  }
  CHECK(joint == doctest::Approx(expected).epsilon(1e-12));
  REQUIRE(joint_grads.rows.size() == expected_grads.rows.size());
  for (const auto& [row, vec] : expected_grads.rows) {
    const auto& got = joint_grads.rows.at(row);
    for (std::size_t d = 0; d < vec.size(); ++d) {
      CHECK(got[d] == doctest::Approx(vec[d]).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(joint_loss_and_grad(params, {}, synthetic, tokens, config, joint_grads),
                  Error);
}

TEST_CASE("joint loss with T=S on the synthetic side reduces to the contrastive mean") {
  Rng rng(66, "joint-ts");
  auto params = init_params(rng.next_u64(), 20, 6);
  TokenStore tokens;
  for (DocId p = 0; p < 6; ++p) tokens.passages[p] = random_tokens(rng, 20, 4);
  tokens.queries[100] = random_tokens(rng, 20, 3);
  tokens.queries[200] = random_tokens(rng, 20, 3);

  std::vector<CandidateSet> labelled{CandidateSet{100, 0, {1, 2}}};
  // teacher distribution computed from the student itself -> KL term is 0
  EmbeddingVector q_vec = encode(params, tokens.query(200));
  std::vector<double> scores;
  for (DocId c : {3, 4, 5}) scores.push_back(score_pair(q_vec, encode(params, tokens.passage(c))));
  std::vector<KlExample> synthetic{KlExample{200, {3, 4, 5}, softmax_scores(scores, 1.0)}};

  TrainingConfig config;
  DualGrads g1, g2;
  double joint = joint_loss_and_grad(params, labelled, synthetic, tokens, config, g1);
  std::vector<const TokenizedText*> ptrs{&tokens.passage(0), &tokens.passage(1),
                                         &tokens.passage(2)};
  double contrastive_only =
      contrastive_loss_and_grad(params, tokens.query(100), ptrs, 1.0, 0.0, g2);
  CHECK(joint == doctest::Approx(contrastive_only).epsilon(1e-9));
}

TEST_CASE("assemble_batch builds positive + sampled + in-batch candidate sets") {
  NegativePools pools;
  pools.by_query[1] = {10, 11, 12};
  pools.by_query[2] = {20, 21, 22};
  std::vector<TrainPair> pairs{{1, 100}, {2, 200}};
  TrainingConfig config;
  config.n_hard_negatives = 1;
  config.use_in_batch_negatives = true;
  Rng rng(9, "assemble");
  auto batch = assemble_batch(pairs, pools, config, rng);
  REQUIRE(batch.size() == 2);
  for (const auto& set : batch) {
    CHECK(set.negative_ids.size() == 2);  // 1 hard + 1 in-batch
  }
  CHECK(std::find(batch[0].negative_ids.begin(), batch[0].negative_ids.end(), 200) !=
        batch[0].negative_ids.end());
  CHECK(std::find(batch[1].negative_ids.begin(), batch[1].negative_ids.end(), 100) !=
        batch[1].negative_ids.end());
}

TEST_CASE("assemble_batch without in-batch negatives yields exactly n+1 candidates") {
  NegativePools pools;
  std::vector<TrainPair> pairs;
  for (QueryId q = 0; q < 3; ++q) {
    pairs.push_back({q, 1000 + q});
    std::vector<DocId> pool;
    for (DocId p = 0; p < 9; ++p) pool.push_back(q * 100 + p);
    pools.by_query[q] = pool;
  }
  TrainingConfig config;
  config.n_hard_negatives = 7;
  config.use_in_batch_negatives = false;
  Rng rng(4, "assemble2");
  auto batch = assemble_batch(pairs, pools, config, rng);
  for (const auto& set : batch) CHECK(set.negative_ids.size() == 7);
}

TEST_CASE("assemble_batch is deterministic, excludes the positive, and errors on small pools") {
  NegativePools pools;
  pools.by_query[1] = {5, 6, 7, 8, 100};  // 100 is also the positive
  std::vector<TrainPair> pairs{{1, 100}};
  TrainingConfig config;
  config.n_hard_negatives = 3;
  Rng a(77, "det"), b(77, "det");
  auto batch_a = assemble_batch(pairs, pools, config, a);
  auto batch_b = assemble_batch(pairs, pools, config, b);
  CHECK(batch_a[0].negative_ids == batch_b[0].negative_ids);
  for (DocId id : batch_a[0].negative_ids) CHECK(id != 100);

  // positive never among negatives over many seeds
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s, "no-positive");
    auto batch = assemble_batch(pairs, pools, config, rng);
    for (DocId id : batch[0].negative_ids) CHECK(id != 100);
    std::set<DocId> pool_set{5, 6, 7, 8};
    for (DocId id : batch[0].negative_ids) CHECK(pool_set.count(id) == 1);
  }

  config.n_hard_negatives = 5;  // pool has only 4 after excluding the positive
  Rng c(1, "err");
  CHECK_THROWS_WITH_AS(assemble_batch(pairs, pools, config, c), doctest::Contains("query 1"),
                       Error);

  // an empty pool trains on in-batch negatives only
  pools.by_query[1] = {};
  config.n_hard_negatives = 5;
  config.use_in_batch_negatives = true;
  std::vector<TrainPair> two{{1, 100}, {2, 200}};
  pools.by_query[2] = {9, 10, 11, 12, 13};
  Rng d(2, "empty-pool");
  auto batch = assemble_batch(two, pools, config, d);
  CHECK(batch[0].negative_ids == std::vector<DocId>{200});
}

TEST_CASE("sgd and adam updates match their definitions") {
  TrainingConfig config;
  config.learning_rate = 0.1;
  config.optimizer = OptimizerKind::sgd;

  EncoderParams params;
  params.vocab_size = 4;
  params.dim = 1;
  params.embedding = {0.0f, 0.0f, 0.0f, 1.0f};
  DualGrads grads;
  grads.dim = 1;
  grads.rows[3] = {2.0};
  Optimizer sgd(OptimizerKind::sgd, 4);
  optimizer_step(params, grads, config, sgd);
  CHECK(params.embedding[3] == doctest::Approx(0.8f));

  DualGrads zero;
  zero.dim = 1;
  zero.rows[3] = {0.0};
  optimizer_step(params, zero, config, sgd);
  CHECK(params.embedding[3] == doctest::Approx(0.8f));

  // adam first step with g=1 everywhere moves every coordinate by ~lr
  EncoderParams params2;
  params2.vocab_size = 2;
  params2.dim = 2;
  params2.embedding = {0.5f, 0.5f, 0.5f, 0.5f};
  DualGrads ones;
  ones.dim = 2;
  ones.rows[0] = {1.0, 1.0};
  ones.rows[1] = {1.0, 1.0};
  TrainingConfig adam_config;
  adam_config.learning_rate = 0.01;
  adam_config.optimizer = OptimizerKind::adam;
  Optimizer adam(OptimizerKind::adam, 4);
  optimizer_step(params2, ones, adam_config, adam);
  for (float v : params2.embedding) {
    CHECK(v == doctest::Approx(0.5f - 0.01f).epsilon(1e-4));
  }

  DualGrads bad;
  bad.dim = 2;
  bad.rows[0] = {std::nan(""), 0.0};
  CHECK_THROWS_WITH_AS(optimizer_step(params2, bad, adam_config, adam),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  DualGrads grads;
  grads.dim = 2;
  grads.rows[1] = {30.0, 40.0};  // norm 50
  clip_gradients(grads, 5.0);
  CHECK(std::sqrt(grads.squared_norm()) == doctest::Approx(5.0));
  CHECK(grads.rows[1][0] == doctest::Approx(3.0));
  CHECK(grads.rows[1][1] == doctest::Approx(4.0));

  DualGrads small;
  small.dim = 1;
  small.rows[0] = {0.25};
  clip_gradients(small, 5.0);
  CHECK(small.rows[0][0] == doctest::Approx(0.25));
}

TEST_CASE("train_epochs: zero learning rate is a fixed point; same seed reproduces bytes") {
  Rng rng(8, "epochs");
  TokenStore tokens;
  NegativePools pools;
  std::vector<TrainPair> pairs;
  for (QueryId q = 0; q < 12; ++q) {
    tokens.queries[q] = random_tokens(rng, 30, 4);
    tokens.passages[q] = random_tokens(rng, 30, 6);
    tokens.passages[100 + q] = random_tokens(rng, 30, 6);
    pairs.push_back({q, q});
    pools.by_query[q] = {100 + q};
  }
  TrainData data;
  data.pairs = pairs;
  data.pools = &pools;

  TrainingConfig config;
  config.learning_rate = 0.0;
  config.batch_size = 4;
  config.n_hard_negatives = 1;
  config.epochs = 3;

  auto params = init_params(1, 30, 8);
  auto before = params.embedding;
  train_epochs(params, data, tokens, config, LossKind::contrastive, nullptr, Rng(1, "stage"));
  CHECK(params.embedding == before);

  config.learning_rate = 0.05;
  auto run1 = init_params(1, 30, 8);
  train_epochs(run1, data, tokens, config, LossKind::contrastive, nullptr, Rng(1, "stage"));
  auto run2 = init_params(1, 30, 8);
  train_epochs(run2, data, tokens, config, LossKind::contrastive, nullptr, Rng(1, "stage"));
  CHECK(run1.embedding == run2.embedding);
  CHECK(run1.embedding != before);

  config.epochs = 0;
  auto frozen = init_params(1, 30, 8);
  auto log = train_epochs(frozen, data, tokens, config, LossKind::contrastive, nullptr,
                          Rng(1, "stage"));
  CHECK(log.empty());
  CHECK(frozen.embedding == before);
}

TEST_CASE("contrastive training reduces the loss on a separable fixture") {
  testutil::TempDir dir("train-fixture");
  auto paths = generate_benchmark(3, 120, 50, 10, dir.str());
  auto passages = load_passages(paths.passages);
  auto [queries, qrels] = load_queries(paths.train_queries, paths.train_qrels);
  QueryCollection none;
  auto vocab = build_vocab(passages, queries, 1);

  TokenStore tokens;
  for (const auto& p : passages.passages) tokens.passages[p.id] = tokenize(p.text, vocab, 128);
  for (const auto& q : queries.queries) tokens.queries[q.id] = tokenize(q.text, vocab, 32);

  NegativePools pools;
  std::vector<TrainPair> pairs;
  Rng rng(4, "pool-pick");
  for (const auto& q : queries.queries) {
    DocId gold = qrels.judgments(q.id)[0].passage_id;
    pairs.push_back({q.id, gold});
    std::vector<DocId> pool;
    while (pool.size() < 8) {
      DocId p = static_cast<DocId>(rng.below(passages.size()));
      if (p != gold && std::find(pool.begin(), pool.end(), p) == pool.end()) pool.push_back(p);
    }
    pools.by_query[q.id] = pool;
  }
  TrainData data;
  data.pairs = pairs;
  data.pools = &pools;

  TrainingConfig config;
  config.learning_rate = 0.02;
  config.batch_size = 16;
  config.n_hard_negatives = 4;
  config.epochs = 10;

  auto params = init_params(11, static_cast<std::int64_t>(vocab.size()), 32);
  auto log = train_epochs(params, data, tokens, config, LossKind::contrastive, nullptr,
                          Rng(11, "separable"));
  REQUIRE(log.size() == 10);
  CHECK(log.back().mean_loss < log.front().mean_loss);
}

}  // TEST_SUITE
