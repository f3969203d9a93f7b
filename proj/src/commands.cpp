#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "bench.hpp"
#include "corpus.hpp"
#include "dense.hpp"
#include "eval.hpp"
#include "io_util.hpp"
#include "lexical.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "querygen.hpp"

namespace nstr {

const std::vector<std::string> kSubcommands = {
    "ingest",       "build-vocab",  "bm25-index", "bm25-search", "train-teacher",
    "gen-queries",  "encode-corpus", "mine-negatives", "soft-label", "pretrain",
    "finetune",     "self-train",   "rerank-train", "rerank",     "eval",
    "robustness",   "bench",
};

bool is_subcommand(const std::string& name) {
  return std::find(kSubcommands.begin(), kSubcommands.end(), name) != kSubcommands.end();
}

namespace {

namespace fs = std::filesystem;

struct CommandEnv {
  const Config& config;
  std::string run_dir;
  bool overwrite;

  std::string out_path(const std::string& name) const { return run_dir + "/" + name; }

  // Refuses to clobber existing outputs unless --overwrite.
  void claim_outputs(const std::vector<std::string>& names) const {
    if (overwrite) return;
    for (const auto& name : names) {
      const std::string path = out_path(name);
      check(!fs::exists(path), Errc::exists,
            "output exists (use --overwrite): " + path);
    }
  }

  std::string require_path(const std::string& key) const {
    std::string value = config.get_string(key);
    check(!value.empty(), Errc::invalid, "config key required: " + key);
    return value;
  }

  // Path-valued key with a run-directory fallback file name.
  std::string path_or_default(const std::string& key, const std::string& fallback) const {
    std::string value = config.get_string(key);
    return value.empty() ? out_path(fallback) : value;
  }

  std::size_t max_query_len() const {
    return static_cast<std::size_t>(config.get_int("corpus.max_query_len"));
  }
  std::size_t max_passage_len() const {
    return static_cast<std::size_t>(config.get_int("corpus.max_passage_len"));
  }
  double positional_scale() const { return config.get_double("model.positional_scale"); }

  PassageCollection load_corpus() const { return load_passages(require_path("corpus.passages")); }

  Vocabulary load_vocab() const {
    return Vocabulary::load(path_or_default("corpus.vocab", "vocab.tsv"));
  }

  EncoderParams load_encoder() const {
    return load_checkpoint(require_path("model.checkpoint"));
  }

  void note(const std::string& path) const { std::cout << "wrote " << path << std::endl; }
};

void cmd_ingest(const CommandEnv& env) {
  env.claim_outputs({"passages.tsv", "corpus_stats.json"});
  auto passages = env.load_corpus();
  save_passages(passages, env.out_path("passages.tsv"));
  env.note(env.out_path("passages.tsv"));

  nlohmann::ordered_json stats;
  stats["passages"] = passages.size();

  auto copy_queries = [&](const std::string& q_key, const std::string& r_key,
                          const std::string& q_out, const std::string& r_out,
                          const std::string& label) {
    const std::string q_path = env.config.get_string(q_key);
    if (q_path.empty()) return;
    const std::string r_path = env.config.get_string(r_key);
    auto [queries, qrels] =
        load_queries(q_path, r_path.empty() ? std::nullopt : std::make_optional(r_path));
    for (const auto& r : qrels.rows) {
      check(passages.contains(r.passage_id), Errc::parse,
            "qrels reference unknown passage " + std::to_string(r.passage_id));
    }
    save_queries(queries, env.out_path(q_out));
    env.note(env.out_path(q_out));
    if (!r_path.empty()) {
      save_qrels(qrels, env.out_path(r_out));
      env.note(env.out_path(r_out));
    }
    stats[label] = queries.size();
    stats[label + "_qrels"] = qrels.rows.size();
  };
  copy_queries("corpus.queries", "corpus.qrels", "queries.tsv", "qrels.tsv", "train_queries");
  copy_queries("corpus.eval_queries", "corpus.eval_qrels", "eval_queries.tsv", "eval_qrels.tsv",
               "eval_queries");

  const std::string synthetic_path = env.config.get_string("corpus.synthetic");
  if (!synthetic_path.empty()) {
    auto synthetic = load_synthetic(synthetic_path, passages);
    save_synthetic(synthetic, env.out_path("synthetic.tsv"));
    env.note(env.out_path("synthetic.tsv"));
    stats["synthetic_pairs"] = synthetic.size();
  }
  write_file(env.out_path("corpus_stats.json"), stats.dump(2) + "\n");
  env.note(env.out_path("corpus_stats.json"));
}

void cmd_build_vocab(const CommandEnv& env) {
  env.claim_outputs({"vocab.tsv"});
  auto passages = env.load_corpus();
  QueryCollection queries;
  const std::string q_path = env.config.get_string("corpus.queries");
  if (!q_path.empty()) queries = load_queries(q_path, std::nullopt).first;
  auto vocab = build_vocab(passages, queries,
                           static_cast<int>(env.config.get_int("corpus.min_frequency")));
  vocab.save(env.out_path("vocab.tsv"));
  env.note(env.out_path("vocab.tsv"));
}

void cmd_bm25_index(const CommandEnv& env) {
  env.claim_outputs({"bm25.idx"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto index = build_inverted_index(passages, vocab, env.max_passage_len());
  index.save(env.out_path("bm25.idx"));
  env.note(env.out_path("bm25.idx"));
}

void cmd_bm25_search(const CommandEnv& env) {
  env.claim_outputs({"bm25_run.trec"});
  auto index = InvertedIndex::load(env.path_or_default("lexical.index", "bm25.idx"));
  auto vocab = env.load_vocab();
  const std::string q_path = !env.config.get_string("corpus.eval_queries").empty()
                                 ? env.config.get_string("corpus.eval_queries")
                                 : env.require_path("corpus.queries");
  auto queries = load_queries(q_path, std::nullopt).first;
  const auto k = static_cast<std::size_t>(env.config.get_int("lexical.k"));
  const double k1 = env.config.get_double("lexical.k1");
  const double b = env.config.get_double("lexical.b");
  RunResult run;
  for (const auto& q : queries.queries) {
    run.by_query[q.id] =
        bm25_search(index, tokenize(q.text, vocab, env.max_query_len()), k, k1, b);
  }
  run.save_trec(env.out_path("bm25_run.trec"), "nstr-bm25");
  env.note(env.out_path("bm25_run.trec"));
}

PipelineContext command_context(const CommandEnv& env, const PassageCollection& passages,
                                const Vocabulary& vocab, const QueryCollection& queries,
                                const QRelSet& qrels,
                                const std::vector<SyntheticPair>& synthetic) {
  return make_context(passages, vocab, queries, qrels, synthetic, env.config);
}

void cmd_train_teacher(const CommandEnv& env) {
  env.claim_outputs({"teacher_s1.ckpt", "teacher_s2.ckpt"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto [queries, qrels] =
      load_queries(env.require_path("corpus.queries"), env.require_path("corpus.qrels"));
  auto ctx = command_context(env, passages, vocab, queries, qrels, {});
  auto teacher = train_teacher_two_stage(ctx, env.config.stage_training("teacher1"),
                                         env.config.stage_training("teacher2"));
  save_checkpoint(teacher.stage1, env.out_path("teacher_s1.ckpt"));
  write_loss_log(teacher.stage1_log, env.out_path("teacher_s1_loss.csv"));
  save_checkpoint(teacher.stage2, env.out_path("teacher_s2.ckpt"));
  write_loss_log(teacher.stage2_log, env.out_path("teacher_s2_loss.csv"));
  env.note(env.out_path("teacher_s1.ckpt"));
  env.note(env.out_path("teacher_s2.ckpt"));
}

void cmd_gen_queries(const CommandEnv& env) {
  env.claim_outputs({"synthetic.tsv"});
  auto passages = env.load_corpus();
  std::vector<SyntheticPair> pairs;
  const std::string source = env.config.get_string("querygen.source");
  if (source == "span") {
    auto sampler =
        make_span_sampler(static_cast<std::size_t>(env.config.get_int("querygen.span_min")),
                          static_cast<std::size_t>(env.config.get_int("querygen.span_max")));
    pairs = generate_synthetic(passages, sampler,
                               static_cast<int>(env.config.get_int("querygen.queries_per_passage")),
                               env.config.seed());
  } else if (source == "file") {
    pairs = load_external_queries(env.require_path("querygen.file"), passages);
  } else {
    fail(Errc::invalid, "querygen.source must be 'span' or 'file'");
  }
  save_synthetic(pairs, env.out_path("synthetic.tsv"));
  env.note(env.out_path("synthetic.tsv"));
}

void cmd_encode_corpus(const CommandEnv& env) {
  env.claim_outputs({"embeddings.nste"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  auto index = build_dense_index(params, passages, vocab, env.max_passage_len(),
                                 env.positional_scale());
  index.save(env.out_path("embeddings.nste"));
  env.note(env.out_path("embeddings.nste"));
}

std::vector<TrainPair> synthetic_as_pairs(const std::vector<SyntheticPair>& synthetic) {
  std::vector<TrainPair> pairs;
  pairs.reserve(synthetic.size());
  for (const auto& p : synthetic) {
    pairs.push_back(TrainPair{p.query.id, p.originating_passage_id});
  }
  return pairs;
}

void cmd_mine_negatives(const CommandEnv& env) {
  env.claim_outputs({"pools.tsv"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  const std::string target = env.config.get_string("pipeline.mine_target");

  QueryCollection queries;
  QRelSet qrels;
  std::vector<SyntheticPair> synthetic;
  std::vector<TrainPair> pairs;
  if (target == "gold") {
    std::tie(queries, qrels) =
        load_queries(env.require_path("corpus.queries"), env.require_path("corpus.qrels"));
    auto ctx = command_context(env, passages, vocab, queries, qrels, {});
    auto index = build_dense_index(params, passages, vocab, env.max_passage_len(),
                                   env.positional_scale());
    auto pools = dense_pools(ctx, index, params, ctx.gold_pairs);
    save_pools(pools, env.out_path("pools.tsv"));
  } else if (target == "synthetic") {
    synthetic = load_synthetic(env.require_path("corpus.synthetic"), passages);
    auto ctx = command_context(env, passages, vocab, queries, qrels, synthetic);
    pairs = synthetic_as_pairs(synthetic);
    auto index = build_dense_index(params, passages, vocab, env.max_passage_len(),
                                   env.positional_scale());
    auto pools = dense_pools(ctx, index, params, pairs);
    save_pools(pools, env.out_path("pools.tsv"));
  } else {
    fail(Errc::invalid, "pipeline.mine_target must be 'gold' or 'synthetic'");
  }
  env.note(env.out_path("pools.tsv"));
}

void cmd_soft_label(const CommandEnv& env) {
  env.claim_outputs({"soft_labels.jsonl"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  auto synthetic = load_synthetic(env.require_path("corpus.synthetic"), passages);
  auto pools = load_pools(env.path_or_default("pipeline.pools", "pools.tsv"));
  auto ctx = command_context(env, passages, vocab, {}, {}, synthetic);
  auto labels = generate_soft_labels(ctx, params, synthetic, pools,
                                     env.config.stage_training("pretrain").n_hard_negatives,
                                     env.config.get_double("pipeline.soft_label_temperature"));
  save_soft_labels(labels, env.out_path("soft_labels.jsonl"));
  env.note(env.out_path("soft_labels.jsonl"));
}

void cmd_pretrain(const CommandEnv& env) {
  env.claim_outputs({"pretrain.ckpt"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  auto synthetic = load_synthetic(env.require_path("corpus.synthetic"), passages);
  auto labels = load_soft_labels(env.path_or_default("pipeline.soft_labels", "soft_labels.jsonl"));
  auto ctx = command_context(env, passages, vocab, {}, {}, synthetic);
  NoiseConfig noise = env.config.noise();
  if (env.config.get_bool("pipeline.no_noise")) noise = noise.silenced();
  std::vector<EpochLoss> log;
  params = pretrain_student(ctx, std::move(params), labels, noise,
                            env.config.stage_training("pretrain"),
                            Rng(env.config.seed(), "pretrain"), &log);
  save_checkpoint(params, env.out_path("pretrain.ckpt"));
  write_loss_log(log, env.out_path("pretrain_loss.csv"));
  env.note(env.out_path("pretrain.ckpt"));
}

void cmd_finetune(const CommandEnv& env) {
  env.claim_outputs({"finetune.ckpt"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  auto [queries, qrels] =
      load_queries(env.require_path("corpus.queries"), env.require_path("corpus.qrels"));
  auto ctx = command_context(env, passages, vocab, queries, qrels, {});
  auto pools = load_pools(env.path_or_default("pipeline.pools", "pools.tsv"));
  std::vector<EpochLoss> log;
  params = finetune(ctx, std::move(params), pools, env.config.stage_training("finetune"),
                    Rng(env.config.seed(), "finetune"), &log);
  save_checkpoint(params, env.out_path("finetune.ckpt"));
  write_loss_log(log, env.out_path("finetune_loss.csv"));
  env.note(env.out_path("finetune.ckpt"));
}

struct SelfTrainInputs {
  PassageCollection passages;
  Vocabulary vocab;
  QueryCollection train_queries;
  QRelSet train_qrels;
  QueryCollection eval_queries;
  QRelSet eval_qrels;
  std::vector<SyntheticPair> synthetic;
};

SelfTrainInputs load_self_train_inputs(const CommandEnv& env) {
  SelfTrainInputs in;
  in.passages = env.load_corpus();
  std::tie(in.train_queries, in.train_qrels) =
      load_queries(env.require_path("corpus.queries"), env.require_path("corpus.qrels"));
  const std::string eq = env.config.get_string("corpus.eval_queries");
  if (!eq.empty()) {
    std::tie(in.eval_queries, in.eval_qrels) =
        load_queries(eq, env.require_path("corpus.eval_qrels"));
  }
  const std::string vocab_path = env.config.get_string("corpus.vocab");
  if (vocab_path.empty()) {
    in.vocab = build_vocab(in.passages, in.train_queries,
                           static_cast<int>(env.config.get_int("corpus.min_frequency")));
  } else {
    in.vocab = Vocabulary::load(vocab_path);
  }
  const std::string synthetic_path = env.config.get_string("corpus.synthetic");
  if (!synthetic_path.empty()) {
    in.synthetic = load_synthetic(synthetic_path, in.passages);
  } else {
    auto sampler =
        make_span_sampler(static_cast<std::size_t>(env.config.get_int("querygen.span_min")),
                          static_cast<std::size_t>(env.config.get_int("querygen.span_max")));
    in.synthetic = generate_synthetic(
        in.passages, sampler,
        static_cast<int>(env.config.get_int("querygen.queries_per_passage")),
        env.config.seed());
  }
  return in;
}

void cmd_self_train(const CommandEnv& env) {
  env.claim_outputs({"run_manifest.json"});
  auto in = load_self_train_inputs(env);
  run_self_training(in.passages, in.vocab, in.train_queries, in.train_qrels, in.eval_queries,
                    in.eval_qrels, in.synthetic, env.config, env.run_dir);
  env.note(env.out_path("run_manifest.json"));
}

void cmd_rerank_train(const CommandEnv& env) {
  const std::string mode = env.config.get_string("reranker.mode");
  check(mode == "teacher" || mode == "student", Errc::invalid,
        "reranker.mode must be 'teacher' or 'student'");
  const std::string out_name =
      mode == "teacher" ? "reranker_teacher.ckpt" : "reranker_student.ckpt";
  env.claim_outputs({out_name});

  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto retriever = env.load_encoder();
  auto [queries, qrels] =
      load_queries(env.require_path("corpus.queries"), env.require_path("corpus.qrels"));

  std::vector<SyntheticPair> synthetic;
  if (mode == "student") {
    synthetic = load_synthetic(env.require_path("corpus.synthetic"), passages);
  }
  auto ctx = command_context(env, passages, vocab, queries, qrels, synthetic);
  auto index = build_dense_index(retriever, passages, vocab, env.max_passage_len(),
                                 env.positional_scale());
  NegativePools gold_pools = dense_pools(ctx, index, retriever, ctx.gold_pairs);

  NoiseConfig noise = env.config.noise();
  if (env.config.get_bool("pipeline.no_noise")) noise = noise.silenced();

  std::vector<EpochLoss> log;
  if (mode == "teacher") {
    auto params = init_cross_params(ctx.seed, static_cast<std::int64_t>(vocab.size()), ctx.dim,
                                    static_cast<std::int32_t>(env.config.get_int("model.hidden")));
    RerankerTrainInputs inputs;
    inputs.gold_pools = &gold_pools;
    params = train_reranker(ctx, std::move(params), inputs,
                            env.config.stage_training("rerank_teacher"), nullptr, noise, &log);
    save_cross_checkpoint(params, env.out_path(out_name));
  } else {
    auto params = load_cross_checkpoint(env.require_path("reranker.checkpoint"));
    auto synthetic_pairs = synthetic_as_pairs(synthetic);
    NegativePools synthetic_pools = dense_pools(ctx, index, retriever, synthetic_pairs);
    const std::string labels_path = env.config.get_string("reranker.soft_labels");
    std::vector<SoftLabelRecord> labels;
    if (labels_path.empty()) {
      labels = generate_cross_soft_labels(
          ctx, params, synthetic, synthetic_pools,
          env.config.stage_training("rerank_pretrain").n_hard_negatives,
          env.config.get_double("pipeline.soft_label_temperature"));
      save_soft_labels(labels, env.out_path("reranker_soft_labels.jsonl"));
      env.note(env.out_path("reranker_soft_labels.jsonl"));
    } else {
      labels = load_soft_labels(labels_path);
    }
    RerankerTrainInputs inputs;
    inputs.gold_pools = &gold_pools;
    inputs.soft_labels = &labels;
    const TrainingConfig pretrain_cfg = env.config.stage_training("rerank_pretrain");
    params = train_reranker(ctx, std::move(params), inputs,
                            env.config.stage_training("rerank_finetune"), &pretrain_cfg, noise,
                            &log);
    save_cross_checkpoint(params, env.out_path(out_name));
  }
  write_loss_log(log, env.out_path(mode == "teacher" ? "reranker_teacher_loss.csv"
                                                     : "reranker_student_loss.csv"));
  env.note(env.out_path(out_name));
}

void cmd_rerank(const CommandEnv& env) {
  env.claim_outputs({"reranked_run.trec"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = load_cross_checkpoint(env.require_path("reranker.checkpoint"));
  auto run = RunResult::load_trec(env.require_path("reranker.run"));
  const std::string q_path = !env.config.get_string("corpus.eval_queries").empty()
                                 ? env.config.get_string("corpus.eval_queries")
                                 : env.require_path("corpus.queries");
  auto queries = load_queries(q_path, std::nullopt).first;
  auto reranked = rerank_run(params, run, queries, passages, vocab, env.max_query_len(),
                             env.max_passage_len(),
                             static_cast<std::size_t>(env.config.get_int("reranker.top_k")));
  reranked.save_trec(env.out_path("reranked_run.trec"), "nstr-rerank");
  env.note(env.out_path("reranked_run.trec"));
}

void cmd_eval(const CommandEnv& env) {
  env.claim_outputs({"metrics.csv", "metrics_per_query.csv"});
  auto run = RunResult::load_trec(env.require_path("eval.run"));
  auto passages = env.load_corpus();
  const std::string q_path = !env.config.get_string("corpus.eval_queries").empty()
                                 ? env.config.get_string("corpus.eval_queries")
                                 : env.require_path("corpus.queries");
  const std::string r_path = !env.config.get_string("corpus.eval_qrels").empty()
                                 ? env.config.get_string("corpus.eval_qrels")
                                 : env.require_path("corpus.qrels");
  auto [queries, qrels] = load_queries(q_path, r_path);
  auto report = evaluate_run(run, qrels, queries, passages, env.config.get_size_list("eval.ks"));
  report.write_csv(env.out_path("metrics.csv"));
  report.write_per_query_csv(env.out_path("metrics_per_query.csv"));
  env.note(env.out_path("metrics.csv"));
  env.note(env.out_path("metrics_per_query.csv"));
}

void cmd_robustness(const CommandEnv& env) {
  env.claim_outputs({"robustness.csv"});
  auto passages = env.load_corpus();
  auto vocab = env.load_vocab();
  auto params = env.load_encoder();
  auto [queries, qrels] = load_queries(env.require_path("corpus.eval_queries"),
                                       env.require_path("corpus.eval_qrels"));
  auto index = build_dense_index(params, passages, vocab, env.max_passage_len(),
                                 env.positional_scale());
  auto rows = robustness_sweep(params, queries, index, qrels,
                               env.config.get_double_list("robustness.proportions"),
                               Rng(env.config.seed(), "robustness"), vocab, env.max_query_len(),
                               env.positional_scale());
  write_robustness_csv(rows, env.out_path("robustness.csv"));
  env.note(env.out_path("robustness.csv"));
}

void cmd_bench(const CommandEnv& env) {
  env.claim_outputs({"run_manifest.json", "bench"});
  auto paths = generate_benchmark(env.config.seed(), env.config.get_int("bench.n_passages"),
                                  env.config.get_int("bench.n_train"),
                                  env.config.get_int("bench.n_eval"), env.out_path("bench"));
  env.note(paths.passages);

  Config config = env.config;  // overlay generated corpus paths
  config.set("corpus.passages", paths.passages);
  config.set("corpus.queries", paths.train_queries);
  config.set("corpus.qrels", paths.train_qrels);
  config.set("corpus.eval_queries", paths.eval_queries);
  config.set("corpus.eval_qrels", paths.eval_qrels);

  CommandEnv bench_env{config, env.run_dir, env.overwrite};
  cmd_self_train(bench_env);
}

}  // namespace

void run_subcommand(const std::string& name, const Config& config, const std::string& run_dir,
                    bool overwrite) {
  check(is_subcommand(name), Errc::invalid, "unknown subcommand: " + name);
  check(!run_dir.empty(), Errc::invalid, "--run-dir is required");
  fs::create_directories(run_dir);
  CommandEnv env{config, run_dir, overwrite};

  if (name == "ingest") return cmd_ingest(env);
  if (name == "build-vocab") return cmd_build_vocab(env);
  if (name == "bm25-index") return cmd_bm25_index(env);
  if (name == "bm25-search") return cmd_bm25_search(env);
  if (name == "train-teacher") return cmd_train_teacher(env);
  if (name == "gen-queries") return cmd_gen_queries(env);
  if (name == "encode-corpus") return cmd_encode_corpus(env);
  if (name == "mine-negatives") return cmd_mine_negatives(env);
  if (name == "soft-label") return cmd_soft_label(env);
  if (name == "pretrain") return cmd_pretrain(env);
  if (name == "finetune") return cmd_finetune(env);
  if (name == "self-train") return cmd_self_train(env);
  if (name == "rerank-train") return cmd_rerank_train(env);
  if (name == "rerank") return cmd_rerank(env);
  if (name == "eval") return cmd_eval(env);
  if (name == "robustness") return cmd_robustness(env);
  if (name == "bench") return cmd_bench(env);
  fail(Errc::invalid, "unknown subcommand: " + name);
}

}  // namespace nstr
