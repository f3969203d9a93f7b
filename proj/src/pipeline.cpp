#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <set>

#include <json.hpp>

#include "io_util.hpp"
#include "threading.hpp"

namespace nstr {

namespace {

std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void warn_empty_pools(const char* stage, std::size_t n_empty) {
  if (n_empty > 0) {
    std::cerr << "nstr: warning: " << stage << ": " << n_empty
              << " queries have an empty negative pool; they train with in-batch negatives only"
              << std::endl;
  }
}

}  // namespace

void SoftLabelRecord::validate() const {
  check(candidates.size() == probs.size(), Errc::state,
        "soft label record " + std::to_string(query_id) + ": misaligned lengths");
  check(!candidates.empty(), Errc::state,
        "soft label record " + std::to_string(query_id) + ": empty candidate set");
  std::set<DocId> distinct(candidates.begin(), candidates.end());
  check(distinct.size() == candidates.size(), Errc::state,
        "soft label record " + std::to_string(query_id) + ": duplicate candidates");
  double sum = 0.0;
  for (double p : probs) {
    check(p >= 0.0, Errc::state,
          "soft label record " + std::to_string(query_id) + ": negative probability");
    sum += p;
  }
  check(std::abs(sum - 1.0) <= 1e-9, Errc::state,
        "soft label record " + std::to_string(query_id) + ": probabilities sum to " +
            std::to_string(sum));
}

void save_soft_labels(const std::vector<SoftLabelRecord>& records, const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : records) {
    r.validate();
    out << "{\"qid\":" << r.query_id << ",\"candidates\":[";
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      if (i > 0) out << ',';
      out << r.candidates[i];
    }
    out << "],\"probs\":[";
    for (std::size_t i = 0; i < r.probs.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(r.probs[i], 9);
    }
    out << "]}\n";
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

std::vector<SoftLabelRecord> load_soft_labels(const std::string& path) {
  std::vector<SoftLabelRecord> records;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse, "soft labels: bad JSON at line " + std::to_string(line_no) + ": " +
                            e.what());
    }
    SoftLabelRecord r;
    r.query_id = j.at("qid").get<QueryId>();
    r.candidates = j.at("candidates").get<std::vector<DocId>>();
    r.probs = j.at("probs").get<std::vector<double>>();
    check(r.candidates.size() == r.probs.size(), Errc::parse,
          "soft labels: misaligned lengths at line " + std::to_string(line_no));
    double sum = 0.0;
    for (double p : r.probs) sum += p;
    check(std::abs(sum - 1.0) <= 1e-6, Errc::parse,
          "soft labels: probabilities sum to " + std::to_string(sum) + " at line " +
              std::to_string(line_no));
    for (auto& p : r.probs) p /= sum;
    r.validate();
    records.push_back(std::move(r));
  });
  return records;
}

void RunManifest::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["run_dir"] = run_dir;
  j["seed"] = seed;
  j["iterations"] = iterations;
  j["checkpoints"] = nlohmann::ordered_json::object();
  for (const auto& [stage, file] : checkpoints) j["checkpoints"][stage] = file;
  j["checksums"] = nlohmann::ordered_json::object();
  for (const auto& [stage, sum] : checksums) j["checksums"][stage] = sum;
  j["stage_metrics"] = nlohmann::ordered_json::object();
  for (const auto& [stage, metrics] : stage_metrics) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& m : metrics) {
      rows.push_back({{"metric", m.metric}, {"k", m.k}, {"value", m.value}});
    }
    j["stage_metrics"][stage] = rows;
  }
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_snapshot) j["config"][key] = value;
  write_file(path, j.dump(2) + "\n");
}

RunManifest RunManifest::load(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  RunManifest m;
  m.run_dir = j.at("run_dir").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.iterations = j.at("iterations").get<int>();
  for (const auto& [stage, file] : j.at("checkpoints").items()) {
    m.checkpoints[stage] = file.get<std::string>();
  }
  for (const auto& [stage, sum] : j.at("checksums").items()) {
    m.checksums[stage] = sum.get<std::string>();
  }
  for (const auto& [stage, rows] : j.at("stage_metrics").items()) {
    for (const auto& row : rows) {
      m.stage_metrics[stage].push_back(MetricValue{row.at("metric").get<std::string>(),
                                                   row.at("k").get<std::size_t>(),
                                                   row.at("value").get<double>()});
    }
  }
  for (const auto& [key, value] : j.at("config").items()) {
    m.config_snapshot[key] = value.get<std::string>();
  }
  return m;
}

void PipelineContext::index_synthetic_tokens() {
  for (const auto& pair : synthetic) {
    tokens.queries[pair.query.id] = tokenize(pair.query.text, *vocab, max_query_len);
  }
}

std::vector<std::pair<TokenizedText, DocId>> PipelineContext::pair_tokens(
    const std::vector<TrainPair>& pairs) const {
  std::vector<std::pair<TokenizedText, DocId>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(tokens.query(p.query_id), p.positive_id);
  return out;
}

std::vector<TrainPair> gold_pairs_from_qrels(const QueryCollection& queries,
                                             const QRelSet& qrels) {
  std::vector<TrainPair> pairs;
  std::size_t skipped = 0;
  for (const auto& q : queries.queries) {
    DocId best = -1;
    for (const QRel& r : qrels.judgments(q.id)) {
      if (r.relevance >= 1 && (best < 0 || r.passage_id < best)) best = r.passage_id;
    }
    if (best < 0) {
      ++skipped;
      continue;
    }
    pairs.push_back(TrainPair{q.id, best});
  }
  if (skipped > 0) {
    std::cerr << "nstr: warning: " << skipped
              << " train queries have no relevant passage and were skipped" << std::endl;
  }
  check(queries.size() == 0 || !pairs.empty(), Errc::invalid, "no gold query-passage pairs");
  return pairs;
}

PipelineContext make_context(const PassageCollection& passages, const Vocabulary& vocab,
                             const QueryCollection& train_queries, const QRelSet& train_qrels,
                             const std::vector<SyntheticPair>& synthetic, const Config& config) {
  PipelineContext ctx;
  ctx.passages = &passages;
  ctx.vocab = &vocab;
  ctx.max_query_len = static_cast<std::size_t>(config.get_int("corpus.max_query_len"));
  ctx.max_passage_len = static_cast<std::size_t>(config.get_int("corpus.max_passage_len"));
  ctx.positional_scale = config.get_double("model.positional_scale");
  ctx.pool_size = static_cast<std::size_t>(config.get_int("pipeline.pool_size"));
  ctx.seed = config.seed();
  ctx.dim = static_cast<std::int32_t>(config.get_int("model.dim"));
  ctx.bm25_k1 = config.get_double("lexical.k1");
  ctx.bm25_b = config.get_double("lexical.b");
  ctx.synthetic = synthetic;

  for (const auto& p : passages.passages) {
    ctx.tokens.passages[p.id] = tokenize(p.text, vocab, ctx.max_passage_len);
  }
  for (const auto& q : train_queries.queries) {
    ctx.tokens.queries[q.id] = tokenize(q.text, vocab, ctx.max_query_len);
  }
  ctx.index_synthetic_tokens();
  ctx.gold_pairs = gold_pairs_from_qrels(train_queries, train_qrels);
  return ctx;
}

NegativePools bm25_pools(const PipelineContext& ctx, const InvertedIndex& index,
                         const std::vector<TrainPair>& pairs, std::size_t* n_empty) {
  NegativePools pools;
  std::size_t empty = 0;
  for (const auto& pair : pairs) {
    auto ranked = bm25_search(index, ctx.tokens.query(pair.query_id), ctx.pool_size + 1,
                              ctx.bm25_k1, ctx.bm25_b);
    std::vector<DocId> pool;
    pool.reserve(ctx.pool_size);
    for (const auto& doc : ranked) {
      if (doc.passage_id == pair.positive_id) continue;
      if (pool.size() == ctx.pool_size) break;
      pool.push_back(doc.passage_id);
    }
    if (pool.empty()) ++empty;
    pools.by_query[pair.query_id] = std::move(pool);
  }
  if (n_empty != nullptr) *n_empty = empty;
  return pools;
}

NegativePools dense_pools(const PipelineContext& ctx, const DenseIndex& index,
                          const EncoderParams& params, const std::vector<TrainPair>& pairs) {
  std::vector<QueryId> qids;
  qids.reserve(pairs.size());
  for (const auto& p : pairs) qids.push_back(p.query_id);
  return mine_hard_negatives(index, params, ctx.pair_tokens(pairs), qids, ctx.pool_size,
                             ctx.positional_scale);
}

TeacherResult train_teacher_two_stage(const PipelineContext& ctx, const TrainingConfig& stage1,
                                      const TrainingConfig& stage2) {
  check(!ctx.gold_pairs.empty(), Errc::invalid, "train_teacher_two_stage: no gold pairs");
  TeacherResult result;

  InvertedIndex bm25 = build_inverted_index(*ctx.passages, *ctx.vocab, ctx.max_passage_len);
  std::size_t n_empty = 0;
  NegativePools pools_s1 = bm25_pools(ctx, bm25, ctx.gold_pairs, &n_empty);
  warn_empty_pools("teacher stage 1", n_empty);

  result.stage1 = init_params(ctx.seed, static_cast<std::int64_t>(ctx.vocab->size()), ctx.dim);
  TrainData data_s1;
  data_s1.pairs = ctx.gold_pairs;
  data_s1.pools = &pools_s1;
  result.stage1_log = train_epochs(result.stage1, data_s1, ctx.tokens, stage1,
                                   LossKind::contrastive, nullptr, Rng(ctx.seed, "teacher-s1"));

  DenseIndex index1 = build_dense_index(result.stage1, *ctx.passages, *ctx.vocab,
                                        ctx.max_passage_len, ctx.positional_scale);
  NegativePools pools_s2 = dense_pools(ctx, index1, result.stage1, ctx.gold_pairs);

  result.stage2 = result.stage1;
  TrainData data_s2;
  data_s2.pairs = ctx.gold_pairs;
  data_s2.pools = &pools_s2;
  result.stage2_log = train_epochs(result.stage2, data_s2, ctx.tokens, stage2,
                                   LossKind::contrastive, nullptr, Rng(ctx.seed, "teacher-s2"));
  return result;
}

std::vector<SoftLabelRecord> generate_soft_labels(const PipelineContext& ctx,
                                                  const EncoderParams& teacher,
                                                  const std::vector<SyntheticPair>& pairs,
                                                  const NegativePools& pools, int n_negatives,
                                                  double temperature) {
  check(n_negatives >= 0, Errc::invalid, "generate_soft_labels: n_negatives must be >= 0");
  std::vector<SoftLabelRecord> records(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& pair = pairs[i];
    const auto* pool = pools.find(pair.query.id);
    check(pool != nullptr && pool->size() >= static_cast<std::size_t>(n_negatives),
          Errc::invalid,
          "generate_soft_labels: pool too small for query " + std::to_string(pair.query.id));
    SoftLabelRecord r;
    r.query_id = pair.query.id;
    r.candidates.push_back(pair.originating_passage_id);
    for (int j = 0; j < n_negatives; ++j) r.candidates.push_back((*pool)[std::size_t(j)]);

    EmbeddingVector q_vec =
        encode(teacher, ctx.tokens.query(pair.query.id), ctx.positional_scale);
    std::vector<double> scores;
    scores.reserve(r.candidates.size());
    for (DocId pid : r.candidates) {
      scores.push_back(
          score_pair(q_vec, encode(teacher, ctx.tokens.passage(pid), ctx.positional_scale)));
    }
    r.probs = softmax_scores(scores, temperature);
    r.validate();
    records[i] = std::move(r);
  });
  return records;
}

std::vector<SyntheticPair> consistency_filter(const PipelineContext& ctx,
                                              const EncoderParams& teacher,
                                              const std::vector<SyntheticPair>& pairs,
                                              const DenseIndex& index) {
  std::vector<char> keep(pairs.size(), 0);
  parallel_for(pairs.size(), [&](std::size_t i) {
    EmbeddingVector q_vec =
        encode(teacher, ctx.tokens.query(pairs[i].query.id), ctx.positional_scale);
    auto top = dense_search(index, q_vec, 1);
    keep[i] = !top.empty() && top[0].passage_id == pairs[i].originating_passage_id;
  });
  std::vector<SyntheticPair> kept;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) kept.push_back(pairs[i]);
  }
  return kept;
}

EncoderParams pretrain_student(const PipelineContext& ctx, EncoderParams init,
                               const std::vector<SoftLabelRecord>& soft_labels,
                               const NoiseConfig& noise, const TrainingConfig& config,
                               const Rng& rng_root, std::vector<EpochLoss>* log) {
  check(!soft_labels.empty(), Errc::invalid, "pretrain_student: no soft labels");
  TrainData data;
  data.kl_examples.reserve(soft_labels.size());
  for (const auto& r : soft_labels) {
    r.validate();
    data.kl_examples.push_back(KlExample{r.query_id, r.candidates, r.probs});
  }
  auto epoch_log =
      train_epochs(init, data, ctx.tokens, config, LossKind::kl, &noise, rng_root);
  if (log != nullptr) *log = std::move(epoch_log);
  return init;
}

EncoderParams finetune(const PipelineContext& ctx, EncoderParams params,
                       const NegativePools& pools, const TrainingConfig& config,
                       const Rng& rng_root, std::vector<EpochLoss>* log) {
  TrainData data;
  data.pairs = ctx.gold_pairs;
  data.pools = &pools;
  auto epoch_log =
      train_epochs(params, data, ctx.tokens, config, LossKind::contrastive, nullptr, rng_root);
  if (log != nullptr) *log = std::move(epoch_log);
  return params;
}

namespace {

struct StageRecorder {
  RunManifest* manifest;
  const std::string run_dir;
  const QueryCollection* eval_queries;
  const QRelSet* eval_qrels;
  const PassageCollection* passages;
  const Vocabulary* vocab;
  const PipelineContext* ctx;
  std::vector<std::size_t> eval_ks;

  void checkpoint(const std::string& stage, const EncoderParams& params) {
    const std::string file = stage + ".ckpt";
    save_checkpoint(params, run_dir + "/" + file);
    manifest->checkpoints[stage] = file;
    manifest->checksums[stage] = checksum_hex(params.checksum());
  }

  void evaluate(const std::string& stage, const EncoderParams& params) {
    if (eval_queries == nullptr || eval_queries->size() == 0) return;
    std::size_t depth = 10;
    for (std::size_t k : eval_ks) depth = std::max(depth, k);
    DenseIndex index = build_dense_index(params, *passages, *vocab, ctx->max_passage_len,
                                         ctx->positional_scale);
    RunResult run = retrieve(params, index, *eval_queries, *vocab, ctx->max_query_len, depth,
                             ctx->positional_scale);
    MetricReport report = evaluate_run(run, *eval_qrels, *eval_queries, *passages, eval_ks);
    manifest->stage_metrics[stage] = report.aggregates;
  }

  void losses(const std::string& stage, const std::vector<EpochLoss>& log) {
    write_loss_log(log, run_dir + "/" + stage + "_loss.csv");
  }
};

// Any stage failure aborts with the stage name attached; artifacts written
// so far stay on disk for debugging.
template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(e.code(), "stage " + stage + ": " + e.what());
  }
}

void write_stage_metrics_csv(const RunManifest& manifest, const std::string& path) {
  auto out = open_out(path);
  out << "stage,metric,k,value\n";
  for (const auto& [stage, metrics] : manifest.stage_metrics) {
    for (const auto& m : metrics) {
      out << stage << ',' << m.metric << ',' << m.k << ',' << format_double(m.value, 9) << '\n';
    }
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

}  // namespace

RunManifest run_self_training(const PassageCollection& passages, const Vocabulary& vocab,
                              const QueryCollection& train_queries, const QRelSet& train_qrels,
                              const QueryCollection& eval_queries, const QRelSet& eval_qrels,
                              const std::vector<SyntheticPair>& synthetic, const Config& config,
                              const std::string& run_dir) {
  check(!synthetic.empty(), Errc::invalid, "run_self_training: no synthetic pairs");
  std::filesystem::create_directories(run_dir);

  PipelineContext ctx =
      make_context(passages, vocab, train_queries, train_qrels, synthetic, config);
  const int iterations = static_cast<int>(config.get_int("pipeline.iterations"));
  check(iterations >= 1, Errc::invalid, "pipeline.iterations must be >= 1");
  const bool no_noise = config.get_bool("pipeline.no_noise");
  const bool no_pseudo_labels = config.get_bool("pipeline.no_pseudo_labels");
  const bool use_filter = config.get_bool("pipeline.consistency_filter");
  const bool joint_training = config.get_bool("pipeline.joint_training");
  const std::string student_init = config.get_string("pipeline.student_init");
  check(student_init == "teacher" || student_init == "fresh", Errc::invalid,
        "pipeline.student_init must be 'teacher' or 'fresh'");
  const double label_temperature = config.get_double("pipeline.soft_label_temperature");

  NoiseConfig noise = config.noise();
  if (no_noise) noise = noise.silenced();

  RunManifest manifest;
  manifest.run_dir = run_dir;
  manifest.seed = ctx.seed;
  manifest.iterations = iterations;
  manifest.config_snapshot = config.resolved();

  StageRecorder rec{&manifest, run_dir,   &eval_queries, &eval_qrels,
                    &passages, &vocab,    &ctx,          config.get_size_list("eval.ks")};

  config.write_resolved(run_dir + "/config.resolved");
  vocab.save(run_dir + "/vocab.tsv");
  save_synthetic(ctx.synthetic, run_dir + "/synthetic.tsv");

  std::cerr << "nstr: [teacher] two-stage training on " << ctx.gold_pairs.size()
            << " gold pairs" << std::endl;
  TeacherResult teacher = with_stage("teacher", [&] {
    return train_teacher_two_stage(ctx, config.stage_training("teacher1"),
                                   config.stage_training("teacher2"));
  });
  rec.checkpoint("teacher_s1", teacher.stage1);
  rec.losses("teacher_s1", teacher.stage1_log);
  rec.evaluate("teacher_s1", teacher.stage1);
  rec.checkpoint("teacher_s2", teacher.stage2);
  rec.losses("teacher_s2", teacher.stage2_log);
  rec.evaluate("teacher_s2", teacher.stage2);

  EncoderParams current_teacher = teacher.stage2;
  for (int iter = 1; iter <= iterations; ++iter) {
    const std::string prefix = "iter" + std::to_string(iter);
    manifest.checksums[prefix + "_teacher"] = checksum_hex(current_teacher.checksum());
    const std::uint64_t teacher_before = current_teacher.checksum();

    std::cerr << "nstr: [" << prefix << "] building index and mining negatives" << std::endl;
    DenseIndex index = with_stage(prefix + "_index", [&] {
      return build_dense_index(current_teacher, passages, vocab, ctx.max_passage_len,
                               ctx.positional_scale);
    });
    NegativePools gold_pools = with_stage(
        prefix + "_mine", [&] { return dense_pools(ctx, index, current_teacher, ctx.gold_pairs); });
    save_pools(gold_pools, run_dir + "/" + prefix + "_gold_pools.tsv");

    std::vector<SyntheticPair> active = ctx.synthetic;
    if (use_filter) {
      active = consistency_filter(ctx, current_teacher, active, index);
      std::cerr << "nstr: [" << prefix << "] consistency filter kept " << active.size() << "/"
                << ctx.synthetic.size() << " synthetic pairs" << std::endl;
      check(!active.empty(), Errc::invalid, "consistency filter removed all synthetic pairs");
      save_synthetic(active, run_dir + "/" + prefix + "_filtered_synthetic.tsv");
    }
    std::vector<TrainPair> synthetic_pairs;
    synthetic_pairs.reserve(active.size());
    for (const auto& p : active) {
      synthetic_pairs.push_back(TrainPair{p.query.id, p.originating_passage_id});
    }
    NegativePools synthetic_pools = dense_pools(ctx, index, current_teacher, synthetic_pairs);
    save_pools(synthetic_pools, run_dir + "/" + prefix + "_synthetic_pools.tsv");

    const TrainingConfig pretrain_cfg = config.stage_training("pretrain");
    const TrainingConfig finetune_cfg = config.stage_training("finetune");

    std::vector<SoftLabelRecord> labels;
    if (!no_pseudo_labels || joint_training) {
      labels = with_stage(prefix + "_soft_label", [&] {
        return generate_soft_labels(ctx, current_teacher, active, synthetic_pools,
                                    pretrain_cfg.n_hard_negatives, label_temperature);
      });
      save_soft_labels(labels, run_dir + "/" + prefix + "_soft_labels.jsonl");
    }

    EncoderParams student =
        student_init == "teacher"
            ? current_teacher
            : init_params(Rng(ctx.seed, "student-fresh-" + prefix).next_u64(),
                          static_cast<std::int64_t>(vocab.size()), ctx.dim);

    if (joint_training) {
      std::cerr << "nstr: [" << prefix << "] joint training" << std::endl;
      TrainData data;
      data.pairs = ctx.gold_pairs;
      data.pools = &gold_pools;
      for (const auto& r : labels) {
        data.kl_examples.push_back(KlExample{r.query_id, r.candidates, r.probs});
      }
      const TrainingConfig joint_cfg = config.stage_training("joint");
      auto log = train_epochs(student, data, ctx.tokens, joint_cfg, LossKind::joint, &noise,
                              Rng(ctx.seed, prefix + "-joint"));
      rec.checkpoint(prefix + "_joint", student);
      rec.losses(prefix + "_joint", log);
      rec.evaluate(prefix + "_joint", student);
    } else {
      std::vector<EpochLoss> pre_log;
      if (no_pseudo_labels) {
        std::cerr << "nstr: [" << prefix << "] pre-training on raw synthetic pairs" << std::endl;
        TrainData data;
        data.pairs = synthetic_pairs;
        data.pools = &synthetic_pools;
        pre_log = train_epochs(student, data, ctx.tokens, pretrain_cfg, LossKind::contrastive,
                               &noise, Rng(ctx.seed, prefix + "-pretrain"));
      } else {
        std::cerr << "nstr: [" << prefix << "] noisy pre-training on " << labels.size()
                  << " soft-labelled queries" << std::endl;
        student = with_stage(prefix + "_pretrain", [&] {
          return pretrain_student(ctx, std::move(student), labels, noise, pretrain_cfg,
                                  Rng(ctx.seed, prefix + "-pretrain"), &pre_log);
        });
      }
      rec.checkpoint(prefix + "_pretrain", student);
      rec.losses(prefix + "_pretrain", pre_log);
      rec.evaluate(prefix + "_pretrain", student);

      std::cerr << "nstr: [" << prefix << "] finetuning on gold pairs" << std::endl;
      std::vector<EpochLoss> fine_log;
      student = with_stage(prefix + "_finetune", [&] {
        return finetune(ctx, std::move(student), gold_pools, finetune_cfg,
                        Rng(ctx.seed, prefix + "-finetune"), &fine_log);
      });
      rec.checkpoint(prefix + "_finetune", student);
      rec.losses(prefix + "_finetune", fine_log);
      rec.evaluate(prefix + "_finetune", student);
    }

    check(current_teacher.checksum() == teacher_before, Errc::state,
          "teacher parameters were mutated during student training");
    manifest.checksums[prefix + "_student"] = checksum_hex(student.checksum());
    current_teacher = std::move(student);
  }

  {
    std::size_t depth = 10;
    for (std::size_t k : rec.eval_ks) depth = std::max(depth, k);
    depth = std::max< std::size_t>(depth, 100);
    DenseIndex index = build_dense_index(current_teacher, passages, vocab, ctx.max_passage_len,
                                         ctx.positional_scale);
    if (eval_queries.size() > 0) {
      RunResult run = retrieve(current_teacher, index, eval_queries, vocab, ctx.max_query_len,
                               depth, ctx.positional_scale);
      run.save_trec(run_dir + "/final_run.trec", "nstr-student");
    }
  }

  write_stage_metrics_csv(manifest, run_dir + "/stage_metrics.csv");
  manifest.save(run_dir + "/run_manifest.json");
  return manifest;
}

CrossEncoderParams train_reranker(const PipelineContext& ctx, CrossEncoderParams params,
                                  const RerankerTrainInputs& inputs,
                                  const TrainingConfig& teacher_or_finetune_config,
                                  const TrainingConfig* pretrain_config,
                                  const NoiseConfig& noise, std::vector<EpochLoss>* log) {
  check(inputs.gold_pools != nullptr, Errc::invalid, "train_reranker: gold pools required");
  std::vector<EpochLoss> combined;
  if (inputs.soft_labels != nullptr) {
    check(pretrain_config != nullptr, Errc::invalid,
          "train_reranker: student mode needs a pretrain config");
    TrainData pre;
    pre.kl_examples.reserve(inputs.soft_labels->size());
    for (const auto& r : *inputs.soft_labels) {
      r.validate();
      pre.kl_examples.push_back(KlExample{r.query_id, r.candidates, r.probs});
    }
    auto pre_log = train_cross_epochs(params, pre, ctx.tokens, *pretrain_config, LossKind::kl,
                                      &noise, Rng(ctx.seed, "rerank-pretrain"));
    combined.insert(combined.end(), pre_log.begin(), pre_log.end());
  }
  TrainData fine;
  fine.pairs = ctx.gold_pairs;
  fine.pools = inputs.gold_pools;
  const char* stream = inputs.soft_labels != nullptr ? "rerank-finetune" : "rerank-teacher";
  auto fine_log = train_cross_epochs(params, fine, ctx.tokens, teacher_or_finetune_config,
                                     LossKind::contrastive, nullptr, Rng(ctx.seed, stream));
  combined.insert(combined.end(), fine_log.begin(), fine_log.end());
  if (log != nullptr) *log = std::move(combined);
  return params;
}

std::vector<SoftLabelRecord> generate_cross_soft_labels(const PipelineContext& ctx,
                                                        const CrossEncoderParams& teacher,
                                                        const std::vector<SyntheticPair>& pairs,
                                                        const NegativePools& pools,
                                                        int n_negatives, double temperature) {
  check(n_negatives >= 0, Errc::invalid, "generate_cross_soft_labels: n_negatives must be >= 0");
  std::vector<SoftLabelRecord> records(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& pair = pairs[i];
    const auto* pool = pools.find(pair.query.id);
    check(pool != nullptr && pool->size() >= static_cast<std::size_t>(n_negatives),
          Errc::invalid, "generate_cross_soft_labels: pool too small for query " +
                             std::to_string(pair.query.id));
    SoftLabelRecord r;
    r.query_id = pair.query.id;
    r.candidates.push_back(pair.originating_passage_id);
    for (int j = 0; j < n_negatives; ++j) r.candidates.push_back((*pool)[std::size_t(j)]);
    const TokenizedText& q_tokens = ctx.tokens.query(pair.query.id);
    std::vector<double> scores;
    scores.reserve(r.candidates.size());
    for (DocId pid : r.candidates) {
      scores.push_back(cross_score(teacher, q_tokens, ctx.tokens.passage(pid)));
    }
    r.probs = softmax_scores(scores, temperature);
    r.validate();
    records[i] = std::move(r);
  });
  return records;
}

std::vector<ScoredDoc> rerank(const CrossEncoderParams& params, const TokenizedText& query,
                              const std::vector<DocId>& candidate_ids, const TokenStore& tokens) {
  check(!candidate_ids.empty(), Errc::invalid, "rerank: empty candidate list");
  std::vector<ScoredDoc> scored;
  scored.reserve(candidate_ids.size());
  for (DocId pid : candidate_ids) {
    scored.push_back(ScoredDoc{pid, cross_score(params, query, tokens.passage(pid))});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  });
  return scored;
}

RunResult rerank_run(const CrossEncoderParams& params, const RunResult& run,
                     const QueryCollection& queries, const PassageCollection& passages,
                     const Vocabulary& vocab, std::size_t max_query_len,
                     std::size_t max_passage_len, std::size_t top_k) {
  check(top_k >= 1, Errc::invalid, "rerank_run: top_k must be >= 1");
  RunResult out;
  TokenStore tokens;
  for (const auto& [qid, ranked] : run.by_query) {
    for (const auto& doc : ranked) {
      if (tokens.passages.count(doc.passage_id) == 0) {
        tokens.passages[doc.passage_id] =
            tokenize(passages.at(doc.passage_id).text, vocab, max_passage_len);
      }
    }
  }
  for (const auto& [qid, ranked] : run.by_query) {
    TokenizedText q_tokens = tokenize(queries.at(qid).text, vocab, max_query_len);
    std::vector<DocId> candidates;
    for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
      candidates.push_back(ranked[i].passage_id);
    }
    out.by_query[qid] = rerank(params, q_tokens, candidates, tokens);
  }
  return out;
}

}  // namespace nstr
