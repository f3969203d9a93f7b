// nstr command line: thin wrapper over the C API in nstr/nstr.h. Parses
// flags, loads the config, dispatches one subcommand, and reports errors as
// a single machine-parsable line on stderr.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nstr/nstr.h"

namespace {

constexpr const char* kSubcommands[] = {
    "ingest",        "build-vocab",    "bm25-index", "bm25-search", "train-teacher",
    "gen-queries",   "encode-corpus",  "mine-negatives", "soft-label", "pretrain",
    "finetune",      "self-train",     "rerank-train", "rerank",     "eval",
    "robustness",    "bench",
};

constexpr const char* kDescriptions[] = {
    "validate corpus files and write canonical copies",
    "build the token vocabulary",
    "build the BM25 inverted index",
    "run BM25 retrieval, writing a TREC run file",
    "two-stage dual-encoder teacher training",
    "generate synthetic query-passage pairs",
    "encode all passages into an embedding matrix file",
    "mine hard-negative pools with a dense index",
    "generate teacher soft labels for synthetic queries",
    "noisy self-training pre-training of a student",
    "finetune a checkpoint on gold pairs",
    "run the full self-training pipeline",
    "train the teacher or student reranker",
    "rerank the top-k of a run with a cross encoder",
    "evaluate a TREC run file (MRR/recall/answer-recall/nDCG)",
    "shuffled-query robustness sweep",
    "generate the synthetic benchmark and run the pipeline on it",
};

int exit_code_for(nstr_status status) { return status == NSTR_OK ? 0 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nstr - noisy self-training for dense passage retrieval"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::simple);

  std::string config_path;
  std::string run_dir;
  std::int64_t seed_override = -1;
  bool overwrite = false;

  std::string selected;
  const std::size_t n = sizeof(kSubcommands) / sizeof(kSubcommands[0]);
  for (std::size_t i = 0; i < n; ++i) {
    auto* sub = app.add_subcommand(kSubcommands[i], kDescriptions[i]);
    sub->add_option("--config", config_path, "path to a `key = value` config file");
    sub->add_option("--run-dir", run_dir, "directory for output artifacts")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_flag("--overwrite", overwrite, "allow clobbering existing outputs");
    sub->callback([&selected, name = std::string(kSubcommands[i])] { selected = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  nstr_config* config = nullptr;
  nstr_status status;
  if (config_path.empty()) {
    status = nstr_config_parse("", &config);
  } else {
    status = nstr_config_load(config_path.c_str(), &config);
  }
  if (status != NSTR_OK) {
    std::fprintf(stderr, "error: %s\n", nstr_last_error());
    return exit_code_for(status);
  }

  status = nstr_command_run(selected.c_str(), config, run_dir.c_str(), seed_override,
                            overwrite ? 1 : 0);
  nstr_config_free(config);
  if (status != NSTR_OK) {
    std::fprintf(stderr, "error: %s\n", nstr_last_error());
    return exit_code_for(status);
  }
  return 0;
}
