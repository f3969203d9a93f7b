#pragma once

#include <cstdint>
#include <string>

#include "common.hpp"

namespace nstr {

// Synthetic desk-scale benchmark: templated attribute facts about invented
// entities. Every gold query has exactly one relevant passage and the
// answer string is embedded in that passage, so a perfect run scores 1.0 on
// every metric.
struct BenchPaths {
  std::string passages;
  std::string train_queries;
  std::string train_qrels;
  std::string eval_queries;
  std::string eval_qrels;
};

BenchPaths generate_benchmark(std::uint64_t seed, std::int64_t n_passages, std::int64_t n_train,
                              std::int64_t n_eval, const std::string& out_dir);

}  // namespace nstr
