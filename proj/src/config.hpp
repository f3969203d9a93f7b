#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "noise.hpp"
#include "train.hpp"

namespace nstr {

// Flat `key = value` document with namespaced keys. Unknown keys are
// rejected; every key has a registered default so a resolved snapshot
// replays a run exactly.
class Config {
 public:
  Config();

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool is_default(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  std::uint64_t seed() const;
  void override_seed(std::uint64_t seed);

  // Training config for a stage prefix ("teacher1", "teacher2", "pretrain",
  // "finetune", "joint", "rerank_teacher", "rerank_pretrain",
  // "rerank_finetune"); unset stage keys fall back to the train.* values.
  TrainingConfig stage_training(const std::string& stage) const;
  NoiseConfig noise() const;

  // Full resolved key set in sorted order, defaults included.
  std::map<std::string, std::string> resolved() const;
  void write_resolved(const std::string& path) const;

 private:
  std::string stage_or_train(const std::string& stage, const std::string& field) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> defaults_;
};

extern const std::vector<std::string> kStagePrefixes;

}  // namespace nstr
