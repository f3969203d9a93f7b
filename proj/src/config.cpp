#include "config.hpp"

#include <algorithm>

#include "io_util.hpp"

namespace nstr {

const std::vector<std::string> kStagePrefixes = {
    "teacher1",       "teacher2",       "pretrain",        "finetune",
    "joint",          "rerank_teacher", "rerank_pretrain", "rerank_finetune",
};

namespace {

const std::vector<std::pair<std::string, std::string>>& base_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"seed", "42"},

      {"corpus.passages", ""},
      {"corpus.queries", ""},
      {"corpus.qrels", ""},
      {"corpus.eval_queries", ""},
      {"corpus.eval_qrels", ""},
      {"corpus.synthetic", ""},
      {"corpus.vocab", ""},
      {"corpus.min_frequency", "1"},
      {"corpus.max_query_len", "32"},
      {"corpus.max_passage_len", "128"},

      {"model.dim", "64"},
      {"model.hidden", "16"},
      {"model.positional_scale", "0"},
      {"model.checkpoint", ""},

      {"lexical.k1", "0.9"},
      {"lexical.b", "0.4"},
      {"lexical.k", "100"},
      {"lexical.index", ""},

      {"train.learning_rate", "0.01"},
      {"train.batch_size", "32"},
      {"train.n_hard_negatives", "7"},
      {"train.epochs", "3"},
      {"train.optimizer", "adam"},
      {"train.temperature", "1"},
      {"train.use_in_batch_negatives", "true"},
      {"train.clip_norm", "5"},

      {"noise.p_shuffle", "0.1"},
      {"noise.p_delete", "0.1"},
      {"noise.p_mask", "0.1"},
      {"noise.min_len", "1"},

      {"pipeline.pool_size", "100"},
      {"pipeline.iterations", "1"},
      {"pipeline.no_noise", "false"},
      {"pipeline.no_pseudo_labels", "false"},
      {"pipeline.consistency_filter", "false"},
      {"pipeline.joint_training", "false"},
      {"pipeline.student_init", "teacher"},
      {"pipeline.soft_label_temperature", "1"},
      {"pipeline.mine_target", "gold"},

      {"querygen.source", "span"},
      {"querygen.file", ""},
      {"querygen.queries_per_passage", "1"},
      {"querygen.span_min", "3"},
      {"querygen.span_max", "6"},

      {"eval.run", ""},
      {"eval.ks", "10"},
      {"eval.tag", "nstr"},

      {"robustness.proportions", "0,0.25,0.5,0.75,1"},

      {"reranker.mode", "teacher"},
      {"reranker.top_k", "50"},
      {"reranker.checkpoint", ""},
      {"reranker.run", ""},
      {"reranker.soft_labels", ""},

      {"bench.n_passages", "2000"},
      {"bench.n_train", "300"},
      {"bench.n_eval", "200"},
  };
  return defaults;
}

const std::vector<std::string>& stage_fields() {
  static const std::vector<std::string> fields = {
      "learning_rate", "batch_size",  "n_hard_negatives",        "epochs",
      "optimizer",     "temperature", "use_in_batch_negatives", "clip_norm",
  };
  return fields;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Config::Config() {
  for (const auto& [key, value] : base_defaults()) defaults_[key] = value;
  for (const auto& stage : kStagePrefixes) {
    for (const auto& field : stage_fields()) defaults_[stage + "." + field] = "";
  }
}

Config Config::from_file(const std::string& path) {
  Config config;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') return;
    std::size_t eq = stripped.find('=');
    check(eq != std::string::npos, Errc::parse,
          "config: expected `key = value` at line " + std::to_string(line_no));
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    check(!key.empty(), Errc::parse, "config: empty key at line " + std::to_string(line_no));
    config.set(key, value);
  });
  return config;
}

Config Config::from_string(const std::string& text) {
  Config config;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string stripped = trim(raw);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    check(eq != std::string::npos, Errc::parse,
          "config: expected `key = value` at line " + std::to_string(line_no));
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    config.set(key, value);
  }
  return config;
}

void Config::set(const std::string& key, const std::string& value) {
  check(defaults_.count(key) > 0, Errc::invalid, "unknown config key: " + key);
  values_[key] = value;
}

bool Config::is_default(const std::string& key) const { return values_.count(key) == 0; }

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  auto dit = defaults_.find(key);
  check(dit != defaults_.end(), Errc::invalid, "unknown config key: " + key);
  return dit->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  return parse_i64(get_string(key), "config key " + key, 0);
}

double Config::get_double(const std::string& key) const {
  return parse_double(get_string(key), "config key " + key, 0);
}

bool Config::get_bool(const std::string& key) const {
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(Errc::invalid, "config key " + key + ": expected boolean, got '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& field : split(get_string(key), ',')) {
    if (!field.empty()) out.push_back(parse_double(field, "config key " + key, 0));
  }
  return out;
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& field : split(get_string(key), ',')) {
    if (!field.empty()) {
      auto v = parse_i64(field, "config key " + key, 0);
      check(v >= 1, Errc::invalid, "config key " + key + ": entries must be >= 1");
      out.push_back(static_cast<std::size_t>(v));
    }
  }
  return out;
}

std::uint64_t Config::seed() const { return static_cast<std::uint64_t>(get_int("seed")); }

void Config::override_seed(std::uint64_t seed) { values_["seed"] = std::to_string(seed); }

std::string Config::stage_or_train(const std::string& stage, const std::string& field) const {
  std::string v = get_string(stage + "." + field);
  if (!v.empty()) return v;
  return get_string("train." + field);
}

TrainingConfig Config::stage_training(const std::string& stage) const {
  check(std::find(kStagePrefixes.begin(), kStagePrefixes.end(), stage) != kStagePrefixes.end(),
        Errc::invalid, "unknown training stage: " + stage);
  TrainingConfig t;
  t.learning_rate = parse_double(stage_or_train(stage, "learning_rate"), "learning_rate", 0);
  t.batch_size = static_cast<int>(parse_i64(stage_or_train(stage, "batch_size"), "batch_size", 0));
  t.n_hard_negatives = static_cast<int>(
      parse_i64(stage_or_train(stage, "n_hard_negatives"), "n_hard_negatives", 0));
  t.epochs = static_cast<int>(parse_i64(stage_or_train(stage, "epochs"), "epochs", 0));
  std::string opt = stage_or_train(stage, "optimizer");
  if (opt == "sgd") {
    t.optimizer = OptimizerKind::sgd;
  } else if (opt == "adam") {
    t.optimizer = OptimizerKind::adam;
  } else {
    fail(Errc::invalid, "unknown optimizer: " + opt);
  }
  t.seed = seed();
  t.temperature = parse_double(stage_or_train(stage, "temperature"), "temperature", 0);
  std::string ibn = stage_or_train(stage, "use_in_batch_negatives");
  t.use_in_batch_negatives = ibn == "true" || ibn == "1" || ibn == "yes";
  t.clip_norm = parse_double(stage_or_train(stage, "clip_norm"), "clip_norm", 0);
  t.positional_scale = get_double("model.positional_scale");
  t.validate();
  return t;
}

NoiseConfig Config::noise() const {
  NoiseConfig n;
  n.p_shuffle = get_double("noise.p_shuffle");
  n.p_delete = get_double("noise.p_delete");
  n.p_mask = get_double("noise.p_mask");
  n.min_len = static_cast<std::size_t>(get_int("noise.min_len"));
  n.validate();
  return n;
}

std::map<std::string, std::string> Config::resolved() const {
  std::map<std::string, std::string> out = defaults_;
  for (const auto& [key, value] : values_) out[key] = value;
  return out;
}

void Config::write_resolved(const std::string& path) const {
  auto out = open_out(path);
  for (const auto& [key, value] : resolved()) out << key << " = " << value << '\n';
  check(out.good(), Errc::io, "write failed: " + path);
}

}  // namespace nstr
