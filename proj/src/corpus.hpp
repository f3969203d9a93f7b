#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace nstr {

struct Passage {
  DocId id = 0;
  std::string text;
};

struct Query {
  QueryId id = 0;
  std::string text;
  std::vector<std::string> answers;
};

struct QRel {
  QueryId query_id = 0;
  DocId passage_id = 0;
  int relevance = 0;
};

struct PassageCollection {
  std::vector<Passage> passages;

  std::size_t size() const { return passages.size(); }
  bool contains(DocId id) const { return by_id_.count(id) > 0; }
  const Passage& at(DocId id) const;
  void rebuild_lookup();

 private:
  std::unordered_map<DocId, std::size_t> by_id_;
};

struct QueryCollection {
  std::vector<Query> queries;

  std::size_t size() const { return queries.size(); }
  bool contains(QueryId id) const { return by_id_.count(id) > 0; }
  const Query& at(QueryId id) const;
  void rebuild_lookup();

 private:
  std::unordered_map<QueryId, std::size_t> by_id_;
};

struct QRelSet {
  std::vector<QRel> rows;

  bool knows_query(QueryId qid) const { return by_query_.count(qid) > 0; }
  // Judged (passage, relevance) rows for a query; empty when the query only
  // has zero-relevance rows or is unknown.
  std::vector<QRel> judgments(QueryId qid) const;
  void rebuild_lookup();

 private:
  std::unordered_map<QueryId, std::vector<std::size_t>> by_query_;
};

using TokenizedText = std::vector<TokenId>;

// Token ids are contiguous from 0 with PAD=0, UNK=1, MASK=2 reserved; corpus
// tokens start at 3, assigned by descending frequency with lexicographic
// tie-break so any permutation of the corpus yields the same mapping.
class Vocabulary {
 public:
  Vocabulary();

  TokenId id_of(const std::string& token) const;  // kUnkId when absent
  const std::string& token_of(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  int min_frequency() const { return min_frequency_; }

  void add_token(const std::string& token);  // assigns the next free id
  void set_min_frequency(int f) { min_frequency_ = f; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  int min_frequency_ = 1;
};

PassageCollection load_passages(const std::string& path);
std::pair<QueryCollection, QRelSet> load_queries(const std::string& queries_path,
                                                 const std::optional<std::string>& qrels_path);
QRelSet load_qrels(const std::string& path, const QueryCollection& queries);

void save_passages(const PassageCollection& passages, const std::string& path);
void save_queries(const QueryCollection& queries, const std::string& path);
void save_qrels(const QRelSet& qrels, const std::string& path);

// Lowercases, splits on Unicode whitespace, strips punctuation from token
// boundaries. Pure string-level normalization shared by tokenize and
// build_vocab.
std::vector<std::string> normalize_words(std::string_view text);

Vocabulary build_vocab(const PassageCollection& passages, const QueryCollection& queries,
                       int min_frequency);

TokenizedText tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

}  // namespace nstr
