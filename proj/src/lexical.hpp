#pragma once

#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"

namespace nstr {

struct Posting {
  DocId passage_id = 0;
  std::int32_t term_frequency = 0;
};

struct ScoredDoc {
  DocId passage_id = 0;
  double score = 0.0;
};

// Postings are keyed by vocabulary token id; reserved ids (PAD/UNK/MASK)
// never enter the index. Lists stay sorted by passage id.
struct InvertedIndex {
  std::unordered_map<TokenId, std::vector<Posting>> postings;
  std::unordered_map<DocId, std::int32_t> doc_len;
  double avgdl = 0.0;
  std::int64_t num_docs = 0;

  std::int64_t doc_frequency(TokenId t) const {
    auto it = postings.find(t);
    return it == postings.end() ? 0 : static_cast<std::int64_t>(it->second.size());
  }

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);
};

InvertedIndex build_inverted_index(const PassageCollection& passages, const Vocabulary& vocab,
                                   std::size_t max_passage_len);

// Lucene-style BM25: idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)), doc term
// weight tf*(k1+1)/(tf + k1*(1 - b + b*dl/avgdl)). Zero-score documents are
// omitted; ties break by ascending passage id.
std::vector<ScoredDoc> bm25_search(const InvertedIndex& index, const TokenizedText& query,
                                   std::size_t k, double k1 = 0.9, double b = 0.4);

}  // namespace nstr
