#include "lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "io_util.hpp"

namespace nstr {

namespace {
constexpr char kIndexMagic[4] = {'N', 'S', 'T', 'B'};
constexpr std::uint32_t kIndexVersion = 1;
}  // namespace

InvertedIndex build_inverted_index(const PassageCollection& passages, const Vocabulary& vocab,
                                   std::size_t max_passage_len) {
  check(passages.size() > 0, Errc::invalid, "build_inverted_index: empty collection");
  InvertedIndex index;
  index.num_docs = static_cast<std::int64_t>(passages.size());

  // Sorted map during construction keeps postings ordered by passage id for
  // any input permutation; ids within one doc are counted then emitted once.
  std::map<TokenId, std::map<DocId, std::int32_t>> acc;
  std::int64_t total_len = 0;
  for (const auto& p : passages.passages) {
    TokenizedText tokens;
    try {
      tokens = tokenize(p.text, vocab, max_passage_len);
    } catch (const Error& e) {
      fail(Errc::invalid,
           "build_inverted_index: passage " + std::to_string(p.id) + ": " + e.what());
    }
    index.doc_len[p.id] = static_cast<std::int32_t>(tokens.size());
    total_len += static_cast<std::int64_t>(tokens.size());
    for (TokenId t : tokens) {
      if (t < kReservedTokens) continue;
      acc[t][p.id] += 1;
    }
  }
  index.avgdl = static_cast<double>(total_len) / static_cast<double>(index.num_docs);
  for (auto& [token, docs] : acc) {
    auto& list = index.postings[token];
    list.reserve(docs.size());
    for (auto& [pid, tf] : docs) list.push_back(Posting{pid, tf});
  }
  return index;
}

std::vector<ScoredDoc> bm25_search(const InvertedIndex& index, const TokenizedText& query,
                                   std::size_t k, double k1, double b) {
  check(k >= 1, Errc::invalid, "bm25_search: k must be >= 1");
  std::unordered_map<DocId, double> scores;
  const auto n = static_cast<double>(index.num_docs);
  for (TokenId t : query) {
    auto it = index.postings.find(t);
    if (it == index.postings.end()) continue;
    const auto df = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (const Posting& post : it->second) {
      const double tf = post.term_frequency;
      const double dl = index.doc_len.at(post.passage_id);
      const double norm = k1 * (1.0 - b + b * dl / index.avgdl);
      scores[post.passage_id] += idf * tf * (k1 + 1.0) / (tf + norm);
    }
  }
  std::vector<ScoredDoc> ranked;
  ranked.reserve(scores.size());
  for (auto& [pid, score] : scores) {
    if (score > 0.0) ranked.push_back(ScoredDoc{pid, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredDoc& a, const ScoredDoc& b2) {
    if (a.score != b2.score) return a.score > b2.score;
    return a.passage_id < b2.passage_id;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

void InvertedIndex::save(const std::string& path) const {
  auto out = open_out(path, /*binary=*/true);
  out.write(kIndexMagic, 4);
  write_u32(out, kIndexVersion);
  write_i64(out, num_docs);
  write_i64(out, static_cast<std::int64_t>(doc_len.size()));
  std::vector<DocId> doc_ids;
  doc_ids.reserve(doc_len.size());
  for (auto& [pid, len] : doc_len) doc_ids.push_back(pid);
  std::sort(doc_ids.begin(), doc_ids.end());
  for (DocId pid : doc_ids) {
    write_i64(out, pid);
    write_u32(out, static_cast<std::uint32_t>(doc_len.at(pid)));
  }
  std::vector<TokenId> terms;
  terms.reserve(postings.size());
  for (auto& [t, list] : postings) terms.push_back(t);
  std::sort(terms.begin(), terms.end());
  write_i64(out, static_cast<std::int64_t>(terms.size()));
  for (TokenId t : terms) {
    const auto& list = postings.at(t);
    write_u32(out, static_cast<std::uint32_t>(t));
    write_i64(out, static_cast<std::int64_t>(list.size()));
    for (const Posting& p : list) {
      write_i64(out, p.passage_id);
      write_u32(out, static_cast<std::uint32_t>(p.term_frequency));
    }
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  auto in = open_in(path, /*binary=*/true);
  char magic[4];
  in.read(magic, 4);
  check(in.gcount() == 4 && std::equal(magic, magic + 4, kIndexMagic), Errc::state,
        "bad magic in inverted index file: " + path);
  check(read_u32(in, "index version") == kIndexVersion, Errc::state,
        "unsupported inverted index version in " + path);
  InvertedIndex index;
  index.num_docs = read_i64(in, "num docs");
  auto n_docs = read_i64(in, "doc length count");
  std::int64_t total_len = 0;
  for (std::int64_t i = 0; i < n_docs; ++i) {
    DocId pid = read_i64(in, "doc id");
    auto len = static_cast<std::int32_t>(read_u32(in, "doc length"));
    index.doc_len[pid] = len;
    total_len += len;
  }
  index.avgdl = n_docs > 0 ? static_cast<double>(total_len) / static_cast<double>(n_docs) : 0.0;
  auto n_terms = read_i64(in, "term count");
  for (std::int64_t i = 0; i < n_terms; ++i) {
    auto t = static_cast<TokenId>(read_u32(in, "term id"));
    auto n_postings = read_i64(in, "postings length");
    auto& list = index.postings[t];
    list.reserve(static_cast<std::size_t>(n_postings));
    for (std::int64_t j = 0; j < n_postings; ++j) {
      Posting p;
      p.passage_id = read_i64(in, "posting doc id");
      p.term_frequency = static_cast<std::int32_t>(read_u32(in, "posting tf"));
      list.push_back(p);
    }
  }
  return index;
}

}  // namespace nstr
