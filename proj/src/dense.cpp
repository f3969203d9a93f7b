#include "dense.hpp"

#include <algorithm>

#include "io_util.hpp"
#include "threading.hpp"

namespace nstr {

namespace {
constexpr char kMatrixMagic[4] = {'N', 'S', 'T', 'E'};
constexpr std::uint32_t kMatrixVersion = 1;
}  // namespace

DenseIndex build_dense_index(const EncoderParams& params, const PassageCollection& passages,
                             const Vocabulary& vocab, std::size_t max_passage_len,
                             double positional_scale) {
  check(passages.size() > 0, Errc::invalid, "build_dense_index: empty collection");
  DenseIndex index;
  index.dim = params.dim;
  index.ids.resize(passages.size());
  index.embeddings.resize(passages.size() * std::size_t(params.dim));
  parallel_for(passages.size(), [&](std::size_t i) {
    const Passage& p = passages.passages[i];
    TokenizedText tokens;
    try {
      tokens = tokenize(p.text, vocab, max_passage_len);
    } catch (const Error& e) {
      fail(Errc::invalid, "build_dense_index: passage " + std::to_string(p.id) + ": " + e.what());
    }
    EmbeddingVector vec = encode(params, tokens, positional_scale);
    index.ids[i] = p.id;
    float* row = index.embeddings.data() + i * std::size_t(params.dim);
    for (std::int32_t d = 0; d < params.dim; ++d) row[d] = static_cast<float>(vec[d]);
  });
  return index;
}

std::vector<ScoredDoc> dense_search(const DenseIndex& index, const EmbeddingVector& q_vec,
                                    std::size_t k) {
  check(k >= 1, Errc::invalid, "dense_search: k must be >= 1");
  check(q_vec.size() == static_cast<std::size_t>(index.dim), Errc::invalid,
        "dense_search: dimension mismatch");
  std::vector<ScoredDoc> scored(index.ids.size());
  for (std::size_t i = 0; i < index.ids.size(); ++i) {
    const float* row = index.row(i);
    double s = 0.0;
    for (std::size_t d = 0; d < q_vec.size(); ++d) s += q_vec[d] * row[d];
    scored[i] = ScoredDoc{index.ids[i], s};
  }
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  };
  const std::size_t top = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top),
                    scored.end(), better);
  scored.resize(top);
  return scored;
}

NegativePools mine_hard_negatives(const DenseIndex& index, const EncoderParams& params,
                                  const std::vector<std::pair<TokenizedText, DocId>>& pairs,
                                  const std::vector<QueryId>& query_ids, std::size_t pool_size,
                                  double positional_scale) {
  check(pool_size >= 1, Errc::invalid, "mine_hard_negatives: pool_size must be >= 1");
  check(index.ids.size() >= 2, Errc::invalid,
        "mine_hard_negatives: corpus must contain at least 2 passages");
  check(pairs.size() == query_ids.size(), Errc::invalid,
        "mine_hard_negatives: pair/id count mismatch");
  std::vector<std::vector<DocId>> mined(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [query_tokens, gold_id] = pairs[i];
    EmbeddingVector q_vec = encode(params, query_tokens, positional_scale);
    auto ranked = dense_search(index, q_vec, pool_size + 1);
    auto& pool = mined[i];
    pool.reserve(pool_size);
    for (const ScoredDoc& doc : ranked) {
      if (doc.passage_id == gold_id) continue;
      if (pool.size() == pool_size) break;
      pool.push_back(doc.passage_id);
    }
  });
  NegativePools pools;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pools.by_query[query_ids[i]] = std::move(mined[i]);
  }
  return pools;
}

void save_pools(const NegativePools& pools, const std::string& path) {
  std::vector<QueryId> qids;
  qids.reserve(pools.by_query.size());
  for (const auto& [qid, pool] : pools.by_query) qids.push_back(qid);
  std::sort(qids.begin(), qids.end());
  auto out = open_out(path);
  for (QueryId qid : qids) {
    out << qid << '\t';
    const auto& pool = pools.by_query.at(qid);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i > 0) out << ',';
      out << pool[i];
    }
    out << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

NegativePools load_pools(const std::string& path) {
  NegativePools pools;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    std::size_t tab = line.find('\t');
    check(tab != std::string_view::npos, Errc::parse,
          "pools: missing TAB at line " + std::to_string(line_no));
    QueryId qid = parse_i64(line.substr(0, tab), "pool query id", line_no);
    std::vector<DocId> pool;
    std::string_view rest = line.substr(tab + 1);
    if (!rest.empty()) {
      for (const auto& field : split(rest, ',')) {
        pool.push_back(parse_i64(field, "pool passage id", line_no));
      }
    }
    check(pools.by_query.emplace(qid, std::move(pool)).second, Errc::parse,
          "pools: duplicate query id at line " + std::to_string(line_no));
  });
  return pools;
}

void DenseIndex::save(const std::string& path) const {
  auto out = open_out(path, /*binary=*/true);
  out.write(kMatrixMagic, 4);
  write_u32(out, kMatrixVersion);
  write_u32(out, static_cast<std::uint32_t>(ids.size()));
  write_u32(out, static_cast<std::uint32_t>(dim));
  for (DocId id : ids) write_i64(out, id);
  for (float v : embeddings) write_f32(out, v);
  check(out.good(), Errc::io, "write failed: " + path);
}

DenseIndex DenseIndex::load(const std::string& path) {
  auto in = open_in(path, /*binary=*/true);
  char magic[4];
  in.read(magic, 4);
  check(in.gcount() == 4 && std::equal(magic, magic + 4, kMatrixMagic), Errc::state,
        "bad magic in embedding matrix file: " + path);
  check(read_u32(in, "matrix version") == kMatrixVersion, Errc::state,
        "unsupported embedding matrix version in " + path);
  DenseIndex index;
  const auto rows = read_u32(in, "row count");
  index.dim = static_cast<std::int32_t>(read_u32(in, "dim"));
  index.ids.resize(rows);
  for (auto& id : index.ids) id = read_i64(in, "passage id");
  index.embeddings.resize(std::size_t(rows) * static_cast<std::size_t>(index.dim));
  for (auto& v : index.embeddings) v = read_f32(in, "embedding");
  in.peek();
  check(in.eof(), Errc::state, "trailing bytes in embedding matrix file: " + path);
  return index;
}

}  // namespace nstr
