#include "querygen.hpp"

#include <algorithm>

#include "io_util.hpp"

namespace nstr {

std::string span_sampler_generate(const Passage& passage, std::size_t span_min,
                                  std::size_t span_max, Rng& rng) {
  check(span_min >= 1 && span_min <= span_max, Errc::invalid,
        "span sampler: invalid span length range");
  auto words = normalize_words(passage.text);
  check(!words.empty(), Errc::invalid,
        "span sampler: passage " + std::to_string(passage.id) + " has no tokens");

  std::size_t len = span_min + static_cast<std::size_t>(rng.below(span_max - span_min + 1));
  len = std::min(len, words.size());
  std::size_t start = static_cast<std::size_t>(rng.below(words.size() - len + 1));

  std::vector<std::string> span(words.begin() + static_cast<std::ptrdiff_t>(start),
                                words.begin() + static_cast<std::ptrdiff_t>(start + len));
  std::size_t n_drop = static_cast<std::size_t>(0.2 * static_cast<double>(span.size()));
  if (n_drop >= span.size()) n_drop = span.size() - 1;
  if (n_drop > 0) {
    auto drop = rng.sample_indices(span.size(), n_drop);
    std::sort(drop.begin(), drop.end());
    std::vector<std::string> kept;
    kept.reserve(span.size() - n_drop);
    std::size_t next = 0;
    for (std::size_t i = 0; i < span.size(); ++i) {
      if (next < drop.size() && drop[next] == i) {
        ++next;
        continue;
      }
      kept.push_back(std::move(span[i]));
    }
    span = std::move(kept);
  }
  std::string text;
  for (std::size_t i = 0; i < span.size(); ++i) {
    if (i > 0) text += ' ';
    text += span[i];
  }
  return text;
}

QueryGenerator make_span_sampler(std::size_t span_min, std::size_t span_max) {
  return [span_min, span_max](const Passage& p, Rng& rng) {
    return span_sampler_generate(p, span_min, span_max, rng);
  };
}

std::vector<SyntheticPair> generate_synthetic(const PassageCollection& passages,
                                              const QueryGenerator& generator,
                                              int queries_per_passage, std::uint64_t seed) {
  check(passages.size() > 0, Errc::invalid, "generate_synthetic: empty collection");
  check(queries_per_passage >= 1, Errc::invalid,
        "generate_synthetic: queries_per_passage must be >= 1");
  std::vector<SyntheticPair> pairs;
  pairs.reserve(passages.size() * static_cast<std::size_t>(queries_per_passage));
  QueryId next_id = kSyntheticIdBase;
  for (const Passage& p : passages.passages) {
    Rng rng(seed, "querygen-" + std::to_string(p.id));
    for (int j = 0; j < queries_per_passage; ++j) {
      SyntheticPair pair;
      pair.query.id = next_id++;
      pair.query.text = generator(p, rng);
      check(!pair.query.text.empty(), Errc::state,
            "query generator produced empty text for passage " + std::to_string(p.id));
      pair.originating_passage_id = p.id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::vector<SyntheticPair> load_external_queries(const std::string& path,
                                                 const PassageCollection& passages) {
  std::vector<SyntheticPair> pairs;
  QueryId next_id = kSyntheticIdBase;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, '\t');
    check(fields.size() == 2, Errc::parse,
          "external queries: expected query_text<TAB>passage_id at line " +
              std::to_string(line_no));
    check(!fields[0].empty(), Errc::parse,
          "external queries: empty query text at line " + std::to_string(line_no));
    DocId pid = parse_i64(fields[1], "external query passage id", line_no);
    check(passages.contains(pid), Errc::parse,
          "external queries: unknown passage id " + std::to_string(pid) + " at line " +
              std::to_string(line_no));
    SyntheticPair pair;
    pair.query.id = next_id++;
    pair.query.text = fields[0];
    pair.originating_passage_id = pid;
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

void save_synthetic(const std::vector<SyntheticPair>& pairs, const std::string& path) {
  auto out = open_out(path);
  for (const auto& pair : pairs) {
    out << pair.query.id << '\t' << pair.query.text << '\t' << pair.originating_passage_id
        << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

std::vector<SyntheticPair> load_synthetic(const std::string& path,
                                          const PassageCollection& passages) {
  std::vector<SyntheticPair> pairs;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, '\t');
    check(fields.size() == 3, Errc::parse,
          "synthetic pairs: expected id<TAB>text<TAB>passage_id at line " +
              std::to_string(line_no));
    SyntheticPair pair;
    pair.query.id = parse_i64(fields[0], "synthetic query id", line_no);
    pair.query.text = fields[1];
    check(!pair.query.text.empty(), Errc::parse,
          "synthetic pairs: empty query text at line " + std::to_string(line_no));
    pair.originating_passage_id = parse_i64(fields[2], "synthetic passage id", line_no);
    check(passages.contains(pair.originating_passage_id), Errc::parse,
          "synthetic pairs: unknown passage id at line " + std::to_string(line_no));
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

}  // namespace nstr
