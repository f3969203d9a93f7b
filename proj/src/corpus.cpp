#include "corpus.hpp"

#include <algorithm>
#include <map>

#include "io_util.hpp"

namespace nstr {

namespace {

constexpr const char* kPadToken = "[PAD]";
constexpr const char* kUnkToken = "[UNK]";
constexpr const char* kMaskToken = "[MASK]";

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

// Decodes one UTF-8 code point starting at i; advances i past it. Malformed
// bytes decode as U+FFFD one byte at a time.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t remaining = s.size() - i;
  if (c < 0x80) {
    ++i;
    return c;
  }
  auto cont = [&](std::size_t k) {
    return k < remaining && (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
  };
  if ((c & 0xe0) == 0xc0 && cont(1)) {
    char32_t cp = (char32_t(c & 0x1f) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3f);
    i += 2;
    return cp;
  }
  if ((c & 0xf0) == 0xe0 && cont(1) && cont(2)) {
    char32_t cp = (char32_t(c & 0x0f) << 12) |
                  (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3f) << 6) |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3f);
    i += 3;
    return cp;
  }
  if ((c & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (char32_t(c & 0x07) << 18) |
                  (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3f) << 12) |
                  (char32_t(static_cast<unsigned char>(s[i + 2]) & 0x3f) << 6) |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3f);
    i += 4;
    return cp;
  }
  ++i;
  return 0xfffd;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0a:
    case 0x0b:
    case 0x0c:
    case 0x0d:
    case 0x20:
    case 0x85:
    case 0xa0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202f:
    case 0x205f:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

void append_lowered(std::string& out, char32_t cp, std::string_view src, std::size_t from,
                    std::size_t to) {
  if (cp < 0x80) {
    char c = static_cast<char>(cp);
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
  } else {
    out.append(src.substr(from, to - from));
  }
}

}  // namespace

const Passage& PassageCollection::at(DocId id) const {
  auto it = by_id_.find(id);
  check(it != by_id_.end(), Errc::invalid, "unknown passage id " + std::to_string(id));
  return passages[it->second];
}

void PassageCollection::rebuild_lookup() {
  by_id_.clear();
  by_id_.reserve(passages.size());
  for (std::size_t i = 0; i < passages.size(); ++i) {
    auto [it, inserted] = by_id_.emplace(passages[i].id, i);
    check(inserted, Errc::parse, "duplicate passage id " + std::to_string(passages[i].id));
  }
}

const Query& QueryCollection::at(QueryId id) const {
  auto it = by_id_.find(id);
  check(it != by_id_.end(), Errc::invalid, "unknown query id " + std::to_string(id));
  return queries[it->second];
}

void QueryCollection::rebuild_lookup() {
  by_id_.clear();
  by_id_.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto [it, inserted] = by_id_.emplace(queries[i].id, i);
    check(inserted, Errc::parse, "duplicate query id " + std::to_string(queries[i].id));
  }
}

std::vector<QRel> QRelSet::judgments(QueryId qid) const {
  std::vector<QRel> out;
  auto it = by_query_.find(qid);
  if (it == by_query_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t idx : it->second) out.push_back(rows[idx]);
  return out;
}

void QRelSet::rebuild_lookup() {
  by_query_.clear();
  std::map<std::pair<QueryId, DocId>, int> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const QRel& r = rows[i];
    check(r.relevance >= 0, Errc::parse,
          "negative relevance for query " + std::to_string(r.query_id));
    auto key = std::make_pair(r.query_id, r.passage_id);
    check(seen.emplace(key, r.relevance).second, Errc::parse,
          "duplicate qrel (" + std::to_string(r.query_id) + ", " + std::to_string(r.passage_id) +
              ")");
    by_query_[r.query_id].push_back(i);
  }
}

Vocabulary::Vocabulary() {
  add_token(kPadToken);
  add_token(kUnkToken);
  add_token(kMaskToken);
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  check(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), Errc::invalid,
        "token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::add_token(const std::string& token) {
  auto id = static_cast<TokenId>(tokens_.size());
  auto [it, inserted] = ids_.emplace(token, id);
  check(inserted, Errc::invalid, "token already present: " + token);
  tokens_.push_back(token);
}

void Vocabulary::save(const std::string& path) const {
  auto out = open_out(path);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << i << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  Vocabulary vocab;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, '\t');
    check(fields.size() == 2, Errc::parse,
          "vocabulary: expected token<TAB>id at line " + std::to_string(line_no));
    auto id = parse_i64(fields[1], "vocabulary id", line_no);
    if (id < kReservedTokens) {
      const char* expected = id == 0 ? kPadToken : (id == 1 ? kUnkToken : kMaskToken);
      check(fields[0] == expected, Errc::parse,
            "vocabulary: reserved id " + std::to_string(id) + " must map to " + expected);
      return;
    }
    check(id == static_cast<std::int64_t>(vocab.size()), Errc::parse,
          "vocabulary: ids must be contiguous, got " + fields[1] + " at line " +
              std::to_string(line_no));
    vocab.add_token(fields[0]);
  });
  return vocab;
}

PassageCollection load_passages(const std::string& path) {
  PassageCollection collection;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    std::size_t tab = line.find('\t');
    check(tab != std::string_view::npos, Errc::parse,
          "passages: missing TAB at line " + std::to_string(line_no));
    Passage p;
    p.id = parse_i64(line.substr(0, tab), "passage id", line_no);
    check(p.id >= 0, Errc::parse, "passages: negative id at line " + std::to_string(line_no));
    p.text = std::string(line.substr(tab + 1));
    check(!trimmed(p.text).empty(), Errc::parse,
          "passages: empty text at line " + std::to_string(line_no));
    collection.passages.push_back(std::move(p));
  });
  collection.rebuild_lookup();
  return collection;
}

std::pair<QueryCollection, QRelSet> load_queries(const std::string& queries_path,
                                                 const std::optional<std::string>& qrels_path) {
  QueryCollection queries;
  for_each_line(queries_path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, '\t');
    check(fields.size() == 2 || fields.size() == 3, Errc::parse,
          "queries: expected id<TAB>text[<TAB>answers] at line " + std::to_string(line_no));
    Query q;
    q.id = parse_i64(fields[0], "query id", line_no);
    check(q.id >= 0, Errc::parse, "queries: negative id at line " + std::to_string(line_no));
    q.text = fields[1];
    check(!trimmed(q.text).empty(), Errc::parse,
          "queries: empty text at line " + std::to_string(line_no));
    if (fields.size() == 3 && !fields[2].empty()) {
      q.answers = split(fields[2], '|');
    }
    queries.queries.push_back(std::move(q));
  });
  queries.rebuild_lookup();

  QRelSet qrels;
  if (qrels_path.has_value()) qrels = load_qrels(*qrels_path, queries);
  return {std::move(queries), std::move(qrels)};
}

QRelSet load_qrels(const std::string& path, const QueryCollection& queries) {
  QRelSet qrels;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, '\t');
    check(fields.size() == 4, Errc::parse,
          "qrels: expected qid<TAB>0<TAB>pid<TAB>rel at line " + std::to_string(line_no));
    QRel r;
    r.query_id = parse_i64(fields[0], "qrel query id", line_no);
    r.passage_id = parse_i64(fields[2], "qrel passage id", line_no);
    r.relevance = static_cast<int>(parse_i64(fields[3], "qrel relevance", line_no));
    check(queries.contains(r.query_id), Errc::parse,
          "qrels: unknown query id " + std::to_string(r.query_id) + " at line " +
              std::to_string(line_no));
    qrels.rows.push_back(r);
  });
  qrels.rebuild_lookup();
  return qrels;
}

void save_passages(const PassageCollection& passages, const std::string& path) {
  auto out = open_out(path);
  for (const auto& p : passages.passages) out << p.id << '\t' << p.text << '\n';
  check(out.good(), Errc::io, "write failed: " + path);
}

void save_queries(const QueryCollection& queries, const std::string& path) {
  auto out = open_out(path);
  for (const auto& q : queries.queries) {
    out << q.id << '\t' << q.text;
    if (!q.answers.empty()) {
      out << '\t';
      for (std::size_t i = 0; i < q.answers.size(); ++i) {
        if (i > 0) out << '|';
        out << q.answers[i];
      }
    }
    out << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

void save_qrels(const QRelSet& qrels, const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : qrels.rows) {
    out << r.query_id << "\t0\t" << r.passage_id << '\t' << r.relevance << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  std::size_t i = 0;
  auto flush = [&]() {
    std::size_t b = 0, e = current.size();
    while (b < e && is_ascii_punct(current[b])) ++b;
    while (e > b && is_ascii_punct(current[e - 1])) --e;
    if (e > b) words.emplace_back(current.substr(b, e - b));
    current.clear();
  };
  while (i < text.size()) {
    std::size_t start = i;
    char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      flush();
    } else {
      append_lowered(current, cp, text, start, i);
    }
  }
  flush();
  return words;
}

Vocabulary build_vocab(const PassageCollection& passages, const QueryCollection& queries,
                       int min_frequency) {
  check(passages.size() + queries.size() > 0, Errc::invalid, "build_vocab: empty corpus");
  check(min_frequency >= 1, Errc::invalid, "build_vocab: min_frequency must be >= 1");
  std::unordered_map<std::string, std::int64_t> freq;
  auto count = [&](std::string_view text) {
    for (auto& w : normalize_words(text)) ++freq[w];
  };
  for (const auto& p : passages.passages) count(p.text);
  for (const auto& q : queries.queries) count(q.text);

  std::vector<std::pair<std::string, std::int64_t>> entries;
  entries.reserve(freq.size());
  for (auto& [token, f] : freq) {
    if (f >= min_frequency) entries.emplace_back(token, f);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.set_min_frequency(min_frequency);
  for (auto& [token, f] : entries) vocab.add_token(token);
  return vocab;
}

TokenizedText tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  check(max_len >= 1, Errc::invalid, "tokenize: max_len must be >= 1");
  auto words = normalize_words(text);
  check(!words.empty(), Errc::invalid,
        "tokenize: text empty after tokenization: '" + std::string(text) + "'");
  TokenizedText ids;
  ids.reserve(std::min(words.size(), max_len));
  for (const auto& w : words) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.id_of(w));
  }
  return ids;
}

}  // namespace nstr
