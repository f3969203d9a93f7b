#include <doctest.h>

#include <algorithm>

#include "corpus.hpp"
#include "test_util.hpp"

using namespace nstr;

TEST_SUITE("corpus") {

TEST_CASE("load_passages parses id-tab-text lines in order") {
  testutil::TempDir dir("corpus");
  auto path = testutil::write_file(dir, "p.tsv", "0\thello world\n1\tfoo\n");
  auto passages = load_passages(path);
  REQUIRE(passages.size() == 2);
  CHECK(passages.passages[0].id == 0);
  CHECK(passages.passages[0].text == "hello world");
  CHECK(passages.passages[1].id == 1);
  CHECK(passages.contains(0));
  CHECK(passages.contains(1));
}

TEST_CASE("load_passages accepts an empty file") {
  testutil::TempDir dir("corpus");
  auto path = testutil::write_file(dir, "p.tsv", "");
  CHECK(load_passages(path).size() == 0);
}

TEST_CASE("load_passages rejects malformed lines with the line number") {
  testutil::TempDir dir("corpus");
  auto bad_id = testutil::write_file(dir, "a.tsv", "x\ttext\n");
  CHECK_THROWS_WITH_AS(load_passages(bad_id), doctest::Contains("line 1"), Error);
  auto no_tab = testutil::write_file(dir, "b.tsv", "5 text\n");
  CHECK_THROWS_AS(load_passages(no_tab), Error);
  auto dup = testutil::write_file(dir, "c.tsv", "1\ta\n1\tb\n");
  CHECK_THROWS_WITH_AS(load_passages(dup), doctest::Contains("duplicate"), Error);
  auto blank_text = testutil::write_file(dir, "d.tsv", "1\t   \n");
  CHECK_THROWS_AS(load_passages(blank_text), Error);
}

TEST_CASE("load_queries splits answers on pipes and joins qrels") {
  testutil::TempDir dir("corpus");
  auto q_path = testutil::write_file(dir, "q.tsv",
                                     "7\twho wrote hamlet\tshakespeare|william shakespeare\n"
                                     "8\tplain query\n");
  auto r_path = testutil::write_file(dir, "r.tsv", "7\t0\t12\t1\n8\t0\t3\t0\n");
  auto [queries, qrels] = load_queries(q_path, r_path);
  REQUIRE(queries.size() == 2);
  CHECK(queries.at(7).answers.size() == 2);
  CHECK(queries.at(7).answers[1] == "william shakespeare");
  CHECK(queries.at(8).answers.empty());
  REQUIRE(qrels.rows.size() == 2);
  CHECK(qrels.rows[0].query_id == 7);
  CHECK(qrels.rows[0].passage_id == 12);
  CHECK(qrels.rows[0].relevance == 1);
  CHECK(qrels.knows_query(8));
}

TEST_CASE("qrels referencing an unknown query id fail") {
  testutil::TempDir dir("corpus");
  auto q_path = testutil::write_file(dir, "q.tsv", "1\ta query\n");
  auto r_path = testutil::write_file(dir, "r.tsv", "99\t0\t1\t1\n");
  CHECK_THROWS_WITH_AS(load_queries(q_path, r_path), doctest::Contains("unknown query id 99"),
                       Error);
}

TEST_CASE("build_vocab assigns ids by frequency then lexicographic order") {
  PassageCollection passages;
  passages.passages.push_back({0, "a a b"});
  passages.rebuild_lookup();
  QueryCollection none;

  auto vocab = build_vocab(passages, none, 1);
  CHECK(vocab.size() == 5);  // 3 reserved + a + b
  CHECK(vocab.id_of("a") == 3);
  CHECK(vocab.id_of("b") == 4);

  auto strict = build_vocab(passages, none, 2);
  CHECK(strict.size() == 4);
  CHECK(strict.id_of("a") == 3);
  CHECK(strict.id_of("b") == kUnkId);
}

TEST_CASE("reserved ids are fixed") {
  Vocabulary vocab;
  CHECK(vocab.token_of(0) == "[PAD]");
  CHECK(vocab.token_of(1) == "[UNK]");
  CHECK(vocab.token_of(2) == "[MASK]");
  CHECK(vocab.size() == 3);
}

TEST_CASE("build_vocab is order independent") {
  PassageCollection a, b;
  a.passages = {{0, "red fox"}, {1, "red red bird"}, {2, "slow owl owl"}};
  b.passages = {{2, "slow owl owl"}, {0, "red fox"}, {1, "red red bird"}};
  a.rebuild_lookup();
  b.rebuild_lookup();
  QueryCollection none;
  auto va = build_vocab(a, none, 1);
  auto vb = build_vocab(b, none, 1);
  REQUIRE(va.size() == vb.size());
  for (TokenId t = 0; t < static_cast<TokenId>(va.size()); ++t) {
    CHECK(va.token_of(t) == vb.token_of(t));
  }
}

TEST_CASE("build_vocab rejects an empty corpus") {
  PassageCollection passages;
  QueryCollection none;
  CHECK_THROWS_AS(build_vocab(passages, none, 1), Error);
}

TEST_CASE("tokenize lowercases, strips punctuation and maps unknowns to UNK") {
  PassageCollection passages;
  passages.passages = {{0, "hello world"}};
  passages.rebuild_lookup();
  QueryCollection none;
  auto vocab = build_vocab(passages, none, 1);

  CHECK(tokenize("Hello, World", vocab, 16) == TokenizedText{3, 4});
  CHECK(tokenize("zzz", vocab, 16) == TokenizedText{kUnkId});
  CHECK_THROWS_AS(tokenize("!!! ...", vocab, 16), Error);
  CHECK_THROWS_AS(tokenize("hello", vocab, 0), Error);
}

TEST_CASE("tokenize truncates to max_len") {
  PassageCollection passages;
  passages.passages = {{0, "w"}};
  passages.rebuild_lookup();
  QueryCollection none;
  auto vocab = build_vocab(passages, none, 1);
  std::string text;
  for (int i = 0; i < 50; ++i) text += "w ";
  auto tokens = tokenize(text, vocab, 32);
  CHECK(tokens.size() == 32);
  CHECK(std::all_of(tokens.begin(), tokens.end(), [](TokenId t) { return t == 3; }));
}

TEST_CASE("tokenize handles unicode whitespace and multibyte text") {
  PassageCollection passages;
  passages.passages = {{0, "caf\xc3\xa9 bar"}};
  passages.rebuild_lookup();
  QueryCollection none;
  auto vocab = build_vocab(passages, none, 1);
  // U+00A0 no-break space separates; accented bytes survive untouched.
  auto tokens = tokenize("caf\xc3\xa9\xc2\xa0" "bar", vocab, 8);
  CHECK(tokens == TokenizedText{vocab.id_of("caf\xc3\xa9"), vocab.id_of("bar")});
}

TEST_CASE("collections round-trip through their TSV formats") {
  testutil::TempDir dir("corpus");
  PassageCollection passages;
  passages.passages = {{0, "first text"}, {7, "second text"}};
  passages.rebuild_lookup();
  save_passages(passages, dir.file("p.tsv"));
  auto passages2 = load_passages(dir.file("p.tsv"));
  REQUIRE(passages2.size() == 2);
  CHECK(passages2.at(7).text == "second text");

  QueryCollection queries;
  queries.queries = {{3, "what is it", {"an answer", "another"}}, {4, "no answers", {}}};
  queries.rebuild_lookup();
  save_queries(queries, dir.file("q.tsv"));
  auto queries2 = load_queries(dir.file("q.tsv"), std::nullopt).first;
  REQUIRE(queries2.size() == 2);
  CHECK(queries2.at(3).answers == std::vector<std::string>{"an answer", "another"});
  CHECK(queries2.at(4).answers.empty());

  QRelSet qrels;
  qrels.rows = {{3, 0, 1}, {4, 7, 2}};
  qrels.rebuild_lookup();
  save_qrels(qrels, dir.file("r.tsv"));
  auto qrels2 = load_qrels(dir.file("r.tsv"), queries2);
  REQUIRE(qrels2.rows.size() == 2);
  CHECK(qrels2.rows[1].relevance == 2);
}

TEST_CASE("vocabulary round-trips through TSV sorted by id") {
  testutil::TempDir dir("corpus");
  PassageCollection passages;
  passages.passages = {{0, "alpha beta beta gamma"}};
  passages.rebuild_lookup();
  QueryCollection none;
  auto vocab = build_vocab(passages, none, 1);
  vocab.save(dir.file("v.tsv"));
  auto vocab2 = Vocabulary::load(dir.file("v.tsv"));
  REQUIRE(vocab2.size() == vocab.size());
  for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t) {
    CHECK(vocab2.token_of(t) == vocab.token_of(t));
  }
}

}  // TEST_SUITE
