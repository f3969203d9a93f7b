#include <doctest.h>

#include <map>
#include <set>

#include "querygen.hpp"
#include "test_util.hpp"

using namespace nstr;

namespace {

PassageCollection numbered_passages(int n, const std::string& stem) {
  PassageCollection passages;
  for (int i = 0; i < n; ++i) {
    passages.passages.push_back(
        {static_cast<DocId>(i), stem + " number " + std::to_string(i) + " text body"});
  }
  passages.rebuild_lookup();
  return passages;
}

}  // namespace

TEST_SUITE("querygen") {

TEST_CASE("generate_synthetic yields the requested pairs with fresh ids") {
  auto passages = numbered_passages(10, "passage");
  auto sampler = make_span_sampler(2, 4);
  auto pairs = generate_synthetic(passages, sampler, 1, 42);
  REQUIRE(pairs.size() == 10);
  std::set<DocId> origins;
  for (const auto& p : pairs) {
    CHECK(p.query.id >= kSyntheticIdBase);
    CHECK(!p.query.text.empty());
    CHECK(passages.contains(p.originating_passage_id));
    origins.insert(p.originating_passage_id);
  }
  CHECK(origins.size() == 10);

  auto again = generate_synthetic(passages, sampler, 1, 42);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].query.text == again[i].query.text);
    CHECK(pairs[i].query.id == again[i].query.id);
  }

  auto doubled = generate_synthetic(passages, sampler, 2, 42);
  CHECK(doubled.size() == 20);
  std::map<DocId, int> per_origin;
  for (const auto& p : doubled) ++per_origin[p.originating_passage_id];
  for (const auto& [pid, count] : per_origin) CHECK(count == 2);

  PassageCollection empty;
  CHECK_THROWS_AS(generate_synthetic(empty, sampler, 1, 42), Error);
  CHECK_THROWS_AS(generate_synthetic(passages, sampler, 0, 42), Error);
}

TEST_CASE("generation is order independent across passages") {
  auto passages = numbered_passages(6, "walrus");
  PassageCollection reversed;
  reversed.passages.assign(passages.passages.rbegin(), passages.passages.rend());
  reversed.rebuild_lookup();
  auto sampler = make_span_sampler(2, 4);
  auto a = generate_synthetic(passages, sampler, 1, 9);
  auto b = generate_synthetic(reversed, sampler, 1, 9);
  std::map<DocId, std::string> texts_a, texts_b;
  for (const auto& p : a) texts_a[p.originating_passage_id] = p.query.text;
  for (const auto& p : b) texts_b[p.originating_passage_id] = p.query.text;
  CHECK(texts_a == texts_b);
}

TEST_CASE("span sampler clamps to the passage and draws from its tokens") {
  Rng rng(3, "span");
  Passage single{0, "lonely"};
  CHECK(span_sampler_generate(single, 3, 6, rng) == "lonely");

  std::string long_text;
  for (int i = 0; i < 100; ++i) long_text += "w" + std::to_string(i) + " ";
  Passage big{1, long_text};
  for (int trial = 0; trial < 40; ++trial) {
    Rng r(static_cast<std::uint64_t>(trial), "span-range");
    auto text = span_sampler_generate(big, 3, 6, r);
    auto words = normalize_words(text);
    CHECK(words.size() >= 3);
    CHECK(words.size() <= 6);
    // containment: every query word occurs in the passage
    auto passage_words = normalize_words(big.text);
    std::set<std::string> vocab_set(passage_words.begin(), passage_words.end());
    for (const auto& w : words) CHECK(vocab_set.count(w) == 1);
  }

  Rng r2(5, "span-repro");
  auto once = span_sampler_generate(big, 3, 6, r2);
  Rng r3(5, "span-repro");
  CHECK(once == span_sampler_generate(big, 3, 6, r3));
}

TEST_CASE("load_external_queries validates passage references") {
  testutil::TempDir dir("querygen");
  auto passages = numbered_passages(5, "doc");
  auto good = testutil::write_file(dir, "ext.tsv",
                                   "what is doc zero\t0\nfind doc two\t2\nshow doc four\t4\n");
  auto pairs = load_external_queries(good, passages);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].query.id == kSyntheticIdBase);
  CHECK(pairs[1].originating_passage_id == 2);

  auto bad = testutil::write_file(dir, "bad.tsv", "query text\t0\nquery text\t99\n");
  CHECK_THROWS_WITH_AS(load_external_queries(bad, passages), doctest::Contains("line 2"), Error);

  auto empty = testutil::write_file(dir, "empty.tsv", "");
  CHECK(load_external_queries(empty, passages).empty());
}

TEST_CASE("synthetic pairs round-trip through TSV") {
  testutil::TempDir dir("querygen");
  auto passages = numbered_passages(4, "pod");
  auto pairs = generate_synthetic(passages, make_span_sampler(2, 3), 1, 7);
  save_synthetic(pairs, dir.file("syn.tsv"));
  auto loaded = load_synthetic(dir.file("syn.tsv"), passages);
  REQUIRE(loaded.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(loaded[i].query.id == pairs[i].query.id);
    CHECK(loaded[i].query.text == pairs[i].query.text);
    CHECK(loaded[i].originating_passage_id == pairs[i].originating_passage_id);
  }
}

}  // TEST_SUITE
