#include <doctest.h>

#include <set>

#include "bench.hpp"
#include "corpus.hpp"
#include "test_util.hpp"

using namespace nstr;

TEST_SUITE("bench") {

TEST_CASE("generates exactly the requested counts") {
  testutil::TempDir dir("bench");
  auto paths = generate_benchmark(5, 120, 30, 20, dir.str());
  auto passages = load_passages(paths.passages);
  CHECK(passages.size() == 120);
  auto [train_q, train_r] = load_queries(paths.train_queries, paths.train_qrels);
  CHECK(train_q.size() == 30);
  CHECK(train_r.rows.size() == 30);
  auto [eval_q, eval_r] = load_queries(paths.eval_queries, paths.eval_qrels);
  CHECK(eval_q.size() == 20);
  CHECK(eval_r.rows.size() == 20);

  // train and eval query ids are disjoint, all passages resolve
  std::set<QueryId> train_ids, eval_ids;
  for (const auto& q : train_q.queries) train_ids.insert(q.id);
  for (const auto& q : eval_q.queries) eval_ids.insert(q.id);
  for (QueryId id : eval_ids) CHECK(train_ids.count(id) == 0);
  std::set<DocId> used;
  for (const auto& r : train_r.rows) {
    CHECK(passages.contains(r.passage_id));
    used.insert(r.passage_id);
  }
  for (const auto& r : eval_r.rows) {
    CHECK(passages.contains(r.passage_id));
    CHECK(used.count(r.passage_id) == 0);  // gold passages are not shared
  }
}

TEST_CASE("every gold query's relevant passage contains its answer string") {
  testutil::TempDir dir("bench");
  auto paths = generate_benchmark(9, 200, 40, 25, dir.str());
  auto passages = load_passages(paths.passages);
  for (const auto& which : {std::make_pair(paths.train_queries, paths.train_qrels),
                            std::make_pair(paths.eval_queries, paths.eval_qrels)}) {
    auto [queries, qrels] = load_queries(which.first, which.second);
    for (const auto& q : queries.queries) {
      REQUIRE(q.answers.size() == 1);
      auto rows = qrels.judgments(q.id);
      REQUIRE(rows.size() == 1);
      const auto& text = passages.at(rows[0].passage_id).text;
      CHECK(text.find(q.answers[0]) != std::string::npos);
    }
  }
}

TEST_CASE("same seed produces identical files, different seed differs") {
  testutil::TempDir a("bench"), b("bench"), c("bench");
  auto pa = generate_benchmark(42, 80, 10, 10, a.str());
  auto pb = generate_benchmark(42, 80, 10, 10, b.str());
  auto pc = generate_benchmark(43, 80, 10, 10, c.str());
  CHECK(testutil::slurp(pa.passages) == testutil::slurp(pb.passages));
  CHECK(testutil::slurp(pa.train_queries) == testutil::slurp(pb.train_queries));
  CHECK(testutil::slurp(pa.eval_qrels) == testutil::slurp(pb.eval_qrels));
  CHECK(testutil::slurp(pa.passages) != testutil::slurp(pc.passages));
}

TEST_CASE("invalid counts are rejected") {
  testutil::TempDir dir("bench");
  CHECK_THROWS_AS(generate_benchmark(1, 10, 8, 8, dir.str()), Error);
  CHECK_THROWS_AS(generate_benchmark(1, 0, 1, 1, dir.str()), Error);
  CHECK_THROWS_AS(generate_benchmark(1, 10, 0, 1, dir.str()), Error);
}

TEST_CASE("passages tokenize within the default caps") {
  testutil::TempDir dir("bench");
  auto paths = generate_benchmark(3, 64, 8, 8, dir.str());
  auto passages = load_passages(paths.passages);
  QueryCollection none;
  auto vocab = build_vocab(passages, none, 1);
  for (const auto& p : passages.passages) {
    auto tokens = tokenize(p.text, vocab, 128);
    CHECK(tokens.size() >= 6);
    CHECK(tokens.size() <= 128);
  }
}

}  // TEST_SUITE
