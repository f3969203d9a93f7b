#include <doctest.h>

#include <cmath>
#include <cstring>

#include "model.hpp"
#include "test_util.hpp"

using namespace nstr;

TEST_SUITE("model") {

TEST_CASE("init_params is deterministic per seed and respects the bound") {
  auto a = init_params(11, 50, 64);
  auto b = init_params(11, 50, 64);
  CHECK(a.embedding == b.embedding);
  auto c = init_params(12, 50, 64);
  CHECK(a.embedding != c.embedding);

  for (float v : a.embedding) CHECK(std::abs(v) <= 0.125f);
  for (std::int32_t d = 0; d < a.dim; ++d) CHECK(a.row(kPadId)[d] == 0.0f);
  CHECK_THROWS_AS(init_params(1, 50, 0), Error);
}

TEST_CASE("encode averages rows of non-PAD tokens") {
  auto params = init_params(3, 10, 4);
  auto single = encode(params, {5});
  for (int d = 0; d < 4; ++d) CHECK(single[d] == doctest::Approx(params.row(5)[d]));

  CHECK(encode(params, {5, 5}) == encode(params, {5}));

  auto pair = encode(params, {5, 6});
  for (int d = 0; d < 4; ++d) {
    CHECK(pair[d] ==
          doctest::Approx((double(params.row(5)[d]) + double(params.row(6)[d])) / 2.0));
  }

  CHECK_THROWS_AS(encode(params, {}), Error);
  CHECK_THROWS_AS(encode(params, {kPadId, kPadId}), Error);
  // PAD rows are skipped, not averaged in
  CHECK(encode(params, {kPadId, 5}) == encode(params, {5}));
}

TEST_CASE("mean pooling ignores order; positional scale does not") {
  auto params = init_params(9, 10, 8);
  TokenizedText forward{3, 4, 5, 6};
  TokenizedText backward{6, 5, 4, 3};
  auto f = encode(params, forward);
  auto b = encode(params, backward);
  for (int d = 0; d < 8; ++d) CHECK(f[d] == doctest::Approx(b[d]).epsilon(1e-12));
  CHECK(encode(params, forward, 0.5) != encode(params, backward, 0.5));
  CHECK(encode(params, forward, 0.0) == encode(params, forward));
}

TEST_CASE("score_pair is a plain dot product") {
  CHECK(score_pair({0.0, 0.0}, {3.0, -2.0}) == 0.0);
  CHECK(score_pair({1.0, 0.0}, {0.5, 2.0}) == doctest::Approx(0.5));
  EmbeddingVector q{0.3, -1.2, 2.0}, p{1.5, 0.25, -0.75};
  CHECK(score_pair(q, p) == score_pair(p, q));
  CHECK_THROWS_AS(score_pair({1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("score_pair is bilinear in the query") {
  EmbeddingVector q{0.4, -0.9, 1.1}, p{0.2, 0.7, -0.3};
  EmbeddingVector q2 = q;
  for (auto& v : q2) v *= 2.5;
  CHECK(score_pair(q2, p) == doctest::Approx(2.5 * score_pair(q, p)));
}

TEST_CASE("cross_score with zeroed network returns b2") {
  CrossEncoderParams params;
  params.vocab_size = 10;
  params.dim = 4;
  params.hidden = 3;
  params.embedding.assign(40, 0.0f);
  params.w1.assign(16 * 3, 0.0f);
  params.b1.assign(3, 0.0f);
  params.w2.assign(3, 0.0f);
  params.b2 = 0.75f;
  CHECK(cross_score(params, {3, 4}, {5}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(cross_score(params, {}, {5}), Error);
  CHECK_THROWS_AS(cross_score(params, {3}, {}), Error);
}

TEST_CASE("cross_score matches a hand-evaluated forward pass at d=2 h=1") {
  CrossEncoderParams params;
  params.vocab_size = 5;
  params.dim = 2;
  params.hidden = 1;
  params.embedding.assign(10, 0.0f);
  // token 3 -> (1, 2), token 4 -> (3, -1)
  params.embedding[6] = 1.0f;
  params.embedding[7] = 2.0f;
  params.embedding[8] = 3.0f;
  params.embedding[9] = -1.0f;
  params.w1 = {0.1f, -0.2f, 0.3f, 0.05f, -0.4f, 0.25f, 0.15f, -0.1f};  // (4d x h) = 8x1
  params.b1 = {0.2f};
  params.w2 = {1.5f};
  params.b2 = -0.3f;

  // u = (1,2), v = (3,-1), f = [1,2,3,-1,3,-2,2,3]
  // z = 0.2 + 0.1*1 -0.2*2 +0.3*3 +0.05*(-1) -0.4*3 +0.25*(-2) +0.15*2 -0.1*3
  const double z = 0.2 + 0.1 - 0.4 + 0.9 - 0.05 - 1.2 - 0.5 + 0.3 - 0.3;
  const double expected = -0.3 + 1.5 * std::tanh(z);
  CHECK(cross_score(params, {3}, {4}) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(cross_score(params, {3}, {4}) == cross_score(params, {3}, {4}));
}

TEST_CASE("checkpoints round-trip bitwise") {
  testutil::TempDir dir("model");
  auto params = init_params(21, 40, 16);
  save_checkpoint(params, dir.file("e.ckpt"));
  auto loaded = load_checkpoint(dir.file("e.ckpt"));
  CHECK(loaded.vocab_size == params.vocab_size);
  CHECK(loaded.dim == params.dim);
  CHECK(std::memcmp(loaded.embedding.data(), params.embedding.data(),
                    params.embedding.size() * sizeof(float)) == 0);
  CHECK(loaded.checksum() == params.checksum());
}

TEST_CASE("checkpoint format guards reject corruption") {
  testutil::TempDir dir("model");
  auto params = init_params(5, 10, 4);
  save_checkpoint(params, dir.file("e.ckpt"));

  auto bytes = testutil::slurp(dir.file("e.ckpt"));
  bytes[0] = 'X';
  testutil::write_file(dir, "bad_magic.ckpt", bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir.file("bad_magic.ckpt")),
                       doctest::Contains("magic"), Error);

  auto truncated = testutil::slurp(dir.file("e.ckpt"));
  truncated.resize(truncated.size() - 5);
  testutil::write_file(dir, "short.ckpt", truncated);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir.file("short.ckpt")), doctest::Contains("truncated"),
                       Error);
}

TEST_CASE("mixing checkpoint dimensions fails loudly downstream") {
  testutil::TempDir dir("model");
  save_checkpoint(init_params(1, 10, 32), dir.file("d32.ckpt"));
  auto d32 = load_checkpoint(dir.file("d32.ckpt"));
  auto d64 = init_params(1, 10, 64);
  CHECK_THROWS_AS(score_pair(encode(d32, {3}), encode(d64, {3})), Error);
}

TEST_CASE("cross-encoder checkpoints round-trip") {
  testutil::TempDir dir("model");
  auto params = init_cross_params(33, 20, 8, 4);
  save_cross_checkpoint(params, dir.file("x.ckpt"));
  auto loaded = load_cross_checkpoint(dir.file("x.ckpt"));
  CHECK(loaded.checksum() == params.checksum());
  CHECK(loaded.hidden == 4);
  CHECK(cross_score(loaded, {3, 5}, {7}) == cross_score(params, {3, 5}, {7}));
  // dual-encoder magic is not accepted
  save_checkpoint(init_params(1, 10, 4), dir.file("e.ckpt"));
  CHECK_THROWS_AS(load_cross_checkpoint(dir.file("e.ckpt")), Error);
}

}  // TEST_SUITE
