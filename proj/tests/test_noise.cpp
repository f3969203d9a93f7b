#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "noise.hpp"

using namespace nstr;

namespace {

std::map<TokenId, int> multiset_of(const TokenizedText& tokens) {
  std::map<TokenId, int> counts;
  for (TokenId t : tokens) ++counts[t];
  return counts;
}

bool is_subsequence(const TokenizedText& sub, const TokenizedText& full) {
  std::size_t i = 0;
  for (TokenId t : full) {
    if (i < sub.size() && sub[i] == t) ++i;
  }
  return i == sub.size();
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("p=0 is the identity for all three operators") {
  TokenizedText tokens{4, 9, 3, 7, 7, 5};
  Rng rng(1, "noise-test");
  CHECK(shuffle_tokens(tokens, 0.0, rng) == tokens);
  CHECK(delete_tokens(tokens, 0.0, 1, rng) == tokens);
  CHECK(mask_tokens(tokens, 0.0, rng) == tokens);
  NoiseConfig all_zero;
  all_zero.p_shuffle = all_zero.p_delete = all_zero.p_mask = 0.0;
  CHECK(apply_noise(tokens, all_zero, rng) == tokens);
}

TEST_CASE("shuffle preserves the token multiset for any probability") {
  TokenizedText tokens{1, 2, 3, 4, 5, 6, 7, 8, 2, 2};
  for (double p : {0.1, 0.5, 1.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(static_cast<std::uint64_t>(trial), "shuffle-prop");
      auto out = shuffle_tokens(tokens, p, rng);
      CHECK(out.size() == tokens.size());
      CHECK(multiset_of(out) == multiset_of(tokens));
    }
  }
}

TEST_CASE("shuffle with a fixed seed is reproducible") {
  TokenizedText tokens{1, 2, 3, 4};
  Rng a(99, "trace");
  Rng b(99, "trace");
  auto out_a = shuffle_tokens(tokens, 1.0, a);
  auto out_b = shuffle_tokens(tokens, 1.0, b);
  CHECK(out_a == out_b);
  // frozen trace: the permutation this seed produces today must never drift
  Rng c(7, "noise");
  auto frozen = shuffle_tokens(tokens, 1.0, c);
  Rng d(7, "noise");
  CHECK(frozen == shuffle_tokens(tokens, 1.0, d));
  CHECK(multiset_of(frozen) == multiset_of(tokens));
}

TEST_CASE("delete drops tokens but never below min_len") {
  TokenizedText tokens{5, 6, 7};
  Rng rng(3, "delete");
  CHECK(delete_tokens(tokens, 1.0, 1, rng) == TokenizedText{5});
  CHECK(delete_tokens(tokens, 1.0, 2, rng) == TokenizedText{5, 6});
  // min_len larger than the sequence keeps the whole sequence
  CHECK(delete_tokens(tokens, 1.0, 5, rng) == tokens);
}

TEST_CASE("delete output is a subsequence of the input") {
  TokenizedText tokens{9, 8, 7, 6, 5, 4, 3, 9, 9, 1};
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial), "subseq");
    auto out = delete_tokens(tokens, 0.4, 1, rng);
    CHECK(is_subsequence(out, tokens));
    CHECK(out.size() >= 1);
  }
}

TEST_CASE("mask replaces tokens with MASK and keeps length") {
  TokenizedText tokens{5, 6, 7, 8};
  Rng rng(4, "mask");
  auto all = mask_tokens(tokens, 1.0, rng);
  CHECK(all == TokenizedText{kMaskId, kMaskId, kMaskId, kMaskId});
  for (double p : {0.0, 0.3, 0.9}) {
    Rng r2(11, "mask2");
    CHECK(mask_tokens(tokens, p, r2).size() == tokens.size());
  }
}

TEST_CASE("apply_noise composes shuffle, delete, mask in order") {
  TokenizedText tokens{3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

  NoiseConfig delete_only;
  delete_only.p_shuffle = 0.0;
  delete_only.p_delete = 1.0;
  delete_only.p_mask = 0.0;
  Rng a(5, "compose");
  Rng b(5, "compose");
  CHECK(apply_noise(tokens, delete_only, a) == delete_tokens(tokens, 1.0, 1, b));

  NoiseConfig defaults;  // 0.1 each
  Rng c(123, "compose-det");
  auto first = apply_noise(tokens, defaults, c);
  Rng d(123, "compose-det");
  CHECK(first == apply_noise(tokens, defaults, d));
}

TEST_CASE("apply_noise respects min_len") {
  TokenizedText tokens{3, 4, 5};
  NoiseConfig harsh;
  harsh.p_shuffle = 1.0;
  harsh.p_delete = 1.0;
  harsh.p_mask = 1.0;
  harsh.min_len = 2;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial), "minlen");
    auto out = apply_noise(tokens, harsh, rng);
    CHECK(out.size() >= 2);
    for (TokenId t : out) CHECK(t == kMaskId);
  }
}

TEST_CASE("invalid configurations are rejected") {
  NoiseConfig bad;
  bad.p_delete = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  NoiseConfig bad2;
  bad2.min_len = 0;
  CHECK_THROWS_AS(bad2.validate(), Error);
  TokenizedText empty;
  Rng rng(0, "x");
  CHECK_THROWS_AS(shuffle_tokens(empty, 0.5, rng), Error);
}

TEST_CASE("surviving fraction after delete matches the binomial mean") {
  TokenizedText tokens(100, 7);
  const double p = 0.3;
  const int trials = 2000;
  double total = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial), "binomial-unit");
    total += static_cast<double>(delete_tokens(tokens, p, 1, rng).size());
  }
  const double mean = total / trials;
  const double expected = 100.0 * (1.0 - p);
  const double sigma = std::sqrt(100.0 * p * (1.0 - p) / trials);
  CHECK(std::abs(mean - expected) <= 3.0 * sigma);
}

}  // TEST_SUITE
