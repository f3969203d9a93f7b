#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"

namespace nstr {

using EmbeddingVector = std::vector<double>;

// One token-embedding table shared by the query and passage encoders.
// Entries are held in float32 so checkpoints round-trip losslessly; all
// arithmetic on top of them runs in double.
struct EncoderParams {
  std::int64_t vocab_size = 0;
  std::int32_t dim = 0;
  std::vector<float> embedding;  // row-major vocab_size x dim

  const float* row(TokenId t) const { return embedding.data() + std::size_t(t) * dim; }
  float* row(TokenId t) { return embedding.data() + std::size_t(t) * dim; }

  std::uint64_t checksum() const;
};

struct CrossEncoderParams {
  std::int64_t vocab_size = 0;
  std::int32_t dim = 0;
  std::int32_t hidden = 0;
  std::vector<float> embedding;  // vocab_size x dim
  std::vector<float> w1;         // (4*dim) x hidden, row-major
  std::vector<float> b1;         // hidden
  std::vector<float> w2;         // hidden
  float b2 = 0.0f;

  const float* row(TokenId t) const { return embedding.data() + std::size_t(t) * dim; }
  float* row(TokenId t) { return embedding.data() + std::size_t(t) * dim; }

  std::uint64_t checksum() const;
};

EncoderParams init_params(std::uint64_t seed, std::int64_t vocab_size, std::int32_t dim);
CrossEncoderParams init_cross_params(std::uint64_t seed, std::int64_t vocab_size,
                                     std::int32_t dim, std::int32_t hidden);

// Mean of the embedding rows of non-PAD tokens. positional_scale e != 0 makes
// pooling order sensitive: token at position i (0-based, sequence length n)
// is weighted by 1 + e*i/n before averaging. Plain mean pooling ignores token
// order entirely, so only this variant can detect shuffling.
EmbeddingVector encode(const EncoderParams& params, const TokenizedText& tokens,
                       double positional_scale = 0.0);

double score_pair(const EmbeddingVector& q_vec, const EmbeddingVector& p_vec);

// Joint scorer: u/v are mean-pooled query/passage embeddings, features
// [u; v; u*v; |u-v|] feed one tanh hidden layer.
double cross_score(const CrossEncoderParams& params, const TokenizedText& q_tokens,
                   const TokenizedText& p_tokens);

// Checkpoint: magic NSTR, u32 version=1, u32 vocab_size, u32 dim, f32 rows.
void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

// Cross-encoder checkpoint: magic NSTX, u32 version=1, sizes, f32 blocks.
void save_cross_checkpoint(const CrossEncoderParams& params, const std::string& path);
CrossEncoderParams load_cross_checkpoint(const std::string& path);

}  // namespace nstr
