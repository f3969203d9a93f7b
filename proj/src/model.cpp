#include "model.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"
#include "rng.hpp"

namespace nstr {

namespace {

constexpr char kEncoderMagic[4] = {'N', 'S', 'T', 'R'};
constexpr char kCrossMagic[4] = {'N', 'S', 'T', 'X'};
constexpr std::uint32_t kCheckpointVersion = 1;

void fill_uniform(std::vector<float>& values, Rng& rng, double bound) {
  for (auto& v : values) v = static_cast<float>(rng.uniform(-bound, bound));
}

void check_finite(const std::vector<float>& values, const char* what) {
  for (float v : values) {
    check(std::isfinite(v), Errc::state, std::string(what) + ": non-finite parameter");
  }
}

void read_magic(std::istream& in, const char expected[4], const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  check(in.gcount() == 4 && std::equal(magic, magic + 4, expected), Errc::state,
        "bad magic in checkpoint file: " + path);
}

}  // namespace

std::uint64_t EncoderParams::checksum() const {
  return fnv1a64_bytes(embedding.data(), embedding.size() * sizeof(float));
}

std::uint64_t CrossEncoderParams::checksum() const {
  std::uint64_t h = fnv1a64_bytes(embedding.data(), embedding.size() * sizeof(float));
  h ^= fnv1a64_bytes(w1.data(), w1.size() * sizeof(float));
  h ^= fnv1a64_bytes(b1.data(), b1.size() * sizeof(float));
  h ^= fnv1a64_bytes(w2.data(), w2.size() * sizeof(float));
  h ^= fnv1a64_bytes(&b2, sizeof(float));
  return h;
}

EncoderParams init_params(std::uint64_t seed, std::int64_t vocab_size, std::int32_t dim) {
  check(dim >= 1, Errc::invalid, "init_params: dim must be >= 1");
  check(vocab_size >= kReservedTokens, Errc::invalid, "init_params: vocab too small");
  EncoderParams params;
  params.vocab_size = vocab_size;
  params.dim = dim;
  params.embedding.resize(std::size_t(vocab_size) * dim);
  Rng rng(seed, "init");
  fill_uniform(params.embedding, rng, 1.0 / std::sqrt(double(dim)));
  std::fill_n(params.row(kPadId), dim, 0.0f);
  return params;
}

CrossEncoderParams init_cross_params(std::uint64_t seed, std::int64_t vocab_size,
                                     std::int32_t dim, std::int32_t hidden) {
  check(dim >= 1, Errc::invalid, "init_cross_params: dim must be >= 1");
  check(hidden >= 1, Errc::invalid, "init_cross_params: hidden must be >= 1");
  check(vocab_size >= kReservedTokens, Errc::invalid, "init_cross_params: vocab too small");
  CrossEncoderParams params;
  params.vocab_size = vocab_size;
  params.dim = dim;
  params.hidden = hidden;
  params.embedding.resize(std::size_t(vocab_size) * dim);
  params.w1.resize(std::size_t(4) * dim * hidden);
  params.b1.assign(std::size_t(hidden), 0.0f);
  params.w2.resize(std::size_t(hidden));
  params.b2 = 0.0f;
  Rng rng(seed, "init");
  fill_uniform(params.embedding, rng, 1.0 / std::sqrt(double(dim)));
  fill_uniform(params.w1, rng, 1.0 / std::sqrt(4.0 * dim));
  fill_uniform(params.w2, rng, 1.0 / std::sqrt(double(hidden)));
  std::fill_n(params.row(kPadId), dim, 0.0f);
  return params;
}

EmbeddingVector encode(const EncoderParams& params, const TokenizedText& tokens,
                       double positional_scale) {
  check(!tokens.empty(), Errc::invalid, "encode: empty token sequence");
  EmbeddingVector vec(static_cast<std::size_t>(params.dim), 0.0);
  const double n = static_cast<double>(tokens.size());
  std::int64_t used = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenId t = tokens[i];
    check(t >= 0 && t < params.vocab_size, Errc::invalid,
          "encode: token id " + std::to_string(t) + " out of range");
    if (t == kPadId) continue;
    const double weight = 1.0 + positional_scale * static_cast<double>(i) / n;
    const float* r = params.row(t);
    for (std::int32_t d = 0; d < params.dim; ++d) vec[d] += weight * r[d];
    ++used;
  }
  check(used > 0, Errc::invalid, "encode: all tokens are PAD");
  for (auto& v : vec) v /= static_cast<double>(used);
  return vec;
}

double score_pair(const EmbeddingVector& q_vec, const EmbeddingVector& p_vec) {
  check(q_vec.size() == p_vec.size(), Errc::invalid, "score_pair: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < q_vec.size(); ++i) s += q_vec[i] * p_vec[i];
  return s;
}

double cross_score(const CrossEncoderParams& params, const TokenizedText& q_tokens,
                   const TokenizedText& p_tokens) {
  check(!q_tokens.empty() && !p_tokens.empty(), Errc::invalid, "cross_score: empty input");
  const auto d = static_cast<std::size_t>(params.dim);
  auto pool = [&](const TokenizedText& tokens) {
    EmbeddingVector vec(d, 0.0);
    std::int64_t used = 0;
    for (TokenId t : tokens) {
      check(t >= 0 && t < params.vocab_size, Errc::invalid,
            "cross_score: token id " + std::to_string(t) + " out of range");
      if (t == kPadId) continue;
      const float* r = params.row(t);
      for (std::size_t i = 0; i < d; ++i) vec[i] += r[i];
      ++used;
    }
    check(used > 0, Errc::invalid, "cross_score: all tokens are PAD");
    for (auto& v : vec) v /= static_cast<double>(used);
    return vec;
  };
  EmbeddingVector u = pool(q_tokens);
  EmbeddingVector v = pool(p_tokens);

  std::vector<double> f(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = u[i];
    f[d + i] = v[i];
    f[2 * d + i] = u[i] * v[i];
    f[3 * d + i] = std::abs(u[i] - v[i]);
  }
  double score = params.b2;
  for (std::int32_t h = 0; h < params.hidden; ++h) {
    double z = params.b1[static_cast<std::size_t>(h)];
    for (std::size_t i = 0; i < 4 * d; ++i) {
      z += f[i] * params.w1[i * static_cast<std::size_t>(params.hidden) + h];
    }
    score += params.w2[static_cast<std::size_t>(h)] * std::tanh(z);
  }
  return score;
}

void save_checkpoint(const EncoderParams& params, const std::string& path) {
  check_finite(params.embedding, "save_checkpoint");
  auto out = open_out(path, /*binary=*/true);
  out.write(kEncoderMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(params.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(params.dim));
  for (float v : params.embedding) write_f32(out, v);
  check(out.good(), Errc::io, "write failed: " + path);
}

EncoderParams load_checkpoint(const std::string& path) {
  auto in = open_in(path, /*binary=*/true);
  read_magic(in, kEncoderMagic, path);
  check(read_u32(in, "checkpoint version") == kCheckpointVersion, Errc::state,
        "unsupported checkpoint version in " + path);
  EncoderParams params;
  params.vocab_size = read_u32(in, "vocab size");
  params.dim = static_cast<std::int32_t>(read_u32(in, "dim"));
  check(params.vocab_size >= kReservedTokens && params.dim >= 1, Errc::state,
        "corrupt checkpoint header in " + path);
  params.embedding.resize(std::size_t(params.vocab_size) * params.dim);
  for (auto& v : params.embedding) v = read_f32(in, "embedding");
  in.peek();
  check(in.eof(), Errc::state, "trailing bytes in checkpoint file: " + path);
  return params;
}

void save_cross_checkpoint(const CrossEncoderParams& params, const std::string& path) {
  check_finite(params.embedding, "save_cross_checkpoint");
  check_finite(params.w1, "save_cross_checkpoint");
  auto out = open_out(path, /*binary=*/true);
  out.write(kCrossMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(params.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(params.dim));
  write_u32(out, static_cast<std::uint32_t>(params.hidden));
  for (float v : params.embedding) write_f32(out, v);
  for (float v : params.w1) write_f32(out, v);
  for (float v : params.b1) write_f32(out, v);
  for (float v : params.w2) write_f32(out, v);
  write_f32(out, params.b2);
  check(out.good(), Errc::io, "write failed: " + path);
}

CrossEncoderParams load_cross_checkpoint(const std::string& path) {
  auto in = open_in(path, /*binary=*/true);
  read_magic(in, kCrossMagic, path);
  check(read_u32(in, "checkpoint version") == kCheckpointVersion, Errc::state,
        "unsupported checkpoint version in " + path);
  CrossEncoderParams params;
  params.vocab_size = read_u32(in, "vocab size");
  params.dim = static_cast<std::int32_t>(read_u32(in, "dim"));
  params.hidden = static_cast<std::int32_t>(read_u32(in, "hidden"));
  check(params.vocab_size >= kReservedTokens && params.dim >= 1 && params.hidden >= 1, Errc::state,
        "corrupt checkpoint header in " + path);
  params.embedding.resize(std::size_t(params.vocab_size) * params.dim);
  params.w1.resize(std::size_t(4) * params.dim * params.hidden);
  params.b1.resize(static_cast<std::size_t>(params.hidden));
  params.w2.resize(static_cast<std::size_t>(params.hidden));
  for (auto& v : params.embedding) v = read_f32(in, "embedding");
  for (auto& v : params.w1) v = read_f32(in, "w1");
  for (auto& v : params.b1) v = read_f32(in, "b1");
  for (auto& v : params.w2) v = read_f32(in, "w2");
  params.b2 = read_f32(in, "b2");
  in.peek();
  check(in.eof(), Errc::state, "trailing bytes in checkpoint file: " + path);
  return params;
}

}  // namespace nstr
