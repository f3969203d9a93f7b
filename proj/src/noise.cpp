#include "noise.hpp"

#include <algorithm>

namespace nstr {

void NoiseConfig::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  check(in_unit(p_shuffle) && in_unit(p_delete) && in_unit(p_mask), Errc::invalid,
        "noise probabilities must lie in [0,1]");
  check(min_len >= 1, Errc::invalid, "noise min_len must be >= 1");
}

TokenizedText shuffle_tokens(const TokenizedText& tokens, double p, Rng& rng) {
  check(!tokens.empty(), Errc::invalid, "shuffle_tokens: empty input");
  if (p <= 0.0) return tokens;
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rng.bernoulli(p)) selected.push_back(i);
  }
  TokenizedText out = tokens;
  for (std::size_t i = selected.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(out[selected[i - 1]], out[selected[j]]);
  }
  return out;
}

TokenizedText delete_tokens(const TokenizedText& tokens, double p, std::size_t min_len, Rng& rng) {
  check(!tokens.empty(), Errc::invalid, "delete_tokens: empty input");
  check(min_len >= 1, Errc::invalid, "delete_tokens: min_len must be >= 1");
  TokenizedText out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (p <= 0.0 || !rng.bernoulli(p)) out.push_back(t);
  }
  if (out.size() < min_len) {
    out.assign(tokens.begin(), tokens.begin() + std::min(min_len, tokens.size()));
  }
  return out;
}

TokenizedText mask_tokens(const TokenizedText& tokens, double p, Rng& rng) {
  check(!tokens.empty(), Errc::invalid, "mask_tokens: empty input");
  TokenizedText out = tokens;
  if (p <= 0.0) return out;
  for (auto& t : out) {
    if (rng.bernoulli(p)) t = kMaskId;
  }
  return out;
}

TokenizedText apply_noise(const TokenizedText& tokens, const NoiseConfig& config, Rng& rng) {
  config.validate();
  TokenizedText out = shuffle_tokens(tokens, config.p_shuffle, rng);
  out = delete_tokens(out, config.p_delete, config.min_len, rng);
  out = mask_tokens(out, config.p_mask, rng);
  return out;
}

}  // namespace nstr
