#pragma once

#include <string>

#include "common.hpp"
#include "corpus.hpp"
#include "rng.hpp"

namespace nstr {

// Input perturbation operators for noisy self-training. "Some words" means an
// independent per-token Bernoulli draw at the given probability; operators
// compose in the fixed order shuffle -> delete -> mask.
struct NoiseConfig {
  double p_shuffle = 0.1;
  double p_delete = 0.1;
  double p_mask = 0.1;
  std::size_t min_len = 1;
  std::string stream = "noise";

  bool enabled() const { return p_shuffle > 0.0 || p_delete > 0.0 || p_mask > 0.0; }
  NoiseConfig silenced() const {
    NoiseConfig c = *this;
    c.p_shuffle = c.p_delete = c.p_mask = 0.0;
    return c;
  }
  void validate() const;
};

// Each position is selected with probability p; values at the selected
// positions are permuted uniformly (Fisher-Yates over the selected indices).
TokenizedText shuffle_tokens(const TokenizedText& tokens, double p, Rng& rng);

// Each token is dropped with probability p; if fewer than min_len survive,
// the first min_len tokens of the original sequence are kept instead.
TokenizedText delete_tokens(const TokenizedText& tokens, double p, std::size_t min_len, Rng& rng);

// Each token is replaced by MASK (=2) with probability p.
TokenizedText mask_tokens(const TokenizedText& tokens, double p, Rng& rng);

TokenizedText apply_noise(const TokenizedText& tokens, const NoiseConfig& config, Rng& rng);

}  // namespace nstr
