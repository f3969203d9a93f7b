#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace nstr {

// Deterministic xoshiro256** generator. Every random decision in the project
// flows from a (seed, stream name) pair so runs replay bit-identically on any
// platform; std::random distributions are avoided because their output is not
// pinned by the standard.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  // Derives an independent stream keyed by this stream's identity plus `name`.
  Rng child(std::string_view name) const;

  std::uint64_t next_u64();

  // Uniform in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  bool bernoulli(double p);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // First `count` elements of a Fisher-Yates pass over [0, n): a uniform
  // sample without replacement, in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);

 private:
  explicit Rng(std::uint64_t key);

  std::uint64_t key_;
  std::uint64_t state_[4];
};

}  // namespace nstr
