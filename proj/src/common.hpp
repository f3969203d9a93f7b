#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nstr {

enum class Errc {
  invalid = 1,  // bad argument or failed validation
  parse = 2,    // malformed input file
  io = 3,       // filesystem failure
  state = 4,    // wrong object state, dimension/format mismatch
  exists = 5,   // refusing to clobber without --overwrite
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void check(bool ok, Errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

using DocId = std::int64_t;
using QueryId = std::int64_t;
using TokenId = std::int32_t;

constexpr TokenId kPadId = 0;
constexpr TokenId kUnkId = 1;
constexpr TokenId kMaskId = 2;
constexpr int kReservedTokens = 3;

// Synthetic query ids are allocated from here up, disjoint from gold ids.
constexpr QueryId kSyntheticIdBase = QueryId(1) << 30;

}  // namespace nstr
