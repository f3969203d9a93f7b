#pragma once

#include <functional>
#include <string>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "rng.hpp"

namespace nstr {

struct SyntheticPair {
  Query query;               // fresh id >= kSyntheticIdBase
  DocId originating_passage_id = 0;
};

// Pluggable stand-in for a trained query generator: any callable producing
// non-empty query text from a passage.
using QueryGenerator = std::function<std::string(const Passage&, Rng&)>;

// Samples a contiguous word span (length uniform in [span_min, span_max],
// clamped to the passage), then drops a random 20% of the span's words.
std::string span_sampler_generate(const Passage& passage, std::size_t span_min,
                                  std::size_t span_max, Rng& rng);

QueryGenerator make_span_sampler(std::size_t span_min, std::size_t span_max);

// Each passage's draw is seeded by (seed, passage id) so generation order
// does not affect output.
std::vector<SyntheticPair> generate_synthetic(const PassageCollection& passages,
                                              const QueryGenerator& generator,
                                              int queries_per_passage, std::uint64_t seed);

// TSV `query_text<TAB>passage_id`; ids allocated from the synthetic range.
std::vector<SyntheticPair> load_external_queries(const std::string& path,
                                                 const PassageCollection& passages);

void save_synthetic(const std::vector<SyntheticPair>& pairs, const std::string& path);
std::vector<SyntheticPair> load_synthetic(const std::string& path,
                                          const PassageCollection& passages);

}  // namespace nstr
