#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "visedit/core.hpp"
#include "visedit/errors.hpp"
#include "visedit/ingest.hpp"

namespace visedit {

// One step of an alignment: a swap pairs both sides, an unmatched query
// phone leaves corpus_index empty, a skipped corpus phone leaves
// query_index empty.
struct AlignPair {
  std::optional<std::size_t> query_index;
  std::optional<std::size_t> corpus_index;

  bool operator==(const AlignPair&) const = default;
};

// Best-scoring corpus window for a run of query phones. corpus_range may be
// empty (all query phones unmatched) — begin then marks where the window
// would sit. Indices are absolute positions in the corpus sequence.
struct SubsequenceMatch {
  IndexRange query_range;
  IndexRange corpus_range;
  // Alignment cost alone; segment penalties live at the search level.
  double cost = 0.0;
  std::vector<AlignPair> alignment;

  bool operator==(const SubsequenceMatch&) const = default;
};

// The chosen decomposition of a query into contiguous segments, each backed
// by its own corpus window.
struct SearchResult {
  std::vector<SubsequenceMatch> split;
  // Sum of segment costs plus the per-segment length penalty phi/|segment|.
  double total_cost = 0.0;

  bool operator==(const SearchResult&) const = default;
};

struct SearchOptions {
  // Hard cap on query phones; beyond it the split space is unreasonable.
  std::size_t max_query_length = 64;
  // Eligible corpus regions (sorted, disjoint). Empty means the whole
  // corpus. Matches never straddle region boundaries.
  std::vector<IndexRange> corpus_chunks;
  int threads = 1;
  // When set, receives one CSV row per candidate segment match.
  std::ostream* dp_dump = nullptr;
};

// Best corpus window for the whole query under the weighted edit distance
// with free leading/trailing corpus. Ties prefer the lower cost, then the
// earliest window start, then the shorter window.
SubsequenceMatch match_subsequence(const PhoneSequence& query,
                                   const PhoneSequence& corpus,
                                   const CostParams& params);

// Minimizes sum over segments of (match cost + phi/|segment|) across every
// contiguous decomposition of the query. Ties prefer fewer segments, then
// lexicographically earlier corpus starts.
SearchResult search(const PhoneSequence& query, const PhoneSequence& corpus,
                    const CostParams& params, const SearchOptions& options = {});

// Number of contiguous decompositions of a query of the given length:
// 2^(length-1). Throws EmptyInput for length 0 and QueryTooLong beyond 64
// (the count no longer fits the return type).
std::uint64_t enumerate_splits(std::size_t query_length);

}  // namespace visedit
