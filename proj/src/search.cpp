#include "visedit/search.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>

#include "parallel.hpp"

namespace visedit {
namespace {

// Integer-and-double image of a phone so the inner loop never touches
// strings or virtual tables.
struct PackedPhone {
  int label;
  int base;
  int viseme;
  double dur;
};

std::vector<PackedPhone> pack(const PhoneSequence& seq) {
  std::vector<PackedPhone> out;
  out.reserve(seq.size());
  for (const Phone& p : seq.phones()) {
    out.push_back({p.label.id(), p.label.base_id(), p.label.viseme().value(),
                   p.duration()});
  }
  return out;
}

// Mirrors swap_cost() exactly (same expression, same operand order) so the
// packed path folds bit-identical sums.
inline double pair_cost(const PackedPhone& q, const PackedPhone& c,
                        const CostParams& params) {
  double cv;
  if (q.label == c.label || (params.stress_insensitive && q.base == c.base)) {
    cv = 0.0;
  } else if (q.viseme == c.viseme) {
    cv = 0.5;
  } else {
    cv = 1.0;
  }
  return cv * (q.dur + c.dur) + params.chi * std::abs(q.dur - c.dur);
}

enum Step : std::uint8_t { kStart = 0, kDiag = 1, kIns = 2, kDel = 3 };

struct SpanBest {
  double cost = 0.0;
  std::size_t start_col = 0;
  std::size_t end_col = 0;
  bool valid = false;
};

// Weighted edit distance of query phones [qs, qe) against one corpus chunk,
// with the leading and trailing corpus free: row 0 starts at zero cost in
// every column (carrying its column as the window start), and the answer is
// the best cell of the last row. Each cell keeps the lexicographically
// smallest (cost, start); that is exact because any continuation adds the
// same cost regardless of where the window began. Ties inside a cell
// resolve swap > unmatched-query > skipped-corpus so traces are stable.
template <bool kTrace>
SpanBest run_dp(const std::vector<PackedPhone>& q, std::size_t qs, std::size_t qe,
                const std::vector<PackedPhone>& corpus, IndexRange chunk,
                const CostParams& params, std::vector<std::uint8_t>* trace) {
  const std::size_t m = qe - qs;
  const std::size_t len = chunk.size();
  const std::size_t stride = len + 1;

  std::vector<double> prev_cost(stride), cur_cost(stride);
  std::vector<std::size_t> prev_start(stride), cur_start(stride);
  if constexpr (kTrace) trace->assign((m + 1) * stride, kStart);

  for (std::size_t j = 0; j <= len; ++j) {
    prev_cost[j] = 0.0;
    prev_start[j] = j;
  }

  for (std::size_t i = 1; i <= m; ++i) {
    const PackedPhone& qp = q[qs + i - 1];
    cur_cost[0] = prev_cost[0] + params.c_insert;
    cur_start[0] = prev_start[0];
    if constexpr (kTrace) (*trace)[i * stride] = kIns;

    for (std::size_t j = 1; j <= len; ++j) {
      const PackedPhone& cp = corpus[chunk.begin + j - 1];

      double best = prev_cost[j - 1] + pair_cost(qp, cp, params);
      std::size_t start = prev_start[j - 1];
      Step step = kDiag;

      const double ins = prev_cost[j] + params.c_insert;
      if (ins < best || (ins == best && prev_start[j] < start)) {
        best = ins;
        start = prev_start[j];
        step = kIns;
      }
      const double del = cur_cost[j - 1] + params.c_delete;
      if (del < best || (del == best && cur_start[j - 1] < start)) {
        best = del;
        start = cur_start[j - 1];
        step = kDel;
      }

      cur_cost[j] = best;
      cur_start[j] = start;
      if constexpr (kTrace) (*trace)[i * stride + j] = step;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_start, cur_start);
  }

  SpanBest out;
  for (std::size_t j = 0; j <= len; ++j) {
    const double cost = prev_cost[j];
    const std::size_t start = prev_start[j];
    const std::size_t span = j - start;
    const bool better =
        !out.valid || cost < out.cost ||
        (cost == out.cost &&
         (start < out.start_col ||
          (start == out.start_col && span < out.end_col - out.start_col)));
    if (better) {
      out = SpanBest{cost, start, j, true};
    }
  }
  return out;
}

std::vector<AlignPair> walk_trace(const std::vector<std::uint8_t>& trace,
                                  std::size_t m, std::size_t stride,
                                  std::size_t qs, IndexRange chunk,
                                  std::size_t end_col) {
  std::vector<AlignPair> pairs;
  std::size_t i = m;
  std::size_t j = end_col;
  while (i > 0) {
    switch (trace[i * stride + j]) {
      case kDiag:
        pairs.push_back(AlignPair{qs + i - 1, chunk.begin + j - 1});
        --i;
        --j;
        break;
      case kIns:
        pairs.push_back(AlignPair{qs + i - 1, std::nullopt});
        --i;
        break;
      case kDel:
        pairs.push_back(AlignPair{std::nullopt, chunk.begin + j - 1});
        --j;
        break;
      case kStart:
      default:
        assert(false && "trace walk fell off the path");
        i = 0;
        break;
    }
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

struct SegBest {
  double cost = std::numeric_limits<double>::infinity();
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t chunk = 0;
  bool valid = false;
};

std::vector<IndexRange> resolve_chunks(const SearchOptions& options,
                                       std::size_t corpus_size) {
  std::vector<IndexRange> chunks = options.corpus_chunks;
  if (chunks.empty()) chunks.push_back(IndexRange{0, corpus_size});
  std::vector<IndexRange> filtered;
  std::size_t cursor = 0;
  for (const IndexRange& c : chunks) {
    if (c.begin > c.end || c.end > corpus_size || c.begin < cursor) {
      throw ParseError("search: corpus chunks must be sorted, disjoint, and in range");
    }
    cursor = c.end;
    if (!c.empty()) filtered.push_back(c);
  }
  if (filtered.empty()) throw EmptyInput("search: corpus view is empty");
  return filtered;
}

SubsequenceMatch make_match(const std::vector<PackedPhone>& q, std::size_t qs,
                            std::size_t qe, const std::vector<PackedPhone>& corpus,
                            IndexRange chunk, const CostParams& params) {
  std::vector<std::uint8_t> trace;
  const SpanBest best = run_dp<true>(q, qs, qe, corpus, chunk, params, &trace);
  SubsequenceMatch match;
  match.query_range = IndexRange{qs, qe};
  match.corpus_range = IndexRange{chunk.begin + best.start_col, chunk.begin + best.end_col};
  match.cost = best.cost;
  match.alignment =
      walk_trace(trace, qe - qs, chunk.size() + 1, qs, chunk, best.end_col);
  return match;
}

}  // namespace

SubsequenceMatch match_subsequence(const PhoneSequence& query,
                                   const PhoneSequence& corpus,
                                   const CostParams& params) {
  params.validate();
  if (query.empty()) throw EmptyInput("match: empty query");
  if (corpus.empty()) throw EmptyInput("match: empty corpus");
  const auto q = pack(query);
  const auto c = pack(corpus);
  return make_match(q, 0, q.size(), c, IndexRange{0, c.size()}, params);
}

SearchResult search(const PhoneSequence& query, const PhoneSequence& corpus,
                    const CostParams& params, const SearchOptions& options) {
  params.validate();
  if (query.empty()) throw EmptyInput("search: empty query");
  if (corpus.empty()) throw EmptyInput("search: empty corpus");
  const std::size_t m = query.size();
  if (m > options.max_query_length) {
    throw QueryTooLong("search: query has " + std::to_string(m) +
                       " phones, limit is " + std::to_string(options.max_query_length));
  }
  const std::vector<IndexRange> chunks = resolve_chunks(options, corpus.size());

  const auto q = pack(query);
  const auto c = pack(corpus);

  // Best window for every contiguous query segment [s, e); segments are
  // independent, so this is the parallel part.
  auto seg_id = [m](std::size_t s, std::size_t e) { return s * m + (e - 1); };
  std::vector<SegBest> table(m * m);
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t e = s + 1; e <= m; ++e) keys.emplace_back(s, e);
  }
  internal::parallel_for(keys.size(), options.threads, [&](std::size_t idx) {
    const auto [s, e] = keys[idx];
    SegBest best;
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
      const SpanBest span = run_dp<false>(q, s, e, c, chunks[ci], params, nullptr);
      const std::size_t abs_begin = chunks[ci].begin + span.start_col;
      const std::size_t abs_end = chunks[ci].begin + span.end_col;
      const bool better =
          !best.valid || span.cost < best.cost ||
          (span.cost == best.cost &&
           (abs_begin < best.begin ||
            (abs_begin == best.begin && abs_end - abs_begin < best.end - best.begin)));
      if (better) best = SegBest{span.cost, abs_begin, abs_end, ci, true};
    }
    table[seg_id(s, e)] = best;
  });

  // Prefix DP over split points. The objective tuple (cost, segment count,
  // corpus starts) accumulates left to right, so the lexicographic optimum
  // has optimal prefixes and one best candidate per prefix length suffices.
  struct Prefix {
    double cost = 0.0;
    std::size_t segs = 0;
    std::vector<std::size_t> starts;
    std::size_t prev = 0;
    bool set = false;
  };
  std::vector<Prefix> best(m + 1);
  best[0].set = true;
  for (std::size_t e = 1; e <= m; ++e) {
    for (std::size_t s = 0; s < e; ++s) {
      if (!best[s].set) continue;
      const SegBest& g = table[seg_id(s, e)];
      const double cost =
          best[s].cost + (g.cost + params.phi / static_cast<double>(e - s));
      const std::size_t segs = best[s].segs + 1;
      bool better = false;
      if (!best[e].set || cost < best[e].cost) {
        better = true;
      } else if (cost == best[e].cost) {
        if (segs < best[e].segs) {
          better = true;
        } else if (segs == best[e].segs) {
          std::vector<std::size_t> starts = best[s].starts;
          starts.push_back(g.begin);
          better = starts < best[e].starts;
        }
      }
      if (better) {
        Prefix p;
        p.cost = cost;
        p.segs = segs;
        p.starts = best[s].starts;
        p.starts.push_back(g.begin);
        p.prev = s;
        p.set = true;
        best[e] = std::move(p);
      }
    }
  }

  std::vector<std::size_t> bounds{m};
  for (std::size_t e = m; e > 0; e = best[e].prev) bounds.push_back(best[e].prev);
  std::reverse(bounds.begin(), bounds.end());

  SearchResult result;
  result.total_cost = best[m].cost;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const std::size_t s = bounds[k];
    const std::size_t e = bounds[k + 1];
    const SegBest& g = table[seg_id(s, e)];
    SubsequenceMatch match = make_match(q, s, e, c, chunks[g.chunk], params);
    assert(match.cost == g.cost &&
           match.corpus_range.begin == g.begin &&
           match.corpus_range.end == g.end);
    result.split.push_back(std::move(match));
  }

  if (options.dp_dump) {
    std::ostream& out = *options.dp_dump;
    out << "query_begin,query_end,cost,corpus_begin,corpus_end,chosen\n";
    for (const auto& [s, e] : keys) {
      const SegBest& g = table[seg_id(s, e)];
      bool chosen = false;
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        chosen = chosen || (bounds[k] == s && bounds[k + 1] == e);
      }
      out << s << ',' << e << ',' << g.cost << ',' << g.begin << ',' << g.end
          << ',' << (chosen ? 1 : 0) << '\n';
    }
  }
  return result;
}

std::uint64_t enumerate_splits(std::size_t query_length) {
  if (query_length == 0) throw EmptyInput("cannot split an empty query");
  if (query_length > 64) {
    throw QueryTooLong("split count for " + std::to_string(query_length) +
                       " phones exceeds 2^63");
  }
  return 1ull << (query_length - 1);
}

}  // namespace visedit
