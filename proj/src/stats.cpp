#include "visedit/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "parallel.hpp"

namespace visedit {

namespace {

// A maximal silence-free run of phones within one sentence.
struct Run {
  std::size_t sentence = 0;
  std::size_t begin = 0;  // phone index
  std::size_t length = 0;
};

std::vector<Run> silence_free_runs(const AlignedTranscript& corpus) {
  std::vector<Run> runs;
  const PhoneSequence& phones = corpus.phones();
  for (std::size_t s = 0; s < corpus.sentences().size(); ++s) {
    const IndexRange range = corpus.sentence_phone_range(s);
    std::size_t begin = range.begin;
    for (std::size_t i = range.begin; i <= range.end; ++i) {
      const bool boundary = i == range.end || phones[i].label.is_silence();
      if (!boundary) continue;
      if (i > begin) runs.push_back({s, begin, i - begin});
      begin = i + 1;
    }
  }
  return runs;
}

// Label key of a window; one byte per phone (the inventory is small).
std::string window_key(const PhoneSequence& phones, std::size_t begin,
                       std::size_t length, MatchMode mode) {
  std::string key(length, '\0');
  for (std::size_t i = 0; i < length; ++i) {
    const PhoneLabel& label = phones[begin + i].label;
    key[i] = static_cast<char>(mode == MatchMode::Phoneme
                                   ? label.id()
                                   : label.viseme().value());
  }
  return key;
}

struct KeyEntry {
  std::size_t first_sentence = 0;
  bool multiple_sentences = false;
};

}  // namespace

std::uint64_t hash64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (counter + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

MatchProbabilityPoint match_probability(const AlignedTranscript& corpus, int k,
                                        MatchMode mode,
                                        const StatsOptions& options) {
  if (k < 1) throw ParseError{"window length must be at least 1"};
  if (corpus.sentences().size() < 2)
    throw InsufficientCorpus{
        "leave-one-out matching needs at least two sentences"};

  const PhoneSequence& phones = corpus.phones();
  const std::vector<Run> runs = silence_free_runs(corpus);
  const auto klen = static_cast<std::size_t>(k);

  // Window population and per-key occurrence summary. A window matches
  // exactly when its key occurs in a second sentence.
  std::vector<Run> eligible;
  std::vector<std::uint64_t> cumulative;  // windows before each eligible run
  std::uint64_t total = 0;
  std::unordered_map<std::string, KeyEntry> keys;
  for (const Run& run : runs) {
    if (run.length < klen) continue;
    eligible.push_back(run);
    cumulative.push_back(total);
    const std::size_t count = run.length - klen + 1;
    total += count;
    for (std::size_t off = 0; off < count; ++off) {
      auto [it, inserted] = keys.try_emplace(
          window_key(phones, run.begin + off, klen, mode),
          KeyEntry{run.sentence, false});
      if (!inserted && it->second.first_sentence != run.sentence)
        it->second.multiple_sentences = true;
    }
  }

  MatchProbabilityPoint point;
  point.k = k;
  if (total == 0) return point;  // no length-k window exists

  const auto window_matches = [&](std::uint64_t index) {
    // Find the eligible run holding this window index.
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), index);
    const std::size_t ri = static_cast<std::size_t>(it - cumulative.begin()) - 1;
    const Run& run = eligible[ri];
    const std::size_t off = static_cast<std::size_t>(index - cumulative[ri]);
    const KeyEntry& entry =
        keys.at(window_key(phones, run.begin + off, klen, mode));
    return entry.multiple_sentences || entry.first_sentence != run.sentence;
  };

  if (options.exhaustive) {
    std::atomic<std::uint64_t> hits{0};
    internal::parallel_for(static_cast<std::size_t>(total), options.threads,
                           [&](std::size_t w) {
                             if (window_matches(w))
                               hits.fetch_add(1, std::memory_order_relaxed);
                           });
    point.probability =
        static_cast<double>(hits.load()) / static_cast<double>(total);
    point.trials = total;
    return point;
  }

  const std::uint64_t trials = options.trials;
  if (trials == 0) throw ParseError{"sample count must be positive"};
  // Per-mode, per-k stream so the curves draw independent samples.
  const std::uint64_t stream =
      hash64(options.seed, (static_cast<std::uint64_t>(k) << 1) |
                               (mode == MatchMode::Viseme ? 1u : 0u));
  std::atomic<std::uint64_t> hits{0};
  internal::parallel_for(
      static_cast<std::size_t>(trials), options.threads, [&](std::size_t t) {
        const std::uint64_t w = hash64(stream, t) % total;
        if (window_matches(w)) hits.fetch_add(1, std::memory_order_relaxed);
      });
  point.probability =
      static_cast<double>(hits.load()) / static_cast<double>(trials);
  point.trials = trials;
  return point;
}

MatchProbabilityCurve match_curve(const AlignedTranscript& corpus,
                                  MatchMode mode, const StatsOptions& options) {
  if (options.k_min < 1 || options.k_max < options.k_min)
    throw ParseError{"window length range is inverted"};
  MatchProbabilityCurve curve;
  curve.mode = mode;
  for (int k = options.k_min; k <= options.k_max; ++k)
    curve.points.push_back(match_probability(corpus, k, mode, options));
  return curve;
}

namespace {

// Linear interpolation between order statistics (the "h = (n-1)p" rule).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

DurationStats duration_stats(const AlignedTranscript& corpus) {
  std::array<std::vector<double>, VisemeId::kCount> buckets;
  for (const Phone& phone : corpus.phones().phones())
    buckets[static_cast<std::size_t>(phone.label.viseme().index())].push_back(
        phone.duration());

  DurationStats stats;
  for (int v = 0; v < VisemeId::kCount; ++v) {
    auto& values = buckets[static_cast<std::size_t>(v)];
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    VisemeDurationRow row;
    row.viseme = VisemeId{v + 1};
    row.count = values.size();
    row.min = values.front();
    row.q1 = quantile_sorted(values, 0.25);
    row.median = quantile_sorted(values, 0.5);
    row.q3 = quantile_sorted(values, 0.75);
    row.max = values.back();
    stats.rows.push_back(row);
  }
  return stats;
}

namespace {

std::string num(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

}  // namespace

std::string export_match_csv(const std::vector<MatchProbabilityCurve>& curves) {
  std::string out = "k,probability,trials,mode\n";
  for (const MatchProbabilityCurve& curve : curves) {
    const char* mode =
        curve.mode == MatchMode::Phoneme ? "phoneme" : "viseme";
    for (const MatchProbabilityPoint& p : curve.points) {
      out += std::to_string(p.k);
      out += ',';
      out += num(p.probability);
      out += ',';
      out += std::to_string(p.trials);
      out += ',';
      out += mode;
      out += '\n';
    }
  }
  return out;
}

std::string export_duration_csv(const DurationStats& stats) {
  std::string out = "viseme,count,min,q1,median,q3,max\n";
  for (const VisemeDurationRow& row : stats.rows) {
    out += row.viseme.name();
    out += ',';
    out += std::to_string(row.count);
    out += ',';
    out += num(row.min);
    out += ',';
    out += num(row.q1);
    out += ',';
    out += num(row.median);
    out += ',';
    out += num(row.q3);
    out += ',';
    out += num(row.max);
    out += '\n';
  }
  return out;
}

}  // namespace visedit
