#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "visedit/core.hpp"
#include "visedit/errors.hpp"
#include "visedit/ingest.hpp"

namespace visedit {

enum class MatchMode { Phoneme, Viseme };

// Exact-match probability of a length-k label window, leave-one-out by
// sentence: a window counts as matched when the same label sequence occurs
// in some other sentence.
struct MatchProbabilityPoint {
  int k = 0;
  double probability = 0.0;
  // Windows tested: the sample count in Monte Carlo mode, the full window
  // population when exhaustive. Zero when the corpus has no length-k window.
  std::uint64_t trials = 0;
};

struct MatchProbabilityCurve {
  MatchMode mode = MatchMode::Phoneme;
  std::vector<MatchProbabilityPoint> points;  // ascending k
};

struct StatsOptions {
  std::uint64_t seed = 0;
  // Per-k sample count in Monte Carlo mode.
  std::uint64_t trials = 100000;
  bool exhaustive = false;
  int threads = 1;
  int k_min = 1;
  int k_max = 10;
};

// Stateless per-trial randomness: the same (seed, counter) always yields the
// same value, so sampling is reproducible no matter how trials are split
// across threads.
std::uint64_t hash64(std::uint64_t seed, std::uint64_t counter);

// One k. Windows never contain silence and never cross a sentence boundary.
// Throws InsufficientCorpus when the transcript has fewer than two sentences.
MatchProbabilityPoint match_probability(const AlignedTranscript& corpus, int k,
                                        MatchMode mode,
                                        const StatsOptions& options = {});

// The whole k range from the options.
MatchProbabilityCurve match_curve(const AlignedTranscript& corpus,
                                  MatchMode mode,
                                  const StatsOptions& options = {});

// Five-number summary of phone durations for one viseme group.
struct VisemeDurationRow {
  VisemeId viseme{1};
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct DurationStats {
  // Ascending viseme id; groups with no instances are omitted.
  std::vector<VisemeDurationRow> rows;
};

// Durations of every phone instance, silence included, grouped by viseme.
// Quartiles interpolate linearly between order statistics.
DurationStats duration_stats(const AlignedTranscript& corpus);

// CSV exports. Headers are always present; an empty input yields just the
// header line.
std::string export_match_csv(const std::vector<MatchProbabilityCurve>& curves);
std::string export_duration_csv(const DurationStats& stats);

}  // namespace visedit
