#pragma once

#include <cstdint>
#include <cstddef>

#include "visedit/ingest.hpp"

namespace visedit {

// Knobs for the synthetic corpus: a Zipf-weighted pseudo-word lexicon built
// from syllable templates, spoken across many sentences with per-viseme
// log-normal phone durations. Serves as a stand-in for a large aligned
// speech corpus in tests and fixtures.
struct CorpusGenConfig {
  std::uint64_t seed = 7;
  std::size_t sentences = 1000;
  std::size_t lexicon_size = 5200;
  double zipf_exponent = 0.72;
  std::size_t min_words = 4;
  std::size_t max_words = 11;
  // Chance of a short mid-sentence pause after a word.
  double pause_prob = 0.12;
};

struct GeneratedCorpus {
  AlignedTranscript transcript;
  PronunciationDict dictionary;
};

GeneratedCorpus generate_corpus(const CorpusGenConfig& config = {});

// Smooth deterministic face parameters covering the transcript: drifting
// pose/geometry/reflectance/illumination plus viseme-keyed expression that
// interpolates between phone centers.
ParameterTrack synthesize_track(const AlignedTranscript& transcript, double fps,
                                std::uint64_t seed = 0);

}  // namespace visedit
