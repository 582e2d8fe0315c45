#include "visedit/corpus_gen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "visedit/errors.hpp"
#include "visedit/stats.hpp"

namespace visedit {
namespace {

// Counter-based RNG: every draw is hash64(seed, counter++), so generation is
// reproducible and independent of call order elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return hash64(seed_, counter_++); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Index in [0, n).
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  // Standard normal via Box-Muller (fresh pair each call).
  double gauss() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

bool is_vowel_code(std::string_view code) {
  return !code.empty() && code.back() >= '0' && code.back() <= '9';
}

struct Inventory {
  // Base vowel spellings without the stress digit ("AA", "IY", ...).
  std::vector<std::string> vowels;
  // Consonants bucketed by viseme class, so sampling can balance the
  // classes instead of over-weighting the crowded ones.
  std::vector<std::vector<std::string>> consonant_classes;
};

Inventory split_inventory() {
  Inventory inv;
  std::map<int, std::vector<std::string>> by_class;
  for (std::string_view code : phone_inventory()) {
    if (code == "sp") continue;
    if (is_vowel_code(code)) {
      std::string base(code.substr(0, code.size() - 1));
      if (std::find(inv.vowels.begin(), inv.vowels.end(), base) ==
          inv.vowels.end()) {
        inv.vowels.push_back(base);
      }
    } else {
      by_class[viseme_of(code).value()].emplace_back(code);
    }
  }
  for (auto& [viseme, codes] : by_class) {
    inv.consonant_classes.push_back(std::move(codes));
  }
  return inv;
}

// Median phone duration (seconds) per viseme class, index = viseme value - 1.
// Vowel classes run long, stop consonants short, silence longest; the spread
// plus the log-normal jitter below gives every class a wide max/min ratio.
constexpr double kMedianDuration[VisemeId::kCount] = {
    0.115, 0.095, 0.125, 0.150, 0.120, 0.105, 0.100, 0.110, 0.095,  // v01-v09
    0.075, 0.060, 0.065, 0.055, 0.030, 0.080, 0.070, 0.180,         // v10-v17
};
constexpr double kDurationSigma = 0.40;

double sample_duration(const PhoneLabel& label, Rng& rng) {
  double median = kMedianDuration[label.viseme().index()];
  double d = median * std::exp(kDurationSigma * rng.gauss());
  return std::clamp(d, 0.015, 0.8);
}

struct Lexeme {
  std::string text;
  PronunciationDict::Pron pron;
};

Lexeme make_word(const Inventory& inv, Rng& rng) {
  Lexeme out;
  // Pick a viseme class first, then a code inside it: keeps the mouth-shape
  // classes balanced even though some hold many more codes than others.
  auto consonant = [&]() -> const std::string& {
    const auto& cls =
        inv.consonant_classes[rng.next_index(inv.consonant_classes.size())];
    return cls[rng.next_index(cls.size())];
  };
  double r = rng.next_double();
  int syllables = r < 0.35 ? 1 : (r < 0.80 ? 2 : 3);
  for (int s = 0; s < syllables; ++s) {
    // Optional onset of one or two consonants.
    double onset = rng.next_double();
    if (onset < 0.80) {
      out.pron.emplace_back(consonant());
      if (onset < 0.18) {
        out.pron.emplace_back(consonant());
      }
    }
    // Nucleus: a stressed vowel on the first syllable, mostly unstressed after.
    const std::string& base = inv.vowels[rng.next_index(inv.vowels.size())];
    char stress;
    if (s == 0) {
      stress = rng.next_double() < 0.80 ? '1' : '2';
    } else {
      stress = rng.next_double() < 0.85 ? '0' : '2';
    }
    out.pron.emplace_back(base + stress);
    // Optional coda.
    double coda = rng.next_double();
    if (coda < 0.55) {
      out.pron.emplace_back(consonant());
      if (coda < 0.10) {
        out.pron.emplace_back(consonant());
      }
    }
  }
  for (const PhoneLabel& label : out.pron) {
    for (char c : label.text()) {
      if (c >= '0' && c <= '9') continue;
      out.text.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

GeneratedCorpus generate_corpus(const CorpusGenConfig& config) {
  if (config.sentences == 0 || config.lexicon_size == 0 ||
      config.min_words == 0 || config.max_words < config.min_words ||
      config.zipf_exponent <= 0.0) {
    throw ParseError("corpus generator: invalid configuration");
  }
  Inventory inv = split_inventory();
  Rng rng(config.seed);

  // Build a lexicon of distinct pseudo-words; de-duplicate by spelling.
  std::vector<Lexeme> lexicon;
  std::map<std::string, int> used;
  std::size_t attempts = 0;
  while (lexicon.size() < config.lexicon_size &&
         attempts < config.lexicon_size * 40) {
    ++attempts;
    Lexeme w = make_word(inv, rng);
    int& n = used[w.text];
    if (n > 0) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "%d", n + 1);
      w.text += suffix;
    }
    ++n;
    lexicon.push_back(std::move(w));
  }

  GeneratedCorpus out;
  for (const Lexeme& w : lexicon) {
    out.dictionary.add(w.text, w.pron);
  }

  // Zipf weights over lexicon ranks.
  std::vector<double> cumulative(lexicon.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    total += 1.0 / std::pow(static_cast<double>(i + 1), config.zipf_exponent);
    cumulative[i] = total;
  }
  auto pick_word = [&]() -> const Lexeme& {
    double r = rng.next_double() * total;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx >= lexicon.size()) idx = lexicon.size() - 1;
    return lexicon[idx];
  };

  std::vector<Word> words;
  std::vector<Phone> phones;
  std::vector<IndexRange> sentences;
  double cursor = 0.0;
  const PhoneLabel sp("sp");

  auto push_sp = [&](double duration) {
    std::size_t pb = phones.size();
    phones.push_back(Phone{sp, cursor, cursor + duration});
    words.push_back(Word{"sp", cursor, cursor + duration, {pb, pb + 1}});
    cursor += duration;
  };

  for (std::size_t s = 0; s < config.sentences; ++s) {
    std::size_t word_begin = words.size();
    std::size_t count =
        config.min_words + rng.next_index(config.max_words - config.min_words + 1);
    for (std::size_t wi = 0; wi < count; ++wi) {
      const Lexeme& lex = pick_word();
      std::size_t pb = phones.size();
      double t0 = cursor;
      for (const PhoneLabel& label : lex.pron) {
        double d = sample_duration(label, rng);
        phones.push_back(Phone{label, cursor, cursor + d});
        cursor += d;
      }
      words.push_back(Word{lex.text, t0, cursor, {pb, phones.size()}});
      // Occasional short mid-sentence pause (kept under the 0.3 s threshold
      // that would end the sentence).
      if (wi + 1 < count && rng.next_double() < config.pause_prob) {
        push_sp(rng.uniform(0.06, 0.25));
      }
    }
    // Long gap between sentences; the trailing silence belongs to the
    // sentence it follows.
    if (s + 1 < config.sentences) {
      push_sp(rng.uniform(0.40, 0.80));
    }
    sentences.push_back(IndexRange{word_begin, words.size()});
  }

  out.transcript = AlignedTranscript::from_parts(
      std::move(words), PhoneSequence::from_phones(std::move(phones)),
      std::move(sentences));
  return out;
}

ParameterTrack synthesize_track(const AlignedTranscript& transcript, double fps,
                                std::uint64_t seed) {
  if (fps <= 0.0) throw ParseError("track synthesis: fps must be positive");
  const PhoneSequence& phones = transcript.phones();
  if (phones.empty()) throw EmptyInput("track synthesis: empty transcript");

  using PV = ParameterVector;
  // Cover the transcript to the next whole frame: the duration then agrees
  // with the alignment to within one frame.
  double end = phones[phones.size() - 1].t_out;
  std::size_t frame_count = static_cast<std::size_t>(std::ceil(end * fps));
  if (frame_count == 0) frame_count = 1;

  // Deterministic per-dimension phases/offsets.
  auto unit = [&](std::uint64_t tag) {
    return static_cast<double>(hash64(seed, tag) >> 11) * 0x1.0p-53;
  };
  std::array<double, PV::kDim> phase{};
  std::array<double, PV::kDim> offset{};
  for (std::size_t k = 0; k < PV::kDim; ++k) {
    phase[k] = unit(k) * 2.0 * std::numbers::pi;
    offset[k] = unit(1000 + k) * 2.0 - 1.0;
  }
  // Expression basis: one signature vector per viseme class.
  std::array<std::array<double, PV::kExpressionDim>, VisemeId::kCount> basis{};
  for (int v = 0; v < VisemeId::kCount; ++v) {
    for (std::size_t k = 0; k < PV::kExpressionDim; ++k) {
      basis[v][k] =
          (static_cast<double>(hash64(seed, 4000 + v * 101 + k) >> 11) *
               0x1.0p-53) *
              1.6 -
          0.8;
    }
  }

  // Phone centers for smooth viseme interpolation.
  std::vector<double> centers(phones.size());
  for (std::size_t i = 0; i < phones.size(); ++i) {
    centers[i] = 0.5 * (phones[i].t_in + phones[i].t_out);
  }

  auto expression_base = [&](double t, std::size_t k) {
    auto it = std::lower_bound(centers.begin(), centers.end(), t);
    if (it == centers.begin()) {
      return basis[phones[0].label.viseme().index()][k];
    }
    if (it == centers.end()) {
      return basis[phones[phones.size() - 1].label.viseme().index()][k];
    }
    std::size_t hi = static_cast<std::size_t>(it - centers.begin());
    std::size_t lo = hi - 1;
    double u = (t - centers[lo]) / (centers[hi] - centers[lo]);
    double a = basis[phones[lo].label.viseme().index()][k];
    double b = basis[phones[hi].label.viseme().index()][k];
    return a + (b - a) * u;
  };

  constexpr double kTau = 2.0 * std::numbers::pi;
  ParameterTrack track;
  track.fps = fps;
  track.frames.resize(frame_count);
  for (std::size_t j = 0; j < frame_count; ++j) {
    double t = static_cast<double>(j) / fps;
    PV& f = track.frames[j];
    for (std::size_t k = 0; k < PV::kPoseDim; ++k) {
      std::size_t d = PV::kPoseOffset + k;
      f.v[d] = 0.12 * std::sin(kTau * t / (4.0 + 0.7 * k) + phase[d]);
    }
    for (std::size_t k = 0; k < PV::kGeometryDim; ++k) {
      std::size_t d = PV::kGeometryOffset + k;
      f.v[d] = offset[d] + 0.5 * std::sin(kTau * t / (9.0 + 0.3 * k) + phase[d]);
    }
    for (std::size_t k = 0; k < PV::kReflectanceDim; ++k) {
      std::size_t d = PV::kReflectanceOffset + k;
      f.v[d] =
          offset[d] + 0.35 * std::sin(kTau * t / (14.0 + 0.4 * k) + phase[d]);
    }
    for (std::size_t k = 0; k < PV::kExpressionDim; ++k) {
      std::size_t d = PV::kExpressionOffset + k;
      f.v[d] = expression_base(t, k) +
               0.04 * std::sin(kTau * t * (0.9 + 0.013 * k) + phase[d]);
    }
    for (std::size_t k = 0; k < PV::kIlluminationDim; ++k) {
      std::size_t d = PV::kIlluminationOffset + k;
      f.v[d] =
          offset[d] + 0.3 * std::sin(kTau * t / (11.0 + 0.45 * k) + phase[d]);
    }
  }
  return track;
}

}  // namespace visedit
