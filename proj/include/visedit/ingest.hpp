#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visedit/core.hpp"
#include "visedit/errors.hpp"

namespace visedit {

// Half-open [begin, end) index range.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }

  bool operator==(const IndexRange&) const = default;
};

// A transcript word spanning a contiguous run of phones.
struct Word {
  std::string text;
  double t_in = 0.0;
  double t_out = 0.0;
  IndexRange phones;

  bool operator==(const Word&) const = default;
};

// Time-aligned transcript: words over a global phone sequence, grouped into
// sentences. Sentences partition the word list into contiguous runs.
class AlignedTranscript {
 public:
  AlignedTranscript() = default;

  // Validates word/phone consistency and the sentence partition. With an
  // empty `sentences`, boundaries are derived from silences: a pause of more
  // than 0.3 s (a long "sp" word, or a gap between words) closes a sentence,
  // and trailing silence sticks to the sentence before it.
  static AlignedTranscript from_parts(std::vector<Word> words,
                                      PhoneSequence phones,
                                      std::vector<IndexRange> sentences = {});

  const std::vector<Word>& words() const { return words_; }
  const PhoneSequence& phones() const { return phones_; }
  // Word index ranges, one per sentence, in order.
  const std::vector<IndexRange>& sentences() const { return sentences_; }

  std::size_t sentence_of_word(std::size_t word_index) const;
  IndexRange sentence_phone_range(std::size_t sentence_index) const;
  // True when every phone of the word is silence.
  bool word_is_silence(std::size_t word_index) const;

  bool operator==(const AlignedTranscript&) const = default;

 private:
  std::vector<Word> words_;
  PhoneSequence phones_;
  std::vector<IndexRange> sentences_;
};

// Word -> pronunciation variants, ordered as listed in the source file.
class PronunciationDict {
 public:
  using Pron = std::vector<PhoneLabel>;

  void add(std::string_view word, Pron pron);
  // Null when the word is absent. Lookup is case-insensitive.
  const std::vector<Pron>* lookup(std::string_view word) const;
  // Throws OutOfVocabulary for a missing word, ParseError for a bad variant.
  const Pron& pron(std::string_view word, std::size_t variant = 0) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<Pron>> entries_;
};

// One frame of the face model: 257 coefficients in fixed block order.
struct ParameterVector {
  static constexpr std::size_t kDim = 257;
  static constexpr std::size_t kPoseOffset = 0;
  static constexpr std::size_t kPoseDim = 6;
  static constexpr std::size_t kGeometryOffset = 6;
  static constexpr std::size_t kGeometryDim = 80;
  static constexpr std::size_t kReflectanceOffset = 86;
  static constexpr std::size_t kReflectanceDim = 80;
  static constexpr std::size_t kExpressionOffset = 166;
  static constexpr std::size_t kExpressionDim = 64;
  static constexpr std::size_t kIlluminationOffset = 230;
  static constexpr std::size_t kIlluminationDim = 27;

  std::array<double, kDim> v{};

  std::span<double, kPoseDim> pose() {
    return std::span<double, kPoseDim>{v.data() + kPoseOffset, kPoseDim};
  }
  std::span<const double, kPoseDim> pose() const {
    return std::span<const double, kPoseDim>{v.data() + kPoseOffset, kPoseDim};
  }
  std::span<double, kGeometryDim> geometry() {
    return std::span<double, kGeometryDim>{v.data() + kGeometryOffset,
                                           kGeometryDim};
  }
  std::span<const double, kGeometryDim> geometry() const {
    return std::span<const double, kGeometryDim>{v.data() + kGeometryOffset,
                                                 kGeometryDim};
  }
  std::span<double, kReflectanceDim> reflectance() {
    return std::span<double, kReflectanceDim>{v.data() + kReflectanceOffset,
                                              kReflectanceDim};
  }
  std::span<const double, kReflectanceDim> reflectance() const {
    return std::span<const double, kReflectanceDim>{v.data() + kReflectanceOffset,
                                                    kReflectanceDim};
  }
  std::span<double, kExpressionDim> expression() {
    return std::span<double, kExpressionDim>{v.data() + kExpressionOffset,
                                             kExpressionDim};
  }
  std::span<const double, kExpressionDim> expression() const {
    return std::span<const double, kExpressionDim>{v.data() + kExpressionOffset,
                                                   kExpressionDim};
  }
  std::span<double, kIlluminationDim> illumination() {
    return std::span<double, kIlluminationDim>{v.data() + kIlluminationOffset,
                                               kIlluminationDim};
  }
  std::span<const double, kIlluminationDim> illumination() const {
    return std::span<const double, kIlluminationDim>{v.data() + kIlluminationOffset,
                                                     kIlluminationDim};
  }

  bool operator==(const ParameterVector&) const = default;
};

// Per-frame face parameters at a fixed rate.
struct ParameterTrack {
  double fps = 0.0;
  std::vector<ParameterVector> frames;

  double duration() const {
    return fps > 0.0 ? static_cast<double>(frames.size()) / fps : 0.0;
  }

  bool operator==(const ParameterTrack&) const = default;
};

enum class EditKind { Insert, Delete, Rearrange };

// One word of the edited text. Words kept from the original carry
// orig_index; new words may carry explicit per-phone durations (seconds).
struct EditWord {
  std::string text;
  std::optional<std::size_t> orig_index;
  std::optional<std::vector<double>> phone_timings;

  bool operator==(const EditWord&) const = default;
};

// The desired word sequence for a span of the transcript. `anchor` (a word
// index) locates a pure insertion that has no kept words to anchor it.
struct EditSpec {
  EditKind kind = EditKind::Insert;
  std::size_t anchor = 0;
  std::vector<EditWord> words;

  bool operator==(const EditSpec&) const = default;
};

// Fallback phone durations for new words, by viseme group. Entries with no
// data are NaN.
struct DurationDefaults {
  std::array<double, VisemeId::kCount> median_by_viseme;
  double fallback = 0.0;
};

// How a run of query phones relates to the original footage.
struct QueryPiece {
  enum class Kind {
    Kept,     // a word reused from the transcript
    Silence,  // an inter-word pause retained between adjacent kept words
    New       // a word to be synthesized from retrieved snippets
  };

  Kind kind = Kind::New;
  IndexRange query_phones;
  // Transcript phone range (Kept/Silence only).
  IndexRange source_phones;
  // Index into EditSpec::words (Kept/New only).
  std::size_t edit_word = static_cast<std::size_t>(-1);

  bool operator==(const QueryPiece&) const = default;
};

struct QueryBuild {
  PhoneSequence query;
  std::vector<QueryPiece> pieces;
};

// ---- Parsing and serialization ----

// Transcript JSON: {"words":[{"text","t_in","t_out","phones":[{"lbl","t_in",
// "t_out"},...]},...],"sentences":[[word indices],...]} with "sentences"
// optional. Throws ParseError / OverlapError / UnknownPhoneme.
AlignedTranscript parse_alignment(std::string_view json_text);
std::string serialize_alignment(const AlignedTranscript& transcript);

// Dictionary text: one "WORD CODE CODE..." per line, "WORD(2)" for extra
// variants, "#" lines ignored.
PronunciationDict parse_dictionary(std::string_view text);

// Parameter track, either the binary layout ("VFTK", version, fps, count,
// then count*257 little-endian doubles) or the JSON equivalent
// {"fps":...,"frames":[[257 numbers],...]}.
ParameterTrack parse_parameter_track(std::string_view bytes);
std::string serialize_parameter_track(const ParameterTrack& track);

// Edit JSON: {"kind":"insert|delete|rearrange","anchor":N,"words":[{"text",
// "orig_index","phone_timings"},...]}.
EditSpec parse_edit_spec(std::string_view json_text);
std::string serialize_edit_spec(const EditSpec& edit);

// File wrappers; throw IoError when the file cannot be read/written.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// ---- Query construction ----

// Median phone duration per viseme group over the whole transcript.
DurationDefaults duration_defaults_from(const AlignedTranscript& transcript);

// Lays the edited words out on a fresh timeline starting at 0. Kept words
// keep their original phone labels and durations; pauses between kept words
// that are adjacent in the edit survive; new words take dictionary phones
// with explicit timings or per-viseme default durations. `pron_choice` picks
// dictionary variants by (upper-case) word.
QueryBuild build_query_detailed(const EditSpec& edit,
                                const PronunciationDict& dict,
                                const AlignedTranscript& transcript,
                                const DurationDefaults& defaults,
                                const std::map<std::string, int>& pron_choice = {});
PhoneSequence build_query(const EditSpec& edit, const PronunciationDict& dict,
                          const AlignedTranscript& transcript,
                          const DurationDefaults& defaults,
                          const std::map<std::string, int>& pron_choice = {});

}  // namespace visedit
