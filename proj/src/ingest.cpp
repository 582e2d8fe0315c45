#include "visedit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace visedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// A pause longer than this closes a sentence when no explicit sentence list
// is given.
constexpr double kSentencePauseS = 0.3;

std::string upper(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

const json& need(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(ctx + ": missing \"" + key + "\"");
  return *it;
}

double need_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) throw ParseError(ctx + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

std::string need_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_string()) throw ParseError(ctx + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

std::vector<IndexRange> derive_sentences(const std::vector<Word>& words,
                                         const PhoneSequence& phones) {
  std::vector<IndexRange> out;
  std::size_t begin = 0;
  auto is_silence_word = [&](const Word& w) {
    for (std::size_t p = w.phones.begin; p < w.phones.end; ++p) {
      if (!phones[p].label.is_silence()) return false;
    }
    return !w.phones.empty();
  };
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i + 1 >= words.size()) break;
    bool content_so_far = false;
    for (std::size_t k = begin; k <= i && !content_so_far; ++k) {
      content_so_far = !is_silence_word(words[k]);
    }
    if (!content_so_far) continue;  // never emit a silence-only sentence

    const double pause_len = words[i].t_out - words[i].t_in;
    const double gap = phones[words[i + 1].phones.begin].t_in -
                       phones[words[i].phones.end - 1].t_out;
    const bool boundary =
        (is_silence_word(words[i]) && pause_len > kSentencePauseS) ||
        gap > kSentencePauseS;
    if (boundary) {
      out.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  if (begin < words.size()) out.push_back({begin, words.size()});
  return out;
}

}  // namespace

AlignedTranscript AlignedTranscript::from_parts(std::vector<Word> words,
                                                PhoneSequence phones,
                                                std::vector<IndexRange> sentences) {
  // Words must tile the phone list in order.
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const Word& w = words[i];
    if (w.phones.begin != cursor || w.phones.end <= w.phones.begin ||
        w.phones.end > phones.size()) {
      throw ParseError("word '" + w.text + "' has a bad phone range");
    }
    cursor = w.phones.end;
    if (!(w.t_in < w.t_out)) {
      throw ParseError("word '" + w.text + "' has non-positive duration");
    }
    if (w.t_in > phones[w.phones.begin].t_in ||
        w.t_out < phones[w.phones.end - 1].t_out) {
      throw ParseError("word '" + w.text + "' does not span its phones");
    }
  }
  if (cursor != phones.size()) {
    throw ParseError("phones outside any word");
  }

  if (sentences.empty() && !words.empty()) {
    sentences = derive_sentences(words, phones);
  }
  std::size_t wcursor = 0;
  for (const IndexRange& s : sentences) {
    if (s.begin != wcursor || s.end <= s.begin || s.end > words.size()) {
      throw ParseError("sentence ranges must partition the word list");
    }
    wcursor = s.end;
  }
  if (wcursor != words.size()) {
    throw ParseError("sentence ranges must cover every word");
  }

  AlignedTranscript t;
  t.words_ = std::move(words);
  t.phones_ = std::move(phones);
  t.sentences_ = std::move(sentences);
  return t;
}

std::size_t AlignedTranscript::sentence_of_word(std::size_t word_index) const {
  for (std::size_t s = 0; s < sentences_.size(); ++s) {
    if (sentences_[s].contains(word_index)) return s;
  }
  throw ParseError("word index out of range");
}

IndexRange AlignedTranscript::sentence_phone_range(std::size_t sentence_index) const {
  const IndexRange& s = sentences_.at(sentence_index);
  return IndexRange{words_[s.begin].phones.begin, words_[s.end - 1].phones.end};
}

bool AlignedTranscript::word_is_silence(std::size_t word_index) const {
  const Word& w = words_.at(word_index);
  for (std::size_t p = w.phones.begin; p < w.phones.end; ++p) {
    if (!phones_[p].label.is_silence()) return false;
  }
  return true;
}

AlignedTranscript parse_alignment(std::string_view json_text) {
  json doc = parse_json(json_text, "alignment");
  if (!doc.is_object()) throw ParseError("alignment: top level must be an object");

  const json& jwords = need(doc, "words", "alignment");
  if (!jwords.is_array()) throw ParseError("alignment: \"words\" must be an array");

  std::vector<Word> words;
  std::vector<Phone> phones;
  for (std::size_t i = 0; i < jwords.size(); ++i) {
    const json& jw = jwords[i];
    const std::string ctx = "alignment word " + std::to_string(i);
    Word w;
    w.text = need_string(jw, "text", ctx);
    w.t_in = need_number(jw, "t_in", ctx);
    w.t_out = need_number(jw, "t_out", ctx);
    const json& jphones = need(jw, "phones", ctx);
    if (!jphones.is_array() || jphones.empty()) {
      throw ParseError(ctx + ": \"phones\" must be a non-empty array");
    }
    w.phones.begin = phones.size();
    for (const json& jp : jphones) {
      Phone p{PhoneLabel(need_string(jp, "lbl", ctx)),
              need_number(jp, "t_in", ctx), need_number(jp, "t_out", ctx)};
      phones.push_back(p);
    }
    w.phones.end = phones.size();
    words.push_back(std::move(w));
  }

  std::vector<IndexRange> sentences;
  if (auto it = doc.find("sentences"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("alignment: \"sentences\" must be an array");
    for (const json& js : *it) {
      if (!js.is_array() || js.empty()) {
        throw ParseError("alignment: each sentence must be a non-empty array of word indices");
      }
      IndexRange r{js[0].get<std::size_t>(), js[0].get<std::size_t>()};
      std::size_t prev = 0;
      bool first = true;
      for (const json& ji : js) {
        if (!ji.is_number_integer() || ji.get<long long>() < 0) {
          throw ParseError("alignment: sentence word indices must be non-negative integers");
        }
        const std::size_t idx = ji.get<std::size_t>();
        if (!first && idx != prev + 1) {
          throw ParseError("alignment: sentence word indices must be consecutive");
        }
        prev = idx;
        first = false;
        r.end = idx + 1;
      }
      sentences.push_back(r);
    }
  }

  return AlignedTranscript::from_parts(std::move(words),
                                       PhoneSequence::from_phones(std::move(phones)),
                                       std::move(sentences));
}

std::string serialize_alignment(const AlignedTranscript& transcript) {
  ordered_json doc;
  doc["words"] = ordered_json::array();
  for (const Word& w : transcript.words()) {
    ordered_json jw;
    jw["text"] = w.text;
    jw["t_in"] = w.t_in;
    jw["t_out"] = w.t_out;
    jw["phones"] = ordered_json::array();
    for (std::size_t p = w.phones.begin; p < w.phones.end; ++p) {
      const Phone& ph = transcript.phones()[p];
      jw["phones"].push_back(
          {{"lbl", ph.label.text()}, {"t_in", ph.t_in}, {"t_out", ph.t_out}});
    }
    doc["words"].push_back(std::move(jw));
  }
  doc["sentences"] = ordered_json::array();
  for (const IndexRange& s : transcript.sentences()) {
    ordered_json js = ordered_json::array();
    for (std::size_t i = s.begin; i < s.end; ++i) js.push_back(i);
    doc["sentences"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

void PronunciationDict::add(std::string_view word, Pron pron) {
  entries_[upper(word)].push_back(std::move(pron));
}

const std::vector<PronunciationDict::Pron>* PronunciationDict::lookup(
    std::string_view word) const {
  auto it = entries_.find(upper(word));
  return it == entries_.end() ? nullptr : &it->second;
}

const PronunciationDict::Pron& PronunciationDict::pron(std::string_view word,
                                                       std::size_t variant) const {
  const auto* variants = lookup(word);
  if (!variants) throw OutOfVocabulary("word '" + std::string(word) + "' is not in the dictionary");
  if (variant >= variants->size()) {
    throw ParseError("word '" + std::string(word) + "' has no pronunciation variant " +
                     std::to_string(variant + 1));
  }
  return (*variants)[variant];
}

PronunciationDict parse_dictionary(std::string_view text) {
  PronunciationDict dict;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;  // blank line
    if (word[0] == '#') continue; // comment
    // Strip a "(2)"-style variant suffix; variants are kept in file order.
    if (word.back() == ')') {
      auto open = word.rfind('(');
      if (open == std::string::npos || open == 0 || open + 2 > word.size() - 1) {
        throw ParseError("dictionary line " + std::to_string(lineno) + ": bad variant suffix");
      }
      for (std::size_t i = open + 1; i + 1 < word.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(word[i]))) {
          throw ParseError("dictionary line " + std::to_string(lineno) + ": bad variant suffix");
        }
      }
      word.erase(open);
    }
    PronunciationDict::Pron pron;
    std::string code;
    while (ls >> code) pron.emplace_back(code);
    if (pron.empty()) {
      throw ParseError("dictionary line " + std::to_string(lineno) + ": no phones for '" + word + "'");
    }
    dict.add(word, std::move(pron));
  }
  return dict;
}

namespace {

constexpr char kTrackMagic[4] = {'V', 'F', 'T', 'K'};
constexpr std::uint32_t kTrackVersion = 1;

static_assert(sizeof(ParameterVector) == ParameterVector::kDim * sizeof(double),
              "frames must be tightly packed");

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;  // little-endian host assumed
}

ParameterTrack parse_track_binary(std::string_view bytes) {
  constexpr std::size_t kHeader = 4 + 4 + 8 + 8;
  if (bytes.size() < kHeader) throw ParseError("track: truncated header");
  const char* p = bytes.data();
  const auto version = read_le<std::uint32_t>(p + 4);
  if (version != kTrackVersion) {
    throw ParseError("track: unsupported version " + std::to_string(version));
  }
  const double fps = read_le<double>(p + 8);
  if (!std::isfinite(fps) || fps <= 0.0) throw ParseError("track: bad fps");
  const auto count = read_le<std::uint64_t>(p + 16);
  const std::uint64_t payload = count * ParameterVector::kDim * sizeof(double);
  if (bytes.size() != kHeader + payload) {
    throw ParseError("track: size does not match frame count");
  }
  ParameterTrack track;
  track.fps = fps;
  track.frames.resize(count);
  if (count > 0) std::memcpy(track.frames.data(), p + kHeader, payload);
  return track;
}

ParameterTrack parse_track_json(std::string_view text) {
  json doc = parse_json(text, "track");
  if (!doc.is_object()) throw ParseError("track: top level must be an object");
  ParameterTrack track;
  track.fps = need_number(doc, "fps", "track");
  if (!std::isfinite(track.fps) || track.fps <= 0.0) throw ParseError("track: bad fps");
  const json& jframes = need(doc, "frames", "track");
  if (!jframes.is_array()) throw ParseError("track: \"frames\" must be an array");
  track.frames.reserve(jframes.size());
  for (std::size_t i = 0; i < jframes.size(); ++i) {
    const json& row = jframes[i];
    if (!row.is_array() || row.size() != ParameterVector::kDim) {
      throw DimensionError("track frame " + std::to_string(i) + " has " +
                           std::to_string(row.is_array() ? row.size() : 0) +
                           " values, expected " + std::to_string(ParameterVector::kDim));
    }
    ParameterVector f;
    for (std::size_t k = 0; k < ParameterVector::kDim; ++k) {
      if (!row[k].is_number()) throw ParseError("track: frame values must be numbers");
      f.v[k] = row[k].get<double>();
    }
    track.frames.push_back(f);
  }
  return track;
}

}  // namespace

ParameterTrack parse_parameter_track(std::string_view bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kTrackMagic, 4) == 0) {
    return parse_track_binary(bytes);
  }
  for (char c : bytes) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return parse_track_json(bytes);
    break;
  }
  throw ParseError("track: unrecognized format (expected VFTK binary or JSON object)");
}

std::string serialize_parameter_track(const ParameterTrack& track) {
  std::string out;
  const std::uint64_t count = track.frames.size();
  const std::size_t payload = count * ParameterVector::kDim * sizeof(double);
  out.resize(4 + 4 + 8 + 8 + payload);
  char* p = out.data();
  std::memcpy(p, kTrackMagic, 4);
  std::memcpy(p + 4, &kTrackVersion, 4);
  std::memcpy(p + 8, &track.fps, 8);
  std::memcpy(p + 16, &count, 8);
  if (count > 0) std::memcpy(p + 24, track.frames.data(), payload);
  return out;
}

namespace {

void validate_edit_structure(const EditSpec& edit) {
  if (edit.words.empty()) throw ParseError("edit: needs at least one word");
  std::vector<std::size_t> mapped;
  for (const EditWord& w : edit.words) {
    if (w.text.empty()) throw ParseError("edit: word text must be non-empty");
    if (w.orig_index) mapped.push_back(*w.orig_index);
    if (w.phone_timings) {
      if (w.phone_timings->empty()) {
        throw ParseError("edit: phone_timings must be non-empty when present");
      }
      for (double d : *w.phone_timings) {
        if (!std::isfinite(d) || d <= 0.0) {
          throw ParseError("edit: phone_timings must be positive");
        }
      }
    }
  }
  const bool all_mapped = mapped.size() == edit.words.size();
  switch (edit.kind) {
    case EditKind::Insert:
      // Context words must appear in original order.
      for (std::size_t i = 1; i < mapped.size(); ++i) {
        if (mapped[i] <= mapped[i - 1]) {
          throw ParseError("edit: kept words must be in original order for insert");
        }
      }
      break;
    case EditKind::Delete: {
      if (!all_mapped) throw ParseError("edit: delete admits only kept words");
      for (std::size_t i = 1; i < mapped.size(); ++i) {
        if (mapped[i] <= mapped[i - 1]) {
          throw ParseError("edit: delete must keep original word order");
        }
      }
      break;
    }
    case EditKind::Rearrange: {
      if (!all_mapped) throw ParseError("edit: rearrange admits only kept words");
      auto sorted = mapped;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParseError("edit: rearrange must not repeat a word");
      }
      break;
    }
  }
}

}  // namespace

EditSpec parse_edit_spec(std::string_view json_text) {
  json doc = parse_json(json_text, "edit");
  if (!doc.is_object()) throw ParseError("edit: top level must be an object");

  EditSpec edit;
  const std::string kind = need_string(doc, "kind", "edit");
  if (kind == "insert") edit.kind = EditKind::Insert;
  else if (kind == "delete") edit.kind = EditKind::Delete;
  else if (kind == "rearrange") edit.kind = EditKind::Rearrange;
  else throw ParseError("edit: unknown kind '" + kind + "'");

  if (auto it = doc.find("anchor"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      throw ParseError("edit: \"anchor\" must be a non-negative integer");
    }
    edit.anchor = it->get<std::size_t>();
  }

  const json& jwords = need(doc, "words", "edit");
  if (!jwords.is_array()) throw ParseError("edit: \"words\" must be an array");
  for (const json& jw : jwords) {
    EditWord w;
    w.text = need_string(jw, "text", "edit word");
    if (auto it = jw.find("orig_index"); it != jw.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw ParseError("edit: \"orig_index\" must be a non-negative integer");
      }
      w.orig_index = it->get<std::size_t>();
    }
    if (auto it = jw.find("phone_timings"); it != jw.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError("edit: \"phone_timings\" must be an array");
      std::vector<double> timings;
      for (const json& jt : *it) {
        if (!jt.is_number()) throw ParseError("edit: phone_timings must be numbers");
        timings.push_back(jt.get<double>());
      }
      w.phone_timings = std::move(timings);
    }
    edit.words.push_back(std::move(w));
  }

  validate_edit_structure(edit);
  return edit;
}

std::string serialize_edit_spec(const EditSpec& edit) {
  ordered_json doc;
  switch (edit.kind) {
    case EditKind::Insert: doc["kind"] = "insert"; break;
    case EditKind::Delete: doc["kind"] = "delete"; break;
    case EditKind::Rearrange: doc["kind"] = "rearrange"; break;
  }
  doc["anchor"] = edit.anchor;
  doc["words"] = ordered_json::array();
  for (const EditWord& w : edit.words) {
    ordered_json jw;
    jw["text"] = w.text;
    jw["orig_index"] = w.orig_index ? ordered_json(*w.orig_index) : ordered_json(nullptr);
    jw["phone_timings"] =
        w.phone_timings ? ordered_json(*w.phone_timings) : ordered_json(nullptr);
    doc["words"].push_back(std::move(jw));
  }
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing " + path.string());
}

DurationDefaults duration_defaults_from(const AlignedTranscript& transcript) {
  std::array<std::vector<double>, VisemeId::kCount> per_group;
  std::vector<double> all;
  for (const Phone& p : transcript.phones().phones()) {
    per_group[p.label.viseme().index()].push_back(p.duration());
    all.push_back(p.duration());
  }
  auto median = [](std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  DurationDefaults d;
  for (int g = 0; g < VisemeId::kCount; ++g) d.median_by_viseme[g] = median(per_group[g]);
  d.fallback = median(all);
  return d;
}

QueryBuild build_query_detailed(const EditSpec& edit, const PronunciationDict& dict,
                                const AlignedTranscript& transcript,
                                const DurationDefaults& defaults,
                                const std::map<std::string, int>& pron_choice) {
  validate_edit_structure(edit);

  for (const EditWord& w : edit.words) {
    if (!w.orig_index) continue;
    if (*w.orig_index >= transcript.words().size()) {
      throw ParseError("edit: orig_index " + std::to_string(*w.orig_index) +
                       " is out of range");
    }
    const std::string& orig = transcript.words()[*w.orig_index].text;
    if (upper(orig) != upper(w.text)) {
      throw ParseError("edit: word '" + w.text + "' does not match original '" +
                       orig + "'");
    }
  }

  QueryBuild out;
  std::vector<Phone> q;
  double cursor = 0.0;

  auto append_source_range = [&](QueryPiece::Kind kind, IndexRange src,
                                 std::size_t edit_word) {
    QueryPiece piece;
    piece.kind = kind;
    piece.source_phones = src;
    piece.edit_word = edit_word;
    piece.query_phones.begin = q.size();
    for (std::size_t p = src.begin; p < src.end; ++p) {
      const Phone& ph = transcript.phones()[p];
      q.push_back(Phone{ph.label, cursor, cursor + ph.duration()});
      cursor += ph.duration();
    }
    piece.query_phones.end = q.size();
    out.pieces.push_back(piece);
  };

  for (std::size_t wi = 0; wi < edit.words.size(); ++wi) {
    const EditWord& w = edit.words[wi];
    if (w.orig_index) {
      append_source_range(QueryPiece::Kind::Kept,
                          transcript.words()[*w.orig_index].phones, wi);
      // A pause survives when the next edit word keeps the following
      // original content and only silence sits between the two.
      if (wi + 1 < edit.words.size() && edit.words[wi + 1].orig_index) {
        const std::size_t a = *w.orig_index;
        const std::size_t b = *edit.words[wi + 1].orig_index;
        if (b > a + 1) {
          bool only_silence = true;
          for (std::size_t k = a + 1; k < b && only_silence; ++k) {
            only_silence = transcript.word_is_silence(k);
          }
          if (only_silence) {
            append_source_range(QueryPiece::Kind::Silence,
                                IndexRange{transcript.words()[a + 1].phones.begin,
                                           transcript.words()[b - 1].phones.end},
                                static_cast<std::size_t>(-1));
          }
        }
      }
      continue;
    }

    // New word: dictionary phones, explicit or default durations.
    int variant = 0;
    if (auto it = pron_choice.find(upper(w.text)); it != pron_choice.end()) {
      variant = it->second;
    }
    if (variant < 0) throw ParseError("edit: pronunciation variant must be non-negative");
    const auto& pron = dict.pron(w.text, static_cast<std::size_t>(variant));

    std::vector<double> durations;
    if (w.phone_timings) {
      if (w.phone_timings->size() != pron.size()) {
        throw MissingTiming("word '" + w.text + "': " +
                            std::to_string(w.phone_timings->size()) +
                            " timings for " + std::to_string(pron.size()) +
                            " phones");
      }
      durations = *w.phone_timings;
    } else {
      for (const PhoneLabel& label : pron) {
        double d = defaults.median_by_viseme[label.viseme().index()];
        if (std::isnan(d)) d = defaults.fallback;
        if (std::isnan(d) || d <= 0.0) {
          throw MissingTiming("word '" + w.text +
                              "': no duration data for phone " + label.text());
        }
        durations.push_back(d);
      }
    }

    QueryPiece piece;
    piece.kind = QueryPiece::Kind::New;
    piece.edit_word = wi;
    piece.query_phones.begin = q.size();
    for (std::size_t i = 0; i < pron.size(); ++i) {
      q.push_back(Phone{pron[i], cursor, cursor + durations[i]});
      cursor += durations[i];
    }
    piece.query_phones.end = q.size();
    out.pieces.push_back(piece);
  }

  out.query = PhoneSequence::from_phones(std::move(q));
  return out;
}

PhoneSequence build_query(const EditSpec& edit, const PronunciationDict& dict,
                          const AlignedTranscript& transcript,
                          const DurationDefaults& defaults,
                          const std::map<std::string, int>& pron_choice) {
  return build_query_detailed(edit, dict, transcript, defaults, pron_choice).query;
}

}  // namespace visedit
