// Writes a self-consistent input set for the planner: a generated aligned
// transcript, its pronunciation dictionary, a synthesized parameter track,
// and three sample edits (insert / delete / rearrange) built from words that
// actually occur in the transcript.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "visedit/corpus_gen.hpp"
#include "visedit/ingest.hpp"

namespace fs = std::filesystem;
using namespace visedit;

namespace {

// First sentence with at least `need` speech words; returns its word
// indices (silences skipped).
std::vector<std::size_t> pick_sentence(const AlignedTranscript& t,
                                       std::size_t need) {
  for (std::size_t s = 0; s < t.sentences().size(); ++s) {
    std::vector<std::size_t> speech;
    IndexRange r = t.sentences()[s];
    for (std::size_t w = r.begin; w < r.end; ++w) {
      if (!t.word_is_silence(w)) speech.push_back(w);
    }
    if (speech.size() >= need) return speech;
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic planner fixture"};
  std::string out;
  std::uint64_t seed = 7;
  std::size_t sentences = 20;
  std::size_t lexicon = 160;
  double fps = 25.0;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--sentences", sentences, "Sentence count")
      ->check(CLI::PositiveNumber);
  app.add_option("--lexicon", lexicon, "Lexicon size")
      ->check(CLI::PositiveNumber);
  app.add_option("--fps", fps, "Track frame rate")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  CorpusGenConfig cfg;
  cfg.seed = seed;
  cfg.sentences = sentences;
  cfg.lexicon_size = lexicon;
  GeneratedCorpus corpus = generate_corpus(cfg);
  const AlignedTranscript& t = corpus.transcript;

  fs::create_directories(out);
  write_file(fs::path(out) / "alignment.json", serialize_alignment(t));
  write_file(fs::path(out) / "track.vftk",
             serialize_parameter_track(synthesize_track(t, fps, seed)));

  // Dictionary text round-trips through the shared parser.
  std::string dict_text;
  {
    // Emit one line per word in first-seen transcript order for stability.
    std::string done;
    for (const Word& w : t.words()) {
      if (w.text == "sp") continue;
      const auto* prons = corpus.dictionary.lookup(w.text);
      if (!prons) continue;
      std::string upper = w.text;
      for (char& c : upper)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      std::string needle = "\n" + upper + " ";
      if (("\n" + dict_text).find(needle) != std::string::npos) continue;
      dict_text += upper;
      for (const PhoneLabel& p : (*prons)[0]) dict_text += " " + p.text();
      dict_text += "\n";
    }
  }
  write_file(fs::path(out) / "dict.txt", dict_text);

  // Sample edits over the longest early sentence: re-speak its words with
  // one inserted, one deleted, and two swapped.
  std::vector<std::size_t> speech = pick_sentence(t, 4);
  if (speech.size() < 4) {
    std::fprintf(stderr, "genfixture: corpus too small for sample edits\n");
    return 1;
  }
  auto kept_word = [&](std::size_t wi) {
    EditWord w;
    w.text = t.words()[wi].text;
    w.orig_index = wi;
    return w;
  };
  // A donor word from a different sentence to insert.
  std::size_t donor = 0;
  std::size_t last_sentence = t.sentences().size() - 1;
  IndexRange lr = t.sentences()[last_sentence];
  for (std::size_t w = lr.begin; w < lr.end; ++w) {
    if (!t.word_is_silence(w)) donor = w;
  }

  EditSpec insert;
  insert.kind = EditKind::Insert;
  insert.words = {kept_word(speech[0]), kept_word(speech[1])};
  EditWord fresh;
  fresh.text = t.words()[donor].text;
  insert.words.push_back(fresh);
  insert.words.push_back(kept_word(speech[2]));
  insert.words.push_back(kept_word(speech[3]));
  write_file(fs::path(out) / "edit_insert.json", serialize_edit_spec(insert));

  EditSpec del;
  del.kind = EditKind::Delete;
  del.words = {kept_word(speech[0]), kept_word(speech[2]),
               kept_word(speech[3])};
  write_file(fs::path(out) / "edit_delete.json", serialize_edit_spec(del));

  EditSpec rearrange;
  rearrange.kind = EditKind::Rearrange;
  rearrange.words = {kept_word(speech[1]), kept_word(speech[0]),
                     kept_word(speech[2]), kept_word(speech[3])};
  write_file(fs::path(out) / "edit_rearrange.json",
             serialize_edit_spec(rearrange));

  std::printf("fixture: %zu sentences, %zu phones, %g fps -> %s\n",
              t.sentences().size(), t.phones().size(), fps, out.c_str());
  return 0;
}
