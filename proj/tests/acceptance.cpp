// Acceptance gate for the edit-planning engine. Each numbered criterion
// prints exactly one PASS/FAIL line; the process exits nonzero if any fail.
// Tolerances and time limits are pinned here, next to the checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "visedit/corpus_gen.hpp"
#include "visedit/errors.hpp"
#include "visedit/ingest.hpp"
#include "visedit/plan.hpp"
#include "visedit/search.hpp"
#include "visedit/stats.hpp"

namespace fs = std::filesystem;
using namespace visedit;

namespace {

// ---------------------------------------------------------------- utilities

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t next_u64() { return hash64(seed_, counter_++); }
  double next_double() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int g_failures = 0;

template <typename Fn>
void criterion(int id, const char* name, Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.fail(std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  if (!out.pass) ++g_failures;
  std::printf("criterion %2d %-34s %s  (%.2f s)%s%s\n", id, name,
              out.pass ? "PASS" : "FAIL", secs, out.detail.empty() ? "" : "  ",
              out.detail.c_str());
  std::fflush(stdout);
}

std::vector<Phone> random_phones(Rng& rng, std::size_t count, double lo,
                                 double hi) {
  auto inventory = phone_inventory();
  std::vector<Phone> out;
  double cursor = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    PhoneLabel label(inventory[rng.index(inventory.size())]);
    double d = rng.uniform(lo, hi);
    out.push_back(Phone{label, cursor, cursor + d});
    cursor += d;
  }
  return out;
}

// Contiguous silence-free phone span of the wanted length from a sentence
// with index >= min_sentence; nullopt when none exists.
std::optional<IndexRange> random_speech_span(const AlignedTranscript& t,
                                             Rng& rng, std::size_t len,
                                             std::size_t min_sentence) {
  std::vector<IndexRange> candidates;
  for (std::size_t s = min_sentence; s < t.sentences().size(); ++s) {
    IndexRange pr = t.sentence_phone_range(s);
    std::size_t run = pr.begin;
    for (std::size_t i = pr.begin; i <= pr.end; ++i) {
      if (i == pr.end || t.phones()[i].label.is_silence()) {
        if (i - run >= len) {
          for (std::size_t b = run; b + len <= i; ++b) {
            candidates.push_back(IndexRange{b, b + len});
          }
        }
        run = i + 1;
      }
    }
  }
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.index(candidates.size())];
}

// Speech-word indices of one sentence.
std::vector<std::size_t> speech_words(const AlignedTranscript& t,
                                      std::size_t sentence) {
  std::vector<std::size_t> out;
  IndexRange r = t.sentences()[sentence];
  for (std::size_t w = r.begin; w < r.end; ++w) {
    if (!t.word_is_silence(w)) out.push_back(w);
  }
  return out;
}

EditWord kept_of(const AlignedTranscript& t, std::size_t wi) {
  EditWord w;
  w.text = t.words()[wi].text;
  w.orig_index = wi;
  return w;
}

constexpr std::size_t kExprOff = ParameterVector::kExpressionOffset;
constexpr std::size_t kExprDim = ParameterVector::kExpressionDim;

double expr_step(const ParameterVector& a, const ParameterVector& b) {
  double m = 0.0;
  for (std::size_t d = kExprOff; d < kExprOff + kExprDim; ++d) {
    m = std::max(m, std::abs(a.v[d] - b.v[d]));
  }
  return m;
}

bool block_eq(const ParameterVector& a, const ParameterVector& b,
              std::size_t off, std::size_t dim) {
  for (std::size_t d = off; d < off + dim; ++d) {
    if (a.v[d] != b.v[d]) return false;
  }
  return true;
}

// ------------------------------------------------------------- criterion 1

void c1_cost_fidelity(Outcome& out) {
  // Randomized table vs the independently coded reference, |err| <= 1e-12.
  Rng rng(101);
  auto inventory = phone_inventory();
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Phone p{PhoneLabel(inventory[rng.index(inventory.size())]), 0.0,
            rng.uniform(0.02, 0.5)};
    Phone q{PhoneLabel(inventory[rng.index(inventory.size())]), 0.0,
            rng.uniform(0.02, 0.5)};
    CostParams params;
    params.chi = rng.next_double() < 0.5 ? 1e-4 : rng.uniform(0.0, 1e-2);
    params.stress_insensitive = rng.next_double() < 0.25;
    double got = swap_cost(p, q, params);
    double want = oracle::swap_cost(p, q, params);
    max_err = std::max(max_err, std::abs(got - want));
  }
  if (max_err > 1e-12) out.fail("max error " + fmt("%.3e", max_err));

  // Worked examples, exact.
  CostParams params;
  auto phone = [](const char* code, double dur) {
    return Phone{PhoneLabel(code), 0.0, dur};
  };
  if (swap_cost(phone("AA1", 0.1), phone("AA1", 0.1), params) != 0.0) {
    out.fail("identical phones not free");
  }
  double same_group =
      swap_cost(phone("AA1", 0.1), phone("AA2", 0.1), params);
  if (std::abs(same_group - 0.1) > 1e-12) {
    out.fail("same-group example " + fmt("%.12f", same_group));
  }
  double cross =
      swap_cost(phone("M", 0.05), phone("F", 0.15), params);
  if (std::abs(cross - 0.20001) > 1e-12) {
    out.fail("cross-group example " + fmt("%.12f", cross));
  }
  if (out.pass) {
    out.detail = "1000 cases, max err " + fmt("%.1e", max_err) +
                 "; worked examples exact";
  }
}

// ------------------------------------------------------------- criterion 2

void c2_matcher_oracle(Outcome& out) {
  Rng rng(202);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    std::size_t np = 1 + rng.index(30);
    std::size_t nq = 1 + rng.index(8);
    PhoneSequence corpus =
        PhoneSequence::from_phones(random_phones(rng, np, 0.02, 0.5));
    PhoneSequence query =
        PhoneSequence::from_phones(random_phones(rng, nq, 0.02, 0.5));
    CostParams params;
    SubsequenceMatch got = match_subsequence(query, corpus, params);
    oracle::Window want = oracle::best_window(query.phones(), 0, query.size(),
                                              corpus.phones(), params);
    if (got.cost != want.cost || got.corpus_range.begin != want.begin ||
        got.corpus_range.end != want.end) {
      ++mismatches;
    }
  }
  if (mismatches > 0) {
    out.fail(std::to_string(mismatches) + " of 1000 instances disagree");
  } else {
    out.detail = "1000 instances exact (cost and window)";
  }
}

// ------------------------------------------------------------- criterion 3

void c3_split_oracle(Outcome& out) {
  Rng rng(303);
  int mismatches = 0;
  for (int i = 0; i < 300; ++i) {
    std::size_t np = 1 + rng.index(30);
    std::size_t nq = 1 + rng.index(6);
    PhoneSequence corpus =
        PhoneSequence::from_phones(random_phones(rng, np, 0.02, 0.5));
    PhoneSequence query =
        PhoneSequence::from_phones(random_phones(rng, nq, 0.02, 0.5));
    CostParams params;
    SearchResult got = search(query, corpus, params);
    oracle::SplitChoice want =
        oracle::best_split(query.phones(), corpus.phones(), params);
    if (got.total_cost != want.total) ++mismatches;
  }
  if (mismatches > 0) {
    out.fail(std::to_string(mismatches) + " of 300 instances disagree");
  } else {
    out.detail = "300 instances exact";
  }
}

// ------------------------------------------------------------- criterion 4

void c4_verbatim(Outcome& out) {
  CorpusGenConfig cfg;
  cfg.seed = 44;
  cfg.sentences = 40;
  cfg.lexicon_size = 150;
  GeneratedCorpus corpus = generate_corpus(cfg);
  const PhoneSequence& phones = corpus.transcript.phones();

  Rng rng(404);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = 1 + rng.index(8);
    std::size_t start = rng.index(phones.size() - len + 1);
    PhoneSequence query = phones.slice(start, start + len);
    CostParams params;
    SearchResult r = search(query, phones, params);
    double want_cost = params.phi / static_cast<double>(len);
    bool ok = r.split.size() == 1 && r.total_cost == want_cost &&
              r.split[0].corpus_range.begin == start &&
              r.split[0].corpus_range.end == start + len;
    if (!ok) ++bad;
  }
  if (bad > 0) {
    out.fail(std::to_string(bad) + " of 200 verbatim queries missed");
  } else {
    out.detail = "200 trials: one segment, original location, cost phi/|Q|";
  }
}

// ------------------------------------------------------------- criterion 5

void c5_snippet_assembly(Outcome& out) {
  using testsupport::WordSpec;
  // Durations are reused as the inserted words' explicit timings, so the
  // intended three-way assembly is the unique zero-mismatch choice.
  const double fresh_d[4] = {0.09, 0.07, 0.12, 0.10};      // F R EH1 SH
  const double dren_d[6] = {0.06, 0.07, 0.11, 0.08, 0.09, 0.07};  // D R EH1 N CH T
  const double roast_d[4] = {0.08, 0.13, 0.10, 0.08};      // R OW1 S T

  std::vector<std::vector<WordSpec>> sentences = {
      {{"hello", {{"HH", 0.06}, {"AH0", 0.06}, {"L", 0.08}, {"OW1", 0.08}}},
       {"world", {{"W", 0.08}, {"ER1", 0.08}, {"L", 0.08}, {"D", 0.08}}}},
      {{"fresh",
        {{"F", fresh_d[0]}, {"R", fresh_d[1]}, {"EH1", fresh_d[2]},
         {"SH", fresh_d[3]}}}},
      {{"drenched",
        {{"D", dren_d[0]}, {"R", dren_d[1]}, {"EH1", dren_d[2]},
         {"N", dren_d[3]}, {"CH", dren_d[4]}, {"T", dren_d[5]}}}},
      {{"roast",
        {{"R", roast_d[0]}, {"OW1", roast_d[1]}, {"S", roast_d[2]},
         {"T", roast_d[3]}}}},
  };
  AlignedTranscript t = testsupport::make_transcript(sentences);
  ParameterTrack track = synthesize_track(t, 25.0, 5);
  PronunciationDict dict = testsupport::test_dictionary();

  EditSpec edit;
  edit.kind = EditKind::Insert;
  EditWord french;
  french.text = "french";
  french.phone_timings = std::vector<double>{fresh_d[0], fresh_d[1],
                                             fresh_d[2], dren_d[3], dren_d[4]};
  EditWord toast;
  toast.text = "toast";
  toast.phone_timings =
      std::vector<double>{dren_d[5], roast_d[1], roast_d[2], roast_d[3]};
  edit.words = {kept_of(t, 0), french, toast, kept_of(t, 1)};

  EditPlan plan = plan_edit(edit, t, track, dict);
  const std::vector<const char*> expect[3] = {
      {"F", "R", "EH1"}, {"N", "CH", "T"}, {"OW1", "S", "T"}};
  if (plan.search.split.size() != 3) {
    out.fail("split has " + std::to_string(plan.search.split.size()) +
             " segments, want 3");
    return;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const SubsequenceMatch& m = plan.search.split[i];
    if (m.corpus_range.size() != expect[i].size()) {
      out.fail("segment " + std::to_string(i) + " spans " +
               std::to_string(m.corpus_range.size()) + " phones");
      continue;
    }
    for (std::size_t j = 0; j < expect[i].size(); ++j) {
      const std::string& got =
          t.phones()[m.corpus_range.begin + j].label.text();
      if (got != expect[i][j]) {
        out.fail("segment " + std::to_string(i) + " phone " +
                 std::to_string(j) + " is " + got);
      }
    }
  }
  if (out.pass) out.detail = "segments source F-R-EH1 / N-CH-T / OW1-S-T";
}

// ----------------------------------------------- shared plan construction

struct TwoSnippetPlan {
  GeneratedCorpus corpus;
  ParameterTrack track;
  EditPlan blended;
  EditPlan unblended;
  std::size_t seam_frame = 0;  // first frame owned by the second snippet
  double seam_time = 0.0;
  double half_width = 0.0;
  FrameRange snippet_a;
  FrameRange snippet_b;
};

// Insert two pseudo-words whose labels and timings copy two disjoint corpus
// spans from different sentences; retrieval then places exactly those spans
// back to back, giving one retrieved|retrieved seam.
std::optional<TwoSnippetPlan> build_two_snippet_plan(std::uint64_t seed,
                                                     double fps) {
  TwoSnippetPlan r;
  CorpusGenConfig cfg;
  cfg.seed = seed;
  cfg.sentences = 10;
  cfg.lexicon_size = 60;
  r.corpus = generate_corpus(cfg);
  const AlignedTranscript& t = r.corpus.transcript;
  r.track = synthesize_track(t, fps, seed);

  Rng rng(seed * 2654435761u + 17);
  // Both snippets must outlast the 67 ms crossfade window, or the fade is
  // legitimately clamped steeper than the bound under test presumes.
  auto span_duration = [&](IndexRange span) {
    double d = 0.0;
    for (std::size_t i = span.begin; i < span.end; ++i) {
      d += t.phones()[i].duration();
    }
    return d;
  };
  std::optional<IndexRange> span_a;
  for (int attempt = 0; attempt < 50 && !span_a; ++attempt) {
    auto cand = random_speech_span(t, rng, 2 + rng.index(3), 1);
    if (!cand) break;
    if (span_duration(*cand) >= 0.08) span_a = cand;
  }
  if (!span_a) return std::nullopt;
  std::optional<IndexRange> span_b;
  std::size_t sentence_a = 0;
  for (std::size_t s = 1; s < t.sentences().size(); ++s) {
    IndexRange pr = t.sentence_phone_range(s);
    if (span_a->begin >= pr.begin && span_a->end <= pr.end) sentence_a = s;
  }
  for (int attempt = 0; attempt < 50 && !span_b; ++attempt) {
    auto cand = random_speech_span(t, rng, 2 + rng.index(3), 1);
    if (!cand) break;
    IndexRange pr = t.sentence_phone_range(sentence_a);
    bool same_sentence = cand->begin >= pr.begin && cand->end <= pr.end;
    if (!same_sentence && span_duration(*cand) >= 0.08) span_b = cand;
  }
  if (!span_b) return std::nullopt;

  auto pron_of = [&](IndexRange span) {
    PronunciationDict::Pron pron;
    for (std::size_t i = span.begin; i < span.end; ++i) {
      pron.push_back(t.phones()[i].label);
    }
    return pron;
  };
  auto timings_of = [&](IndexRange span) {
    std::vector<double> d;
    for (std::size_t i = span.begin; i < span.end; ++i) {
      d.push_back(t.phones()[i].duration());
    }
    return d;
  };
  PronunciationDict dict = r.corpus.dictionary;
  dict.add("ZPIECEA", pron_of(*span_a));
  dict.add("ZPIECEB", pron_of(*span_b));

  std::vector<std::size_t> s0 = speech_words(t, 0);
  if (s0.size() < 2) return std::nullopt;

  EditSpec edit;
  edit.kind = EditKind::Insert;
  EditWord a;
  a.text = "zpiecea";
  a.phone_timings = timings_of(*span_a);
  EditWord b;
  b.text = "zpieceb";
  b.phone_timings = timings_of(*span_b);
  edit.words = {kept_of(t, s0[0]), a, b, kept_of(t, s0[1])};

  PlanOptions options;
  options.window_s = 0.067;
  EditPlan plan = plan_edit(edit, t, r.track, dict, options);
  if (plan.search.split.size() != 2) return std::nullopt;
  if (!(plan.search.split[0].corpus_range == *span_a) ||
      !(plan.search.split[1].corpus_range == *span_b)) {
    return std::nullopt;
  }
  PlanOptions flat = options;
  flat.window_s = 0.0;
  r.unblended = plan_edit(edit, t, r.track, dict, flat);
  r.blended = std::move(plan);

  // Locate the retrieved|retrieved boundary.
  bool found = false;
  for (std::size_t i = 0; i + 1 < r.blended.segments.size(); ++i) {
    const PlacedSegment& sa = r.blended.segments[i];
    const PlacedSegment& sb = r.blended.segments[i + 1];
    if (sa.kind == PlacedSegment::Kind::Retrieved &&
        sb.kind == PlacedSegment::Kind::Retrieved) {
      r.seam_frame = static_cast<std::size_t>(sb.out_frames.begin);
      r.seam_time = sb.out_t0;
      r.snippet_a = sa.out_frames;
      r.snippet_b = sb.out_frames;
      double dur_a = sa.out_t1 - sa.out_t0;
      double dur_b = sb.out_t1 - sb.out_t0;
      r.half_width = std::min({0.067 / 2.0, dur_a / 2.0, dur_b / 2.0});
      found = true;
    }
  }
  if (!found || r.seam_frame == 0) return std::nullopt;
  return r;
}

// ------------------------------------------------------------- criterion 6

void c6_seam_smoothing(Outcome& out) {
  int used = 0;
  int bound_failures = 0;
  int locality_failures = 0;
  int smoothing_checked = 0;
  int smoothing_failures = 0;
  for (std::uint64_t seed = 600; used < 100 && seed < 900; ++seed) {
    auto built = build_two_snippet_plan(seed, 60.0);
    if (!built) continue;
    ++used;
    const auto& xb = built->blended.track.frames;
    const auto& x0 = built->unblended.track.frames;
    std::size_t n = xb.size();
    std::size_t sb = built->seam_frame;
    double fps = built->blended.track.fps;

    // Full parameter gap across the cut, from the unblended output.
    double gap = expr_step(x0[sb], x0[sb - 1]);

    // Blending must be local: everything clear of every transition window
    // (one frame of margin) is bit-identical to the unblended run.
    auto in_any_window = [&](double time, double margin) {
      for (const Transition& tr : built->blended.transitions) {
        if (time >= tr.time - tr.half_width - margin &&
            time < tr.time + tr.half_width + margin) {
          return true;
        }
      }
      return false;
    };
    for (std::size_t j = 0; j < n; ++j) {
      if (in_any_window(static_cast<double>(j) / fps, 1.5 / fps)) continue;
      if (!(xb[j] == x0[j])) {
        ++locality_failures;
        break;
      }
    }

    // Largest step between consecutive frames inside a single snippet,
    // measured on the unblended output (the blend must not be charged with
    // variation the snippets carry themselves).
    double intra = 0.0;
    for (const FrameRange& snip : {built->snippet_a, built->snippet_b}) {
      for (std::int64_t j = snip.begin + 1; j < snip.end; ++j) {
        intra = std::max(intra, expr_step(x0[j], x0[j - 1]));
      }
    }

    // The step across the seam frame pair in the blended output; with
    // blending off this same pair steps by the full parameter gap.
    double seam_step = expr_step(xb[sb], xb[sb - 1]);

    if (seam_step > gap / 4.0 + intra + 1e-9) ++bound_failures;
    if (gap > 4.0 * (intra + 1e-9)) {
      ++smoothing_checked;
      if (!(seam_step < gap)) ++smoothing_failures;
    }
  }
  if (used < 100) {
    out.fail("only " + std::to_string(used) + " plans constructed");
  }
  if (bound_failures > 0) {
    out.fail(std::to_string(bound_failures) +
             " plans exceed gap/4 + intra-snippet step");
  }
  if (locality_failures > 0) {
    out.fail(std::to_string(locality_failures) +
             " plans blend outside the windows");
  }
  if (smoothing_failures > 0) {
    out.fail(std::to_string(smoothing_failures) +
             " large-gap seams not smoothed below the raw gap");
  }
  if (out.pass) {
    out.detail = "100 two-snippet plans at 60 fps; " +
                 std::to_string(smoothing_checked) +
                 " large-gap seams all smoothed";
  }
}

// ----------------------------------------------- randomized whole plans

struct RandomPlan {
  GeneratedCorpus corpus;
  ParameterTrack track;
  EditPlan plan;
};

std::optional<RandomPlan> build_random_plan(std::uint64_t seed) {
  RandomPlan r;
  CorpusGenConfig cfg;
  cfg.seed = seed;
  cfg.sentences = 8;
  cfg.lexicon_size = 70;
  r.corpus = generate_corpus(cfg);
  const AlignedTranscript& t = r.corpus.transcript;
  double fps = (seed % 5 < 2) ? 60.0 : 25.0;
  r.track = synthesize_track(t, fps, seed);

  Rng rng(seed + 31);
  std::vector<std::size_t> s0 = speech_words(t, 0);
  if (s0.size() < 3) return std::nullopt;

  EditSpec edit;
  PronunciationDict dict = r.corpus.dictionary;
  switch (seed % 3) {
    case 0: {  // insert a pseudo-word copied from a later sentence
      std::size_t len = 2 + rng.index(3);
      auto span = random_speech_span(t, rng, len, 1);
      if (!span) return std::nullopt;
      PronunciationDict::Pron pron;
      std::vector<double> timings;
      for (std::size_t i = span->begin; i < span->end; ++i) {
        pron.push_back(t.phones()[i].label);
        timings.push_back(t.phones()[i].duration());
      }
      dict.add("ZINSERT", pron);
      EditWord w;
      w.text = "zinsert";
      w.phone_timings = timings;
      edit.kind = EditKind::Insert;
      std::size_t at = 1 + rng.index(s0.size() - 1);
      for (std::size_t i = 0; i < s0.size(); ++i) {
        if (i == at) edit.words.push_back(w);
        edit.words.push_back(kept_of(t, s0[i]));
      }
      break;
    }
    case 1: {  // delete one interior word
      edit.kind = EditKind::Delete;
      std::size_t drop = 1 + rng.index(s0.size() - 2);
      for (std::size_t i = 0; i < s0.size(); ++i) {
        if (i != drop) edit.words.push_back(kept_of(t, s0[i]));
      }
      break;
    }
    default: {  // swap two adjacent words
      edit.kind = EditKind::Rearrange;
      std::size_t at = rng.index(s0.size() - 1);
      std::vector<std::size_t> order(s0);
      std::swap(order[at], order[at + 1]);
      for (std::size_t wi : order) edit.words.push_back(kept_of(t, wi));
      break;
    }
  }

  PlanOptions options;
  options.fps_out = (seed % 2 == 0) ? 0.0 : 60.0;
  r.plan = plan_edit(edit, t, r.track, dict, options);
  return r;
}

// ------------------------------------------------------------- criterion 7

void c7_block_rules(Outcome& out) {
  using PV = ParameterVector;
  int used = 0;
  int geometry_bad = 0, pose_bad = 0, ramp_bad = 0;
  int ramps_seen = 0;
  for (std::uint64_t seed = 700; used < 100 && seed < 1000; ++seed) {
    auto built = build_random_plan(seed);
    if (!built) continue;
    ++used;
    const EditPlan& plan = built->plan;
    const auto& frames = plan.track.frames;
    const ParameterTrack& src = built->track;
    const FrameRange region = plan.background.region;
    const ParameterVector& head =
        src.frames[static_cast<std::size_t>(region.begin)];

    bool geometry_ok = true, pose_ok = true;
    for (std::size_t j = 0; j < frames.size(); ++j) {
      if (!block_eq(frames[j], head, PV::kGeometryOffset, PV::kGeometryDim) ||
          !block_eq(frames[j], head, PV::kReflectanceOffset,
                    PV::kReflectanceDim)) {
        geometry_ok = false;
      }
      const ParameterVector& mapped = src.frames[static_cast<std::size_t>(
          plan.background.mapping[j])];
      if (!block_eq(frames[j], mapped, PV::kPoseOffset, PV::kPoseDim)) {
        pose_ok = false;
      }
    }
    if (!geometry_ok) ++geometry_bad;
    if (!pose_ok) ++pose_bad;

    // Maximal runs of retrieved-owned frames; the lighting block must ramp
    // linearly between the neighboring output frames (or the region's
    // boundary frames), endpoints excluded.
    std::vector<FrameRange> runs;
    for (const PlacedSegment& seg : plan.segments) {
      if (seg.kind != PlacedSegment::Kind::Retrieved) continue;
      if (seg.out_frames.empty()) continue;
      if (!runs.empty() && runs.back().end == seg.out_frames.begin) {
        runs.back().end = seg.out_frames.end;
      } else {
        runs.push_back(seg.out_frames);
      }
    }
    bool ramp_ok = true;
    for (const FrameRange& run : runs) {
      ++ramps_seen;
      std::int64_t n = run.size();
      const ParameterVector& a =
          run.begin > 0 ? frames[static_cast<std::size_t>(run.begin - 1)]
                        : src.frames[static_cast<std::size_t>(region.begin)];
      const ParameterVector& b =
          run.end < static_cast<std::int64_t>(frames.size())
              ? frames[static_cast<std::size_t>(run.end)]
              : src.frames[static_cast<std::size_t>(region.end - 1)];
      for (std::int64_t k = 0; k < n; ++k) {
        double w = static_cast<double>(k + 1) / static_cast<double>(n + 1);
        const ParameterVector& f =
            frames[static_cast<std::size_t>(run.begin + k)];
        for (std::size_t d = PV::kIlluminationOffset;
             d < PV::kIlluminationOffset + PV::kIlluminationDim; ++d) {
          double want = a.v[d] + (b.v[d] - a.v[d]) * w;
          if (std::abs(f.v[d] - want) > 1e-12) ramp_ok = false;
        }
      }
    }
    if (!ramp_ok) ++ramp_bad;
  }
  if (used < 100) out.fail("only " + std::to_string(used) + " plans built");
  if (geometry_bad > 0) {
    out.fail(std::to_string(geometry_bad) + " plans vary shape/reflectance");
  }
  if (pose_bad > 0) {
    out.fail(std::to_string(pose_bad) + " plans break pose passthrough");
  }
  if (ramp_bad > 0) {
    out.fail(std::to_string(ramp_bad) + " plans break the lighting ramp");
  }
  if (out.pass) {
    out.detail = "100 plans; " + std::to_string(ramps_seen) +
                 " lighting ramps within 1e-12";
  }
}

// ------------------------------------------------------------- criterion 8

void c8_frame_accounting(Outcome& out) {
  int bad = 0;
  int trials = 0;
  for (double fps_out : {25.0, 60.0}) {
    CorpusGenConfig cfg;
    cfg.seed = 80;
    cfg.sentences = 8;
    cfg.lexicon_size = 80;
    GeneratedCorpus corpus = generate_corpus(cfg);
    const AlignedTranscript& t = corpus.transcript;
    ParameterTrack track = synthesize_track(t, 25.0, 80);
    Rng rng(static_cast<std::uint64_t>(fps_out) * 7919 + 88);

    for (int i = 0; i < 30; ++i, ++trials) {
      double duration = rng.uniform(0.1, 5.0);
      std::size_t len = 2 + rng.index(5);
      auto span = random_speech_span(t, rng, len, 1);
      if (!span) {
        ++bad;
        continue;
      }
      PronunciationDict dict = corpus.dictionary;
      PronunciationDict::Pron pron;
      for (std::size_t p = span->begin; p < span->end; ++p) {
        pron.push_back(t.phones()[p].label);
      }
      dict.add("ZTIMED", pron);
      // Per-phone durations that sum to the target exactly.
      std::vector<double> timings(len, duration / static_cast<double>(len));
      double partial = 0.0;
      for (std::size_t k = 0; k + 1 < len; ++k) partial += timings[k];
      timings[len - 1] = duration - partial;

      EditSpec edit;
      edit.kind = EditKind::Insert;
      std::vector<std::size_t> s1 = speech_words(t, 1);
      if (s1.empty()) {
        ++bad;
        continue;
      }
      edit.anchor = s1[rng.index(s1.size())];
      EditWord w;
      w.text = "ztimed";
      w.phone_timings = timings;
      edit.words = {w};

      PlanOptions options;
      options.fps_out = fps_out == 25.0 ? 0.0 : fps_out;
      EditPlan plan = plan_edit(edit, t, track, dict, options);

      double realized = plan.query[plan.query.size() - 1].t_out -
                        plan.query[0].t_in;
      std::int64_t want = std::llround(fps_out * realized);
      if (plan.edit_span.size() != want) ++bad;
      if (plan.track.fps != fps_out) ++bad;
    }
  }
  if (bad > 0) {
    out.fail(std::to_string(bad) + " of " + std::to_string(trials) +
             " trials off the rounded frame count");
  } else {
    out.detail = "60 trials at 25/60 fps, durations 0.1..5 s, exact";
  }
}

// ------------------------------------------------------------- criterion 9

void c9_window_statistics(Outcome& out) {
  CorpusGenConfig cfg;  // frozen defaults: 1000 sentences
  GeneratedCorpus corpus = generate_corpus(cfg);
  if (corpus.transcript.sentences().size() < 1000) {
    out.fail("corpus under 1000 sentences");
    return;
  }

  StatsOptions exact;
  exact.exhaustive = true;
  exact.threads = 4;
  MatchProbabilityCurve ph =
      match_curve(corpus.transcript, MatchMode::Phoneme, exact);
  MatchProbabilityCurve vi =
      match_curve(corpus.transcript, MatchMode::Viseme, exact);

  for (const MatchProbabilityCurve* curve : {&ph, &vi}) {
    for (std::size_t i = 1; i < curve->points.size(); ++i) {
      if (curve->points[i].probability >
          curve->points[i - 1].probability + 1e-12) {
        out.fail("curve not non-increasing at k=" +
                 std::to_string(curve->points[i].k));
      }
    }
  }
  for (std::size_t i = 0; i < ph.points.size(); ++i) {
    if (vi.points[i].probability < ph.points[i].probability - 1e-12) {
      out.fail("viseme < phoneme at k=" + std::to_string(ph.points[i].k));
    }
  }
  for (const MatchProbabilityPoint& p : ph.points) {
    if (p.k >= 4 && !(p.probability < 0.5)) {
      out.fail("phoneme k=" + std::to_string(p.k) + " at " +
               fmt("%.3f", p.probability));
    }
  }
  for (const MatchProbabilityPoint& p : vi.points) {
    if (p.k >= 7 && !(p.probability < 0.5)) {
      out.fail("viseme k=" + std::to_string(p.k) + " at " +
               fmt("%.3f", p.probability));
    }
  }

  // Sampled mode at the advertised trial count must agree and fit the time
  // budget (the criterion-level wall clock is checked below).
  StatsOptions mc;
  mc.trials = 100000;
  mc.seed = 9;
  mc.threads = 4;
  MatchProbabilityCurve mph =
      match_curve(corpus.transcript, MatchMode::Phoneme, mc);
  for (std::size_t i = 0; i < mph.points.size(); ++i) {
    double sigma = std::sqrt(
        std::max(ph.points[i].probability * (1 - ph.points[i].probability),
                 1e-12) /
        100000.0);
    if (std::abs(mph.points[i].probability - ph.points[i].probability) >
        5 * sigma + 1e-9) {
      out.fail("sampled curve off at k=" + std::to_string(mph.points[i].k));
    }
  }

  DurationStats ds = duration_stats(corpus.transcript);
  bool wide = false;
  for (const VisemeDurationRow& row : ds.rows) {
    if (row.count >= 2 && row.max / row.min >= 5.0) wide = true;
  }
  if (!wide) out.fail("no viseme class spans a 5x duration range");

  if (out.pass) {
    out.detail = "phoneme k4 " + fmt("%.3f", ph.points[3].probability) +
                 ", viseme k7 " + fmt("%.3f", vi.points[6].probability) +
                 ", curves monotone, viseme >= phoneme";
  }
}

// ------------------------------------------------------------ criterion 10

void c10_throughput(Outcome& out) {
  CorpusGenConfig cfg;
  cfg.seed = 10;
  cfg.sentences = 1100;
  GeneratedCorpus corpus = generate_corpus(cfg);
  const PhoneSequence& phones = corpus.transcript.phones();
  if (phones.size() < 40000) {
    out.fail("corpus only " + std::to_string(phones.size()) + " phones");
    return;
  }
  Rng rng(1010);
  std::size_t start = rng.index(phones.size() - 10);
  PhoneSequence query = phones.slice(start, start + 10);

  auto t0 = std::chrono::steady_clock::now();
  CostParams params;
  SearchOptions options;
  options.threads = 1;
  SearchResult r = search(query, phones, params, options);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (r.split.empty()) out.fail("search returned no segments");
  if (secs > 60.0) out.fail("took " + fmt("%.1f", secs) + " s");
  if (out.pass) {
    out.detail = "10-phone query, " + std::to_string(phones.size()) +
                 "-phone corpus, single thread: " + fmt("%.2f", secs) + " s";
  }
}

// ------------------------------------------------------------ criterion 11

#ifndef VISEDIT_CLI_PATH
#error "VISEDIT_CLI_PATH must be defined"
#endif
#ifndef GENFIXTURE_PATH
#error "GENFIXTURE_PATH must be defined"
#endif
#ifndef GOLDEN_FIXTURE_DIR
#error "GOLDEN_FIXTURE_DIR must be defined"
#endif

int run_cmd(const std::string& command) {
  int status = std::system((command + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_hash(const fs::path& p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_file(p))));
  return buf;
}

void c11_determinism(Outcome& out) {
  fs::path fixture(GOLDEN_FIXTURE_DIR);
  fs::path scratch = fs::temp_directory_path() / "visedit_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  std::string cli(VISEDIT_CLI_PATH);

  // The bundled inputs must be reproducible from the generator...
  fs::path regen = scratch / "regen";
  if (run_cmd(std::string(GENFIXTURE_PATH) + " --out " + regen.string() +
              " --seed 7 --sentences 20") != 0) {
    out.fail("fixture generator failed");
    return;
  }
  for (const char* name : {"alignment.json", "dict.txt", "edit_insert.json",
                           "edit_delete.json", "edit_rearrange.json"}) {
    if (read_file(regen / name) != read_file(fixture / name)) {
      out.fail(std::string("bundled ") + name + " drifted");
    }
  }
  // ...including the track, pinned by hash with the blended outputs.
  std::map<std::string, std::string> want_hash;
  {
    std::string text = read_file(fixture / "expected" / "hashes.txt");
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string line = text.substr(pos, eol - pos);
      std::size_t sp = line.find(' ');
      if (sp != std::string::npos) {
        want_hash[line.substr(0, sp)] = line.substr(sp + 1);
      }
      pos = eol + 1;
    }
  }
  if (file_hash(regen / "track.vftk") != want_hash["track.vftk"]) {
    out.fail("track drifted from the pinned hash");
  }

  auto plan_cmd = [&](const std::string& kind, const fs::path& dir,
                      const std::string& extra) {
    return cli + " plan --alignment " + (fixture / "alignment.json").string() +
           " --dict " + (fixture / "dict.txt").string() + " --track " +
           (regen / "track.vftk").string() + " --edit " +
           (fixture / ("edit_" + kind + ".json")).string() + " --out " +
           dir.string() + extra;
  };
  for (const std::string kind : {"insert", "delete", "rearrange"}) {
    fs::path dir = scratch / ("plan_" + kind);
    if (run_cmd(plan_cmd(kind, dir, "")) != 0) {
      out.fail("plan " + kind + " failed");
      continue;
    }
    if (read_file(dir / "edl.json") !=
        read_file(fixture / "expected" / ("edl_" + kind + ".json"))) {
      out.fail("edl " + kind + " differs from golden");
    }
    if (read_file(dir / "report.txt") !=
        read_file(fixture / "expected" / ("report_" + kind + ".txt"))) {
      out.fail("report " + kind + " differs from golden");
    }
    if (file_hash(dir / "blended.vftk") !=
        want_hash["blended_" + kind + ".vftk"]) {
      out.fail("blended track " + kind + " differs from golden");
    }
  }
  // Same plan under a different thread count: bit-identical.
  fs::path threaded = scratch / "plan_insert_t4";
  if (run_cmd(plan_cmd("insert", threaded, " --threads 4")) != 0 ||
      read_file(threaded / "edl.json") !=
          read_file(scratch / "plan_insert" / "edl.json") ||
      read_file(threaded / "blended.vftk") !=
          read_file(scratch / "plan_insert" / "blended.vftk")) {
    out.fail("plan outputs vary with --threads");
  }

  auto stats_cmd = [&](const fs::path& dir, const std::string& extra) {
    return cli + " stats --alignment " +
           (fixture / "alignment.json").string() + " --out " + dir.string() +
           " --trials 50000 --seed 11" + extra;
  };
  fs::path st1 = scratch / "stats1";
  fs::path st2 = scratch / "stats2";
  if (run_cmd(stats_cmd(st1, "")) != 0 ||
      run_cmd(stats_cmd(st2, " --threads 2")) != 0) {
    out.fail("stats run failed");
  } else {
    if (read_file(st1 / "match_probability.csv") !=
        read_file(fixture / "expected" / "match_probability.csv")) {
      out.fail("match CSV differs from golden");
    }
    if (read_file(st1 / "viseme_durations.csv") !=
        read_file(fixture / "expected" / "viseme_durations.csv")) {
      out.fail("duration CSV differs from golden");
    }
    if (read_file(st2 / "match_probability.csv") !=
        read_file(st1 / "match_probability.csv")) {
      out.fail("stats outputs vary with --threads");
    }
  }
  if (out.pass) {
    out.detail = "golden 20-sentence fixture byte-stable across runs and "
                 "thread counts";
  }
}

}  // namespace

int main() {
  std::printf("acceptance gate\n===============\n");
  criterion(1, "cost fidelity", c1_cost_fidelity);
  criterion(2, "matcher vs exhaustive oracle", c2_matcher_oracle);
  criterion(3, "split search vs exhaustive oracle", c3_split_oracle);
  criterion(4, "verbatim retrieval", c4_verbatim);
  criterion(5, "snippet assembly by label", c5_snippet_assembly);
  criterion(6, "seam smoothing", c6_seam_smoothing);
  criterion(7, "parameter block rules", c7_block_rules);
  criterion(8, "output frame accounting", c8_frame_accounting);
  criterion(9, "window-match statistics", c9_window_statistics);
  criterion(10, "search throughput", c10_throughput);
  criterion(11, "determinism and golden outputs", c11_determinism);
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
