// Command-line front end: plan an edit, export corpus statistics, or
// validate input files. Exit codes: 0 success, 2 input/parse problems,
// 3 retrieval problems (vocabulary, query, corpus), 4 planning problems.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "visedit/corpus_gen.hpp"
#include "visedit/errors.hpp"
#include "visedit/ingest.hpp"
#include "visedit/plan.hpp"
#include "visedit/stats.hpp"

namespace fs = std::filesystem;
using namespace visedit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSearch = 3;
constexpr int kExitPlan = 4;

// Exit code for a library error, by exception type. IoError is handled by
// phase at the call sites (input reads are parse failures, output writes are
// planning failures).
int classify(const Error& e, int io_exit) {
  if (dynamic_cast<const OutOfVocabulary*>(&e) ||
      dynamic_cast<const MissingTiming*>(&e) ||
      dynamic_cast<const EmptyInput*>(&e) ||
      dynamic_cast<const QueryTooLong*>(&e) ||
      dynamic_cast<const InsufficientCorpus*>(&e)) {
    return kExitSearch;
  }
  if (dynamic_cast<const EmptyRegion*>(&e) ||
      dynamic_cast<const OutOfTrackRange*>(&e) ||
      dynamic_cast<const WindowTooLarge*>(&e)) {
    return kExitPlan;
  }
  if (dynamic_cast<const IoError*>(&e)) return io_exit;
  // ParseError, OverlapError, UnknownPhoneme, DimensionError.
  return kExitParse;
}

struct Fail {
  int code;
  std::string message;
};

std::string load(const fs::path& path, const char* what) {
  try {
    return read_file(path);
  } catch (const IoError& e) {
    throw Fail{kExitParse, std::string(what) + " " + path.string() + ": " +
                               e.what()};
  }
}

template <typename T, typename Fn>
T parse_input(const fs::path& path, const char* what, Fn&& fn) {
  std::string bytes = load(path, what);
  try {
    return fn(bytes);
  } catch (const Error& e) {
    throw Fail{classify(e, kExitParse),
               std::string(what) + " " + path.string() + ": " + e.what()};
  }
}

void write_output(const fs::path& path, std::string_view bytes) {
  try {
    write_file(path, bytes);
  } catch (const IoError& e) {
    throw Fail{kExitPlan, std::string("output ") + path.string() + ": " +
                              e.what()};
  }
}

// Shared option state. Every flag maps to exactly one field here.
struct RunConfig {
  std::string alignment;
  std::string dict;
  std::string track;
  std::string edit;
  std::string out;

  double chi = CostParams{}.chi;
  double phi = CostParams{}.phi;
  double c_insert = CostParams{}.c_insert;
  double c_delete = CostParams{}.c_delete;
  bool stress_insensitive = false;
  double window_ms = 67.0;
  double fps_out = 0.0;
  std::string bg_region;
  std::vector<std::string> pron;
  std::size_t max_query = 64;

  std::uint64_t seed = 0;
  std::uint64_t trials = 100000;
  bool exhaustive = false;
  int k_min = 1;
  int k_max = 10;

  int threads = 1;
  int verbosity = 0;
};

FrameRange parse_bg_region(const std::string& text) {
  std::size_t colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Fail{kExitParse,
               "--bg-region: expected BEGIN:END, got '" + text + "'"};
  }
  try {
    std::size_t used = 0;
    long long a = std::stoll(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("trailing characters");
    std::string tail = text.substr(colon + 1);
    long long b = std::stoll(tail, &used);
    if (used != tail.size()) throw std::invalid_argument("trailing characters");
    return FrameRange{a, b};
  } catch (const std::exception&) {
    throw Fail{kExitParse,
               "--bg-region: expected BEGIN:END integers, got '" + text + "'"};
  }
}

std::map<std::string, int> parse_pron_choices(
    const std::vector<std::string>& entries) {
  std::map<std::string, int> out;
  for (const std::string& entry : entries) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
      throw Fail{kExitParse, "--pron: expected WORD=VARIANT, got '" + entry +
                                 "'"};
    }
    std::string word = entry.substr(0, eq);
    for (char& c : word) c = static_cast<char>(std::toupper(
        static_cast<unsigned char>(c)));
    int variant = 0;
    try {
      std::size_t used = 0;
      std::string tail = entry.substr(eq + 1);
      variant = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Fail{kExitParse, "--pron: variant must be a number in '" + entry +
                                 "'"};
    }
    if (variant < 1) {
      throw Fail{kExitParse, "--pron: variants are numbered from 1 in '" +
                                 entry + "'"};
    }
    out[word] = variant - 1;
  }
  return out;
}

int cmd_plan(const RunConfig& cfg) {
  AlignedTranscript transcript = parse_input<AlignedTranscript>(
      cfg.alignment, "alignment", [](const std::string& s) {
        return parse_alignment(s);
      });
  PronunciationDict dict = parse_input<PronunciationDict>(
      cfg.dict, "dictionary", [](const std::string& s) {
        return parse_dictionary(s);
      });
  ParameterTrack track = parse_input<ParameterTrack>(
      cfg.track, "track", [](const std::string& s) {
        return parse_parameter_track(s);
      });
  EditSpec edit = parse_input<EditSpec>(
      cfg.edit, "edit", [](const std::string& s) { return parse_edit_spec(s); });

  PlanOptions options;
  options.costs.chi = cfg.chi;
  options.costs.phi = cfg.phi;
  options.costs.c_insert = cfg.c_insert;
  options.costs.c_delete = cfg.c_delete;
  options.costs.stress_insensitive = cfg.stress_insensitive;
  options.window_s = cfg.window_ms / 1000.0;
  options.fps_out = cfg.fps_out;
  options.threads = cfg.threads;
  options.max_query_length = cfg.max_query;
  options.pron_choice = parse_pron_choices(cfg.pron);
  if (!cfg.bg_region.empty()) options.region = parse_bg_region(cfg.bg_region);

  fs::path out_dir(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Fail{kExitPlan,
               "output " + out_dir.string() + ": " + ec.message()};
  }

  std::ofstream dump;
  if (cfg.verbosity >= 2) {
    dump.open(out_dir / "dp_dump.csv");
    if (!dump) {
      throw Fail{kExitPlan, "output " + (out_dir / "dp_dump.csv").string() +
                                ": cannot open for writing"};
    }
    options.dp_dump = &dump;
  }

  EditPlan plan;
  try {
    plan = plan_edit(edit, transcript, track, dict, options);
  } catch (const Error& e) {
    throw Fail{classify(e, kExitPlan), std::string("plan: ") + e.what()};
  }

  std::string edl = serialize_edl(plan, transcript);
  std::string report = render_report(plan, transcript);
  write_output(out_dir / "edl.json", edl);
  ParameterTrack blended{plan.track.fps, plan.track.frames};
  write_output(out_dir / "blended.vftk", serialize_parameter_track(blended));
  write_output(out_dir / "report.txt", report);

  if (cfg.verbosity >= 1) {
    std::cout << report;
  } else {
    std::printf("planned %zu segment(s), %lld output frame(s) -> %s\n",
                plan.segments.size(),
                static_cast<long long>(plan.background.out_frames),
                out_dir.string().c_str());
  }
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg) {
  AlignedTranscript transcript = parse_input<AlignedTranscript>(
      cfg.alignment, "alignment", [](const std::string& s) {
        return parse_alignment(s);
      });

  StatsOptions options;
  options.seed = cfg.seed;
  options.trials = cfg.trials;
  options.exhaustive = cfg.exhaustive;
  options.threads = cfg.threads;
  options.k_min = cfg.k_min;
  options.k_max = cfg.k_max;

  std::vector<MatchProbabilityCurve> curves;
  DurationStats durations;
  try {
    curves.push_back(match_curve(transcript, MatchMode::Phoneme, options));
    curves.push_back(match_curve(transcript, MatchMode::Viseme, options));
    durations = duration_stats(transcript);
  } catch (const Error& e) {
    throw Fail{classify(e, kExitSearch), std::string("stats: ") + e.what()};
  }

  fs::path out_dir(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Fail{kExitPlan, "output " + out_dir.string() + ": " + ec.message()};
  }
  std::string match_csv = export_match_csv(curves);
  write_output(out_dir / "match_probability.csv", match_csv);
  write_output(out_dir / "viseme_durations.csv",
               export_duration_csv(durations));

  if (cfg.verbosity >= 1) {
    std::cout << match_csv;
  } else {
    std::printf("wrote match_probability.csv and viseme_durations.csv -> %s\n",
                out_dir.string().c_str());
  }
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
  struct Item {
    std::string label;
    std::string path;
    std::string error;  // empty = ok
  };
  std::vector<Item> items;
  std::optional<AlignedTranscript> transcript;
  std::optional<PronunciationDict> dict;
  std::optional<ParameterTrack> track;
  std::optional<EditSpec> edit;

  auto check = [&](const char* label, const std::string& path, auto&& fn) {
    if (path.empty()) return;
    Item item{label, path, {}};
    try {
      fn(read_file(path));
    } catch (const Error& e) {
      item.error = e.what();
    }
    items.push_back(std::move(item));
  };

  check("alignment", cfg.alignment,
        [&](const std::string& s) { transcript = parse_alignment(s); });
  check("dictionary", cfg.dict,
        [&](const std::string& s) { dict = parse_dictionary(s); });
  check("track", cfg.track,
        [&](const std::string& s) { track = parse_parameter_track(s); });
  check("edit", cfg.edit,
        [&](const std::string& s) { edit = parse_edit_spec(s); });

  if (items.empty()) {
    std::fprintf(stderr, "validate: no input files given\n");
    return kExitParse;
  }

  std::vector<std::string> cross;
  if (transcript && track) {
    // The track must cover the transcript to within one frame.
    double end = transcript->phones().empty()
                     ? 0.0
                     : transcript->phones()[transcript->phones().size() - 1]
                           .t_out;
    double mismatch = std::abs(track->duration() - end);
    if (track->fps <= 0.0 || mismatch > 1.0 / track->fps) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "track duration %.3f s vs transcript end %.3f s: "
                    "mismatch exceeds one frame (%.4f s)",
                    track->duration(), end,
                    track->fps > 0.0 ? 1.0 / track->fps : 0.0);
      cross.push_back(buf);
    }
  }
  if (transcript && dict && edit) {
    try {
      build_query_detailed(*edit, *dict, *transcript,
                           duration_defaults_from(*transcript),
                           parse_pron_choices(cfg.pron));
    } catch (const Fail& f) {
      cross.push_back(f.message);
    } catch (const Error& e) {
      cross.push_back(std::string("edit query: ") + e.what());
    }
  }

  bool bad = !cross.empty();
  for (const Item& item : items) {
    if (item.error.empty()) {
      std::printf("ok      %-10s %s\n", item.label.c_str(), item.path.c_str());
    } else {
      bad = true;
      std::printf("error   %-10s %s: %s\n", item.label.c_str(),
                  item.path.c_str(), item.error.c_str());
    }
  }
  for (const std::string& msg : cross) {
    std::printf("error   %-10s %s\n", "cross", msg.c_str());
  }
  if (!bad) std::printf("all inputs valid\n");
  return bad ? kExitParse : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transcript-driven edit planner for face-parameter video"};
  app.require_subcommand(1);
  RunConfig cfg;

  // NOTE: an int bound with add_flag on several subcommands gets clobbered
  // by the callbacks of the subcommands that were NOT invoked, so the
  // verbosity flag stays targetless and is read back as a count.
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", cfg.threads, "Worker threads (1 = serial)")
        ->check(CLI::Range(1, 256));
    sub->add_flag("-v,--verbose", "Verbose output (-vv adds debug dumps)");
  };

  CLI::App* plan = app.add_subcommand("plan", "Plan an edit and write the EDL");
  plan->add_option("--alignment", cfg.alignment, "Aligned transcript JSON")
      ->required();
  plan->add_option("--dict", cfg.dict, "Pronunciation dictionary")->required();
  plan->add_option("--track", cfg.track, "Face-parameter track (VFTK/JSON)")
      ->required();
  plan->add_option("--edit", cfg.edit, "Edit specification JSON")->required();
  plan->add_option("--out", cfg.out, "Output directory")->required();
  plan->add_option("--chi", cfg.chi, "Duration-mismatch weight in swap costs");
  plan->add_option("--phi", cfg.phi, "Per-segment split penalty");
  plan->add_option("--c-insert", cfg.c_insert, "Insertion cost");
  plan->add_option("--c-delete", cfg.c_delete, "Deletion cost");
  plan->add_flag("--stress-insensitive", cfg.stress_insensitive,
                 "Ignore stress digits when comparing phones");
  plan->add_option("--window-ms", cfg.window_ms,
                   "Expression crossfade width, milliseconds")
      ->check(CLI::NonNegativeNumber);
  plan->add_option("--fps-out", cfg.fps_out,
                   "Output frame rate (0 keeps the source rate)")
      ->check(CLI::NonNegativeNumber);
  plan->add_option("--bg-region", cfg.bg_region,
                   "Background source frames BEGIN:END (overrides sentence)");
  plan->add_option("--pron", cfg.pron,
                   "Dictionary variant per word, WORD=N (N from 1)");
  plan->add_option("--max-query", cfg.max_query,
                   "Maximum query phones accepted");
  add_common(plan);

  CLI::App* stats = app.add_subcommand(
      "stats", "Export match-probability curves and duration summaries");
  stats->add_option("--alignment", cfg.alignment, "Aligned transcript JSON")
      ->required();
  stats->add_option("--out", cfg.out, "Output directory")->required();
  stats->add_option("--seed", cfg.seed, "Sampling seed");
  stats->add_option("--trials", cfg.trials, "Monte Carlo samples per window length");
  stats->add_flag("--exhaustive", cfg.exhaustive,
                  "Count every window instead of sampling");
  stats->add_option("--k-min", cfg.k_min, "Smallest window length")
      ->check(CLI::Range(1, 64));
  stats->add_option("--k-max", cfg.k_max, "Largest window length")
      ->check(CLI::Range(1, 64));
  add_common(stats);

  CLI::App* validate = app.add_subcommand(
      "validate", "Check input files without planning");
  validate->add_option("--alignment", cfg.alignment, "Aligned transcript JSON");
  validate->add_option("--dict", cfg.dict, "Pronunciation dictionary");
  validate->add_option("--track", cfg.track, "Face-parameter track");
  validate->add_option("--edit", cfg.edit, "Edit specification JSON");
  validate->add_option("--pron", cfg.pron,
                       "Dictionary variant per word, WORD=N (N from 1)");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitParse;
  }

  CLI::App* active = app.got_subcommand(plan)
                         ? plan
                         : (app.got_subcommand(stats) ? stats : validate);
  cfg.verbosity = static_cast<int>(active->count("-v"));

  try {
    if (active == plan) return cmd_plan(cfg);
    if (active == stats) return cmd_stats(cfg);
    return cmd_validate(cfg);
  } catch (const Fail& f) {
    std::fprintf(stderr, "visedit: %s\n", f.message.c_str());
    return f.code;
  } catch (const Error& e) {
    std::fprintf(stderr, "visedit: %s\n", e.what());
    return classify(e, kExitPlan);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "visedit: internal error: %s\n", e.what());
    return kExitPlan;
  }
}
