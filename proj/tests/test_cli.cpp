#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "support/builders.hpp"
#include "visedit/ingest.hpp"

#ifndef VISEDIT_CLI_PATH
#error "VISEDIT_CLI_PATH must point at the command-line binary"
#endif
#ifndef GENFIXTURE_PATH
#error "GENFIXTURE_PATH must point at the fixture generator"
#endif

namespace fs = std::filesystem;
using namespace visedit;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& command) {
  fs::path log = fs::temp_directory_path() / "visedit_cli_run.log";
  std::string full = command + " >" + log.string() + " 2>&1";
  int status = std::system(full.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// One shared fixture directory, generated on first use.
const fs::path& fixture_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "visedit_cli_fixture";
    fs::remove_all(d);
    RunResult r = run(std::string(GENFIXTURE_PATH) + " --out " + q(d) +
                      " --seed 7 --sentences 20");
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

std::string plan_args(const fs::path& edit, const fs::path& out) {
  const fs::path& fx = fixture_dir();
  return std::string(VISEDIT_CLI_PATH) + " plan --alignment " +
         q(fx / "alignment.json") + " --dict " + q(fx / "dict.txt") +
         " --track " + q(fx / "track.vftk") + " --edit " + q(edit) +
         " --out " + q(out);
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "visedit_cli_out" / name;
  fs::remove_all(d);
  fs::create_directories(d.parent_path());
  return d;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("plan writes the three outputs and they agree") {
  fs::path out = scratch("insert");
  RunResult r = run(plan_args(fixture_dir() / "edit_insert.json", out));
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(out / "edl.json"));
  REQUIRE(fs::exists(out / "blended.vftk"));
  REQUIRE(fs::exists(out / "report.txt"));

  json edl = json::parse(slurp(out / "edl.json"));
  CHECK(edl.at("format") == "visedit-edl-v1");
  ParameterTrack blended = parse_parameter_track(slurp(out / "blended.vftk"));
  CHECK(blended.frames.size() ==
        edl.at("out_frames").get<std::size_t>());
  CHECK(blended.fps == edl.at("fps").get<double>());
  CHECK(edl.at("frames").size() == blended.frames.size());
  CHECK(edl.at("segments").size() >= 3);

  std::string report = slurp(out / "report.txt");
  CHECK(report.find("kind: insert") != std::string::npos);
  CHECK(report.find("retrieval cost:") != std::string::npos);
}

TEST_CASE("delete edit plans with an empty retrieval section") {
  fs::path out = scratch("delete");
  RunResult r = run(plan_args(fixture_dir() / "edit_delete.json", out));
  REQUIRE(r.exit_code == 0);
  std::string report = slurp(out / "report.txt");
  CHECK(report.find("kind: delete") != std::string::npos);
  // No new words -> nothing retrieved -> no cost line.
  CHECK(report.find("retrieval cost:") == std::string::npos);
  json edl = json::parse(slurp(out / "edl.json"));
  CHECK(edl.at("total_cost").is_null());
}

TEST_CASE("missing dictionary entry exits 3 and names the word") {
  fs::path edit = scratch("oov_edit").parent_path() / "oov_edit.json";
  json e = json::parse(slurp(fixture_dir() / "edit_insert.json"));
  // Point the new word at something the dictionary cannot know.
  for (auto& w : e.at("words")) {
    if (!w.contains("orig_index") || w.at("orig_index").is_null()) {
      w["text"] = "zzybalqux";
    }
  }
  write_file(edit, e.dump());
  fs::path out = scratch("oov_out");
  RunResult r = run(plan_args(edit, out));
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("zzybalqux") != std::string::npos);
}

TEST_CASE("overlapping phones fail validation naming the phone index") {
  json a = json::parse(slurp(fixture_dir() / "alignment.json"));
  // Pull the second word's first phone back over its predecessor.
  auto& w1p = a.at("words").at(1).at("phones").at(0);
  double prev_end = a.at("words").at(0).at("phones").back().at("t_in");
  w1p["t_in"] = prev_end;
  fs::path bad = fs::temp_directory_path() / "visedit_cli_out" / "bad.json";
  write_file(bad, a.dump());
  RunResult r = run(std::string(VISEDIT_CLI_PATH) + " validate --alignment " +
                    q(bad));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("phone") != std::string::npos);
  CHECK(r.output.find("starts before") != std::string::npos);
}

TEST_CASE("track shorter than the transcript fails validation") {
  ParameterTrack track =
      parse_parameter_track(slurp(fixture_dir() / "track.vftk"));
  track.frames.resize(track.frames.size() / 2);
  fs::path cut = fs::temp_directory_path() / "visedit_cli_out" / "cut.vftk";
  write_file(cut, serialize_parameter_track(track));
  RunResult r = run(std::string(VISEDIT_CLI_PATH) + " validate --alignment " +
                    q(fixture_dir() / "alignment.json") + " --track " + q(cut));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("mismatch exceeds one frame") != std::string::npos);

  RunResult ok = run(std::string(VISEDIT_CLI_PATH) + " validate --alignment " +
                     q(fixture_dir() / "alignment.json") + " --track " +
                     q(fixture_dir() / "track.vftk"));
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("all inputs valid") != std::string::npos);
}

TEST_CASE("unknown flags and subcommands fail fast") {
  RunResult r = run(std::string(VISEDIT_CLI_PATH) + " plan --no-such-flag 1");
  CHECK(r.exit_code == 2);
  RunResult s = run(std::string(VISEDIT_CLI_PATH) + " frobnicate");
  CHECK(s.exit_code == 2);
  RunResult h = run(std::string(VISEDIT_CLI_PATH) + " --help");
  CHECK(h.exit_code == 0);
  CHECK(h.output.find("plan") != std::string::npos);
}

TEST_CASE("identical config gives bit-identical outputs across threads") {
  fs::path a = scratch("det_a");
  fs::path b = scratch("det_b");
  REQUIRE(run(plan_args(fixture_dir() / "edit_insert.json", a)).exit_code == 0);
  REQUIRE(run(plan_args(fixture_dir() / "edit_insert.json", b) +
              " --threads 4")
              .exit_code == 0);
  CHECK(slurp(a / "edl.json") == slurp(b / "edl.json"));
  CHECK(slurp(a / "blended.vftk") == slurp(b / "blended.vftk"));
  CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
}

TEST_CASE("stats on a toy corpus produces checkable values") {
  using testsupport::WordSpec;
  std::vector<WordSpec> sentence = {
      {"hello", {{"HH", 0.06}, {"AH0", 0.06}, {"L", 0.08}, {"OW1", 0.08}}},
      {"world", {{"W", 0.08}, {"ER1", 0.08}, {"L", 0.08}, {"D", 0.08}}},
  };
  AlignedTranscript toy = testsupport::make_transcript({sentence, sentence});
  fs::path dir = fs::temp_directory_path() / "visedit_cli_out";
  fs::create_directories(dir);
  write_file(dir / "toy.json", serialize_alignment(toy));

  fs::path out = scratch("stats_toy");
  RunResult r = run(std::string(VISEDIT_CLI_PATH) + " stats --alignment " +
                    q(dir / "toy.json") + " --out " + q(out) +
                    " --exhaustive --k-max 3");
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp(out / "match_probability.csv");
  // Identical sentences: every window matches at every k.
  CHECK(csv.find("1,1,16,phoneme") != std::string::npos);
  CHECK(csv.find("2,1,14,phoneme") != std::string::npos);
  CHECK(csv.find("3,1,12,viseme") != std::string::npos);
  std::string durations = slurp(out / "viseme_durations.csv");
  CHECK(durations.rfind("viseme,count,min,q1,median,q3,max\n", 0) == 0);

  // Same seed -> bit-identical files.
  fs::path out2 = scratch("stats_toy2");
  REQUIRE(run(std::string(VISEDIT_CLI_PATH) + " stats --alignment " +
              q(dir / "toy.json") + " --out " + q(out2) +
              " --exhaustive --k-max 3")
              .exit_code == 0);
  CHECK(slurp(out / "match_probability.csv") ==
        slurp(out2 / "match_probability.csv"));
  CHECK(slurp(out / "viseme_durations.csv") ==
        slurp(out2 / "viseme_durations.csv"));

  // Fewer than two sentences is a retrieval-side failure: exit 3.
  AlignedTranscript one = testsupport::make_transcript({sentence});
  write_file(dir / "one.json", serialize_alignment(one));
  RunResult bad = run(std::string(VISEDIT_CLI_PATH) + " stats --alignment " +
                      q(dir / "one.json") + " --out " + q(scratch("stats_one")));
  CHECK(bad.exit_code == 3);
}

TEST_CASE("double verbose emits the search table dump") {
  fs::path out = scratch("dump");
  RunResult r =
      run(plan_args(fixture_dir() / "edit_insert.json", out) + " -vv");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(out / "dp_dump.csv"));
  CHECK(fs::file_size(out / "dp_dump.csv") > 0);
  // -v prints the full report to stdout.
  CHECK(r.output.find("edit plan") != std::string::npos);
  CHECK(r.output.find("segments:") != std::string::npos);
}

TEST_CASE("background region override is honored and validated") {
  json edl_default;
  {
    fs::path out = scratch("bg_default");
    REQUIRE(run(plan_args(fixture_dir() / "edit_delete.json", out)).exit_code ==
            0);
    edl_default = json::parse(slurp(out / "edl.json"));
  }
  long long b = edl_default.at("region").at("begin").get<long long>();
  long long e = edl_default.at("region").at("end").get<long long>();
  fs::path out = scratch("bg_wide");
  RunResult r = run(plan_args(fixture_dir() / "edit_delete.json", out) +
                    " --bg-region " + std::to_string(b) + ":" +
                    std::to_string(e + 5));
  REQUIRE(r.exit_code == 0);
  json edl = json::parse(slurp(out / "edl.json"));
  CHECK(edl.at("region").at("end").get<long long>() == e + 5);

  // A region that cannot contain the edit is a planning failure: exit 4.
  RunResult bad = run(plan_args(fixture_dir() / "edit_delete.json",
                                scratch("bg_bad")) +
                      " --bg-region 0:2");
  CHECK(bad.exit_code == 4);

  RunResult mangled = run(plan_args(fixture_dir() / "edit_delete.json",
                                    scratch("bg_mangled")) +
                          " --bg-region nonsense");
  CHECK(mangled.exit_code == 2);
}
