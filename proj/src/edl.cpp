#include <cmath>
#include <cstdio>
#include <string>

#include "nlohmann/json.hpp"
#include "visedit/plan.hpp"

namespace visedit {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json range_json(const IndexRange& r) {
  return ordered_json{{"begin", r.begin}, {"end", r.end}};
}

ordered_json range_json(const FrameRange& r) {
  return ordered_json{{"begin", r.begin}, {"end", r.end}};
}

std::string hash_string(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Words whose footage overlaps [t0, t1], silences skipped.
std::string words_over(const AlignedTranscript& transcript, double t0,
                       double t1) {
  std::string out;
  for (std::size_t i = 0; i < transcript.words().size(); ++i) {
    const Word& w = transcript.words()[i];
    if (w.t_out <= t0 || w.t_in >= t1) continue;
    if (transcript.word_is_silence(i)) continue;
    if (!out.empty()) out += ' ';
    out += w.text;
  }
  return out;
}

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

const char* kind_name(PlacedSegment::Kind kind) {
  return kind == PlacedSegment::Kind::Retrieved ? "retrieved" : "identity";
}

}  // namespace

std::string serialize_edl(const EditPlan& plan,
                          const AlignedTranscript& transcript) {
  ordered_json doc;
  doc["format"] = "visedit-edl-v1";
  doc["fps"] = plan.track.fps;
  doc["source_fps"] = plan.background.fps_src;
  doc["source_track_hash"] = hash_string(plan.source_track_hash);
  doc["edit"] = ordered_json::parse(serialize_edit_spec(plan.edit));
  doc["region"] = range_json(plan.background.region);
  doc["retime_factor"] = plan.background.retime_factor;
  doc["out_frames"] = plan.background.out_frames;
  doc["edit_span"] = range_json(plan.edit_span);
  doc["window_s"] = plan.window_s;
  if (plan.search.split.empty())
    doc["total_cost"] = nullptr;
  else
    doc["total_cost"] = plan.search.total_cost;

  ordered_json query = ordered_json::array();
  for (const Phone& p : plan.query.phones())
    query.push_back(ordered_json{
        {"lbl", p.label.text()}, {"t_in", p.t_in}, {"t_out", p.t_out}});
  doc["query"] = std::move(query);

  ordered_json transitions = ordered_json::array();
  for (const Transition& t : plan.transitions)
    transitions.push_back(
        ordered_json{{"time", t.time}, {"half_width", t.half_width}});
  doc["transitions"] = std::move(transitions);

  ordered_json segments = ordered_json::array();
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const PlacedSegment& seg = plan.segments[i];
    ordered_json js;
    js["index"] = i;
    js["kind"] = kind_name(seg.kind);
    js["query_phones"] = range_json(seg.query_range);
    js["out_frames"] = range_json(seg.out_frames);
    js["out_t"] = ordered_json::array({seg.out_t0, seg.out_t1});
    js["src_t"] = ordered_json::array({seg.src_t0, seg.src_t1});
    js["cost"] = seg.cost;
    if (seg.kind == PlacedSegment::Kind::Retrieved)
      js["corpus_phones"] = range_json(seg.match.corpus_range);
    else
      js["corpus_phones"] = nullptr;
    const std::string source = words_over(transcript, seg.src_t0, seg.src_t1);
    if (source.empty())
      js["source_words"] = nullptr;
    else
      js["source_words"] = source;
    segments.push_back(std::move(js));
  }
  doc["segments"] = std::move(segments);

  ordered_json frames = ordered_json::array();
  for (const FrameProvenance& p : plan.track.provenance) {
    ordered_json js;
    js["bg_src_frame"] = p.bg_src_frame;
    switch (p.source) {
      case ParamSource::Background:
        js["param_source"] = "bg";
        js["weights"] = ordered_json{{"primary", 1.0}};
        break;
      case ParamSource::Snippet: {
        ordered_json src;
        if (p.segment >= 0)
          src["snippet"] = p.segment;
        else
          src["snippet"] = nullptr;
        src["t_src"] = p.t_src;
        js["param_source"] = std::move(src);
        js["weights"] = ordered_json{{"primary", 1.0}};
        break;
      }
      case ParamSource::Crossfade: {
        js["param_source"] = "xfade";
        js["weights"] = ordered_json{{"left", 1.0 - p.weight_b},
                                     {"right", p.weight_b}};
        ordered_json ids = ordered_json::array();
        ids.push_back(p.segment >= 0 ? ordered_json(p.segment)
                                     : ordered_json(nullptr));
        ids.push_back(p.segment_b >= 0 ? ordered_json(p.segment_b)
                                       : ordered_json(nullptr));
        js["segments"] = std::move(ids);
        js["t_src"] = ordered_json::array({p.t_src, p.t_src_b});
        break;
      }
    }
    frames.push_back(std::move(js));
  }
  doc["frames"] = std::move(frames);

  return doc.dump(2) + "\n";
}

std::string render_report(const EditPlan& plan,
                          const AlignedTranscript& transcript) {
  std::string out;
  out += "edit plan\n";
  out += "=========\n";
  switch (plan.edit.kind) {
    case EditKind::Insert: out += "kind: insert\n"; break;
    case EditKind::Delete: out += "kind: delete\n"; break;
    case EditKind::Rearrange: out += "kind: rearrange\n"; break;
  }
  out += "words:";
  for (const EditWord& w : plan.edit.words) {
    out += ' ';
    out += w.text;
    if (w.orig_index)
      out += "[kept " + std::to_string(*w.orig_index) + "]";
    else
      out += "[new]";
  }
  out += '\n';

  out += "query: " + std::to_string(plan.query.size()) + " phones, " +
         fmt("%.3f", plan.query.total_duration()) + " s:";
  for (const Phone& p : plan.query.phones()) {
    out += ' ';
    out += p.label.text();
  }
  out += '\n';

  const BackgroundMap& bg = plan.background;
  out += "region: source frames " + std::to_string(bg.region.begin) + ".." +
         std::to_string(bg.region.end) + " (" +
         fmt("%.3f", static_cast<double>(bg.region.begin) / bg.fps_src) +
         ".." +
         fmt("%.3f", static_cast<double>(bg.region.end) / bg.fps_src) +
         " s @ " + fmt("%g", bg.fps_src) + " fps)\n";
  out += "retime: x" + fmt("%.4f", bg.retime_factor) + " -> " +
         std::to_string(bg.out_frames) + " output frames @ " +
         fmt("%g", bg.fps_out) + " fps\n";
  out += "edit span: output frames " + std::to_string(plan.edit_span.begin) +
         ".." + std::to_string(plan.edit_span.end) + "\n";
  if (!plan.search.split.empty())
    out += "retrieval cost: " + fmt("%.6f", plan.search.total_cost) + "\n";

  out += "segments:\n";
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const PlacedSegment& seg = plan.segments[i];
    out += "  [" + std::to_string(i) + "] ";
    out += seg.kind == PlacedSegment::Kind::Retrieved ? "retrieved" : "kept     ";
    out += " out " + fmt("%.3f", seg.out_t0) + ".." + fmt("%.3f", seg.out_t1) +
           " s | frames " + std::to_string(seg.out_frames.begin) + ".." +
           std::to_string(seg.out_frames.end) + " | src " +
           fmt("%.3f", seg.src_t0) + ".." + fmt("%.3f", seg.src_t1) + " s";
    if (seg.kind == PlacedSegment::Kind::Retrieved)
      out += " | cost " + fmt("%.6f", seg.cost);
    const std::string words = words_over(transcript, seg.src_t0, seg.src_t1);
    if (!words.empty()) out += " | " + words;
    out += '\n';
  }

  out += "transitions:";
  if (plan.transitions.empty()) out += " none";
  out += '\n';
  for (const Transition& t : plan.transitions)
    out += "  t=" + fmt("%.3f", t.time) + " s, half-width " +
           fmt("%.4f", t.half_width) + " s\n";
  return out;
}

}  // namespace visedit
