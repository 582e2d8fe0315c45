#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visedit/core.hpp"
#include "visedit/errors.hpp"
#include "visedit/ingest.hpp"
#include "visedit/search.hpp"

namespace visedit {

// Half-open [begin, end) frame range.
struct FrameRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t size() const { return end - begin; }
  bool empty() const { return begin >= end; }

  bool operator==(const FrameRange&) const = default;
};

// Nearest-neighbour remap of a source region onto a new duration.
struct BackgroundMap {
  FrameRange region;           // source frames being replayed
  double retime_factor = 1.0;  // new duration / region duration
  double fps_src = 0.0;
  double fps_out = 0.0;
  std::int64_t out_frames = 0;
  // Output frame -> absolute source frame; monotone non-decreasing.
  std::vector<std::int64_t> mapping;

  bool operator==(const BackgroundMap&) const = default;
};

// Stretch or squeeze the region to `new_duration_s`. Output frame j plays
// source frame clamp(round(j / retime_factor)) within the region (at the
// track's own rate; a different fps_out generalizes the same mapping).
// Throws EmptyRegion for an empty region or zero output, OutOfTrackRange
// when the region leaves the track.
BackgroundMap retime_background(const ParameterTrack& track, FrameRange region,
                                double new_duration_s, double fps_out = 0.0);

// Resample the matched corpus footage onto the query's timing: each aligned
// query phone contributes round-boundary frame counts sampled uniformly
// from its donor phone's interval (unaligned phones sample the corpus gap
// between their aligned neighbours). Frames carry every coefficient,
// linearly interpolated between source frames.
std::vector<ParameterVector> retime_snippet(const ParameterTrack& track,
                                            const SubsequenceMatch& match,
                                            const PhoneSequence& query,
                                            const PhoneSequence& corpus,
                                            double fps_out);

// What a slice of the new content plays: footage at its original rate
// (identity) or a retrieved snippet refitted onto the query timing.
struct PlacementPiece {
  bool retrieved = false;
  IndexRange query_range;
  // Retrieved pieces: the winning corpus window and alignment.
  SubsequenceMatch match;
  // Identity pieces: source time of the piece's first phone.
  double src_anchor = 0.0;

  bool operator==(const PlacementPiece&) const = default;
};

enum class ParamSource : std::uint8_t { Background, Snippet, Crossfade };

// Where output frame j took its expression block from.
struct FrameProvenance {
  std::int64_t bg_src_frame = 0;
  ParamSource source = ParamSource::Background;
  // Owning content segment (-1 for surrounding context).
  std::int32_t segment = -1;
  double t_src = 0.0;  // expression source time, seconds
  // Crossfade partner (segment index, its source time, and its weight).
  std::int32_t segment_b = -1;
  double t_src_b = 0.0;
  double weight_b = 0.0;

  bool operator==(const FrameProvenance&) const = default;
};

struct BlendedTrack {
  double fps = 0.0;
  std::vector<ParameterVector> frames;
  std::vector<FrameProvenance> provenance;

  bool operator==(const BlendedTrack&) const = default;
};

// A seam between two content pieces, in output seconds, with the half-width
// of the expression crossfade applied around it.
struct Transition {
  double time = 0.0;
  double half_width = 0.0;

  bool operator==(const Transition&) const = default;
};

// One piece of the edited span as placed in the output.
struct PlacedSegment {
  enum class Kind { Identity, Retrieved };

  Kind kind = Kind::Identity;
  IndexRange query_range;
  FrameRange out_frames;  // absolute output frames
  double out_t0 = 0.0;    // output seconds
  double out_t1 = 0.0;
  double src_t0 = 0.0;    // source footage interval played
  double src_t1 = 0.0;
  double cost = 0.0;      // match cost; 0 for identity
  SubsequenceMatch match; // empty for identity pieces

  bool operator==(const PlacedSegment&) const = default;
};

struct BlendResult {
  BlendedTrack track;
  std::vector<Transition> transitions;
  std::vector<PlacedSegment> segments;
  FrameRange edit_span;  // output frames covered by the content pieces
};

// Assemble the output track for an edit window replaced by new content.
//
// Per block: pose follows the retimed background verbatim; geometry and
// reflectance freeze at the region's first frame; expression plays each
// piece's footage with a crossfade of width `window_s` centered on every
// seam; illumination ramps linearly across retrieved runs and otherwise
// follows the piece, crossfaded at seams like expression.
//
// `window_t0`/`window_t1` bound the replaced span in source seconds;
// `placement` covers the query in order. Throws WindowTooLarge only when a
// seam has no footage on either side to fade across.
BlendResult blend(const PhoneSequence& query,
                  const std::vector<PlacementPiece>& placement,
                  double window_t0, double window_t1,
                  const BackgroundMap& background, const ParameterTrack& track,
                  const PhoneSequence& corpus, double window_s);

struct PlanOptions {
  CostParams costs;
  // Full width of the expression crossfade at each transition, seconds.
  // Zero disables blending.
  double window_s = 0.067;
  // Output frame rate; 0 keeps the track's rate.
  double fps_out = 0.0;
  // Override the background region (source frames). Defaults to the
  // sentence(s) containing the edit.
  std::optional<FrameRange> region;
  int threads = 1;
  // Dictionary variant per upper-case word (0-based).
  std::map<std::string, int> pron_choice;
  std::size_t max_query_length = 64;
  std::ostream* dp_dump = nullptr;
};

// Everything needed to render an edit: the query, the retrieval, the
// background remap, the blended parameters, and where the seams fell.
struct EditPlan {
  EditSpec edit;
  PhoneSequence query;
  // Retrieval over new-word runs; empty split when nothing was retrieved.
  SearchResult search;
  BackgroundMap background;
  std::vector<PlacedSegment> segments;
  std::vector<Transition> transitions;
  FrameRange edit_span;
  BlendedTrack track;
  double window_s = 0.0;
  std::uint64_t source_track_hash = 0;
};

// The full pipeline: build the query, search the rest of the corpus,
// retime the background, and blend.
EditPlan plan_edit(const EditSpec& edit, const AlignedTranscript& transcript,
                   const ParameterTrack& track, const PronunciationDict& dict,
                   const PlanOptions& options = {});

// FNV-1a over a byte string; used to fingerprint the source track.
std::uint64_t fnv1a64(std::string_view bytes);

// Machine-readable plan: header, per-segment sourcing, per-frame records.
std::string serialize_edl(const EditPlan& plan, const AlignedTranscript& transcript);

// Human-readable summary of the same plan.
std::string render_report(const EditPlan& plan, const AlignedTranscript& transcript);

}  // namespace visedit
