#include "visedit/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <utility>

namespace visedit {

namespace {

// Tolerance for "the same source instant" when deciding whether two
// rate-1 pieces join without a seam.
constexpr double kTimeEps = 1e-9;
// Sample positions this close to a frame index (in frames) snap onto it, so
// rate-1 playback copies frames bitwise instead of picking up float residue
// from the seconds<->frames conversions.
constexpr double kFrameSnapEps = 1e-6;

std::int64_t round_half_away(double x) { return std::llround(x); }

struct Sampled {
  ParameterVector v;
  bool on_grid = false;
  std::int64_t grid = 0;
};

// Every coefficient at a fractional frame position, clamped to the track.
Sampled sample_full(const ParameterTrack& track, double frame_pos) {
  const auto n = static_cast<std::int64_t>(track.frames.size());
  const double snapped = std::nearbyint(frame_pos);
  if (std::abs(frame_pos - snapped) <= kFrameSnapEps) frame_pos = snapped;
  frame_pos = std::clamp(frame_pos, 0.0, static_cast<double>(n - 1));
  const auto lo = static_cast<std::int64_t>(std::floor(frame_pos));
  const double w = frame_pos - static_cast<double>(lo);
  Sampled out;
  if (w == 0.0) {
    out.v = track.frames[static_cast<std::size_t>(lo)];
    out.on_grid = true;
    out.grid = lo;
    return out;
  }
  const ParameterVector& a = track.frames[static_cast<std::size_t>(lo)];
  const ParameterVector& b = track.frames[static_cast<std::size_t>(lo + 1)];
  for (std::size_t i = 0; i < ParameterVector::kDim; ++i)
    out.v.v[i] = (1.0 - w) * a.v[i] + w * b.v[i];
  return out;
}

// Source interval each query phone of a match plays: its aligned corpus
// phone, or — for phones the alignment left unmatched — the corpus gap
// between the nearest aligned neighbours (window edges when there are none).
struct SourceSpan {
  double t0 = 0.0;
  double t1 = 0.0;
};

double corpus_position_time(const PhoneSequence& corpus, std::size_t index) {
  if (corpus.empty()) return 0.0;
  if (index < corpus.size()) return corpus[index].t_in;
  return corpus[corpus.size() - 1].t_out;
}

std::vector<SourceSpan> resolve_phone_sources(const SubsequenceMatch& match,
                                              const PhoneSequence& corpus) {
  const IndexRange q = match.query_range;
  if (q.empty()) throw ParseError{"match covers no query phones"};
  if (match.corpus_range.begin > corpus.size() ||
      match.corpus_range.end > corpus.size() ||
      match.corpus_range.begin > match.corpus_range.end)
    throw ParseError{"match window outside the corpus"};

  std::vector<std::optional<std::size_t>> aligned(q.size());
  for (const AlignPair& pair : match.alignment) {
    if (!pair.query_index || !pair.corpus_index) continue;
    if (!q.contains(*pair.query_index) ||
        !match.corpus_range.contains(*pair.corpus_index))
      throw ParseError{"alignment pair outside the match ranges"};
    aligned[*pair.query_index - q.begin] = *pair.corpus_index;
  }

  double window_t0, window_t1;
  if (match.corpus_range.empty()) {
    window_t0 = window_t1 = corpus_position_time(corpus, match.corpus_range.begin);
  } else {
    window_t0 = corpus[match.corpus_range.begin].t_in;
    window_t1 = corpus[match.corpus_range.end - 1].t_out;
  }

  std::vector<SourceSpan> spans(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (aligned[i]) {
      const Phone& donor = corpus[*aligned[i]];
      spans[i] = {donor.t_in, donor.t_out};
      continue;
    }
    double lo = window_t0;
    for (std::size_t j = i; j-- > 0;) {
      if (aligned[j]) {
        lo = corpus[*aligned[j]].t_out;
        break;
      }
    }
    double hi = window_t1;
    for (std::size_t j = i + 1; j < q.size(); ++j) {
      if (aligned[j]) {
        hi = corpus[*aligned[j]].t_in;
        break;
      }
    }
    if (hi < lo) hi = lo;
    spans[i] = {lo, hi};
  }
  return spans;
}

// ---- blend internals ----

struct PhoneSpan {
  double out_t0 = 0.0;  // output seconds
  double out_t1 = 0.0;
  double s_t0 = 0.0;    // source seconds
  double s_t1 = 0.0;
  std::int64_t f_begin = 0;  // absolute output frames
  std::int64_t f_end = 0;
};

struct Piece {
  bool retrieved = false;
  bool context = false;
  int segment = -1;  // index into the result's segment list; -1 for context
  double out_t0 = 0.0;
  double out_t1 = 0.0;
  FrameRange frames;
  // Rate-1 map for context/identity pieces: src(t) = src_anchor + (t - out_t0).
  double src_anchor = 0.0;
  std::vector<PhoneSpan> spans;  // retrieved pieces only
  double src_t0 = 0.0;           // footage interval, for reporting
  double src_t1 = 0.0;

  double duration() const { return out_t1 - out_t0; }
  double src_start() const {
    return retrieved ? spans.front().s_t0 : src_anchor;
  }
  double src_end() const {
    return retrieved ? spans.back().s_t1 : src_anchor + duration();
  }
};

// Source time (seconds) a piece plays at output time t, extending its first
// and last phone maps beyond the piece for crossfade sampling.
double continuous_src(const Piece& p, double t) {
  if (!p.retrieved) return p.src_anchor + (t - p.out_t0);
  const PhoneSpan* s = &p.spans.front();
  for (const PhoneSpan& cand : p.spans) {
    if (t >= cand.out_t0) s = &cand;
    else break;
  }
  const double od = s->out_t1 - s->out_t0;
  const double u = od > 0.0 ? (t - s->out_t0) / od : 0.0;
  return s->s_t0 + u * (s->s_t1 - s->s_t0);
}

// Source time for an output frame the piece owns. Retrieved phones place
// their frames uniformly over the donor interval, first sample on its start.
double primary_src(const Piece& p, std::int64_t frame, double fps_out) {
  const double t = static_cast<double>(frame) / fps_out;
  if (!p.retrieved) return p.src_anchor + (t - p.out_t0);
  for (const PhoneSpan& s : p.spans) {
    if (frame >= s.f_begin && frame < s.f_end) {
      const auto n = s.f_end - s.f_begin;
      const auto i = frame - s.f_begin;
      return s.s_t0 + (s.s_t1 - s.s_t0) *
                          (static_cast<double>(i) / static_cast<double>(n));
    }
  }
  return continuous_src(p, t);  // unreachable for owned frames
}

struct Seam {
  std::size_t before = 0;  // piece indices
  std::size_t after = 0;
  double time = 0.0;
  double half_width = 0.0;
};

void copy_block(ParameterVector& dst, const ParameterVector& src,
                std::size_t offset, std::size_t dim) {
  std::memcpy(dst.v.data() + offset, src.v.data() + offset,
              dim * sizeof(double));
}

void mix_block(ParameterVector& dst, const ParameterVector& a,
               const ParameterVector& b, double u, std::size_t offset,
               std::size_t dim) {
  for (std::size_t i = offset; i < offset + dim; ++i)
    dst.v[i] = (1.0 - u) * a.v[i] + u * b.v[i];
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

BackgroundMap retime_background(const ParameterTrack& track, FrameRange region,
                                double new_duration_s, double fps_out) {
  const auto n = static_cast<std::int64_t>(track.frames.size());
  if (track.fps <= 0.0 || !std::isfinite(track.fps))
    throw ParseError{"track frame rate must be positive"};
  if (region.begin < 0 || region.end > n)
    throw OutOfTrackRange{"background region leaves the track (" +
                          std::to_string(region.begin) + ".." +
                          std::to_string(region.end) + " of " +
                          std::to_string(n) + " frames)"};
  if (region.empty()) throw EmptyRegion{"background region is empty"};
  if (!(new_duration_s > 0.0) || !std::isfinite(new_duration_s))
    throw EmptyRegion{"retimed region would have no duration"};
  if (fps_out == 0.0) fps_out = track.fps;
  if (!(fps_out > 0.0) || !std::isfinite(fps_out))
    throw ParseError{"output frame rate must be positive"};

  BackgroundMap map;
  map.region = region;
  map.fps_src = track.fps;
  map.fps_out = fps_out;
  const double old_duration =
      static_cast<double>(region.size()) / track.fps;
  map.retime_factor = new_duration_s / old_duration;
  map.out_frames = round_half_away(new_duration_s * fps_out);
  if (map.out_frames <= 0) throw EmptyRegion{"retimed region rounds to zero frames"};

  map.mapping.resize(static_cast<std::size_t>(map.out_frames));
  const bool native = fps_out == track.fps;
  for (std::int64_t j = 0; j < map.out_frames; ++j) {
    // Native-rate mapping is round(j / retime_factor); a different output
    // rate walks the same source timeline at its own step.
    const double rel =
        native ? static_cast<double>(j) / map.retime_factor
               : (static_cast<double>(j) / fps_out) * track.fps / map.retime_factor;
    const std::int64_t src =
        std::clamp<std::int64_t>(round_half_away(rel), 0, region.size() - 1);
    map.mapping[static_cast<std::size_t>(j)] = region.begin + src;
  }
  return map;
}

std::vector<ParameterVector> retime_snippet(const ParameterTrack& track,
                                            const SubsequenceMatch& match,
                                            const PhoneSequence& query,
                                            const PhoneSequence& corpus,
                                            double fps_out) {
  if (track.frames.empty()) throw OutOfTrackRange{"parameter track is empty"};
  if (track.fps <= 0.0) throw ParseError{"track frame rate must be positive"};
  if (fps_out == 0.0) fps_out = track.fps;
  if (!(fps_out > 0.0) || !std::isfinite(fps_out))
    throw ParseError{"output frame rate must be positive"};
  if (match.query_range.end > query.size())
    throw ParseError{"match query range outside the query"};

  const std::vector<SourceSpan> sources = resolve_phone_sources(match, corpus);
  const double local0 = query[match.query_range.begin].t_in;
  const auto grid = [&](double t) {
    return round_half_away(fps_out * (t - local0));
  };

  std::vector<ParameterVector> out;
  for (std::size_t qi = match.query_range.begin; qi < match.query_range.end;
       ++qi) {
    const SourceSpan& src = sources[qi - match.query_range.begin];
    const std::int64_t f0 = grid(query[qi].t_in);
    const std::int64_t f1 = grid(query[qi].t_out);
    const std::int64_t count = f1 - f0;
    for (std::int64_t i = 0; i < count; ++i) {
      const double t_src = src.t0 + (src.t1 - src.t0) *
                                        (static_cast<double>(i) /
                                         static_cast<double>(count));
      out.push_back(sample_full(track, t_src * track.fps).v);
    }
  }
  return out;
}

BlendResult blend(const PhoneSequence& query,
                  const std::vector<PlacementPiece>& placement,
                  double window_t0, double window_t1,
                  const BackgroundMap& background, const ParameterTrack& track,
                  const PhoneSequence& corpus, double window_s) {
  if (query.empty()) throw EmptyInput{"query has no phones"};
  if (placement.empty()) throw EmptyInput{"placement has no pieces"};
  if (track.frames.empty()) throw OutOfTrackRange{"parameter track is empty"};
  if (window_s < 0.0 || !std::isfinite(window_s))
    throw ParseError{"transition window must be non-negative"};
  if (window_t1 < window_t0)
    throw ParseError{"edit window ends before it starts"};
  const double fps_src = track.fps;
  const double fps_out = background.fps_out;
  if (fps_src <= 0.0 || fps_out <= 0.0)
    throw ParseError{"frame rates must be positive"};
  const auto n_src = static_cast<std::int64_t>(track.frames.size());
  if (background.region.begin < 0 || background.region.end > n_src ||
      background.region.empty())
    throw OutOfTrackRange{"background region leaves the track"};
  if (background.mapping.size() !=
      static_cast<std::size_t>(background.out_frames))
    throw ParseError{"background mapping length disagrees with its frame count"};

  // Placement must tile the query in order.
  std::size_t covered = 0;
  for (const PlacementPiece& p : placement) {
    if (p.query_range.begin != covered || p.query_range.empty() ||
        p.query_range.end > query.size())
      throw ParseError{"placement pieces must tile the query in order"};
    covered = p.query_range.end;
  }
  if (covered != query.size())
    throw ParseError{"placement does not cover the whole query"};

  const double region_t0 = static_cast<double>(background.region.begin) / fps_src;
  const double region_t1 = static_cast<double>(background.region.end) / fps_src;
  if (window_t0 < region_t0 - kTimeEps || window_t1 > region_t1 + kTimeEps)
    throw OutOfTrackRange{"edit window extends beyond the background region"};

  const double q0 = query[0].t_in;
  const double query_span = query[query.size() - 1].t_out - q0;
  const double left_s = window_t0 - region_t0;
  const double right_s = region_t1 - window_t1;
  const std::int64_t n_out = background.out_frames;
  const auto grid = [&](double t) {
    return round_half_away(fps_out * (t - q0));
  };
  const std::int64_t edit_count = grid(query[query.size() - 1].t_out);
  const std::int64_t edit_begin = std::clamp<std::int64_t>(
      round_half_away(left_s * fps_out), 0, n_out - edit_count);
  const std::int64_t edit_end = edit_begin + edit_count;

  // ---- lay out pieces ----
  std::vector<Piece> pieces;
  {
    Piece left;
    left.context = true;
    left.out_t0 = 0.0;
    left.out_t1 = left_s;
    left.frames = {0, edit_begin};
    left.src_anchor = region_t0;
    left.src_t0 = region_t0;
    left.src_t1 = window_t0;
    if (!left.frames.empty() || left.duration() > kTimeEps)
      pieces.push_back(std::move(left));
  }
  std::vector<PlacedSegment> segments;
  for (const PlacementPiece& pp : placement) {
    Piece piece;
    piece.retrieved = pp.retrieved;
    piece.segment = static_cast<int>(segments.size());
    piece.out_t0 = left_s + (query[pp.query_range.begin].t_in - q0);
    piece.out_t1 = left_s + (query[pp.query_range.end - 1].t_out - q0);
    piece.frames = {edit_begin + grid(query[pp.query_range.begin].t_in),
                    edit_begin + grid(query[pp.query_range.end - 1].t_out)};
    PlacedSegment seg;
    seg.query_range = pp.query_range;
    seg.out_frames = piece.frames;
    seg.out_t0 = piece.out_t0;
    seg.out_t1 = piece.out_t1;
    if (pp.retrieved) {
      if (pp.match.query_range != pp.query_range)
        throw ParseError{"retrieved piece and its match disagree on the query"};
      const std::vector<SourceSpan> sources =
          resolve_phone_sources(pp.match, corpus);
      const double track_end = static_cast<double>(n_src) / fps_src;
      for (std::size_t qi = pp.query_range.begin; qi < pp.query_range.end;
           ++qi) {
        const SourceSpan& src = sources[qi - pp.query_range.begin];
        if (src.t0 < -kTimeEps || src.t1 > track_end + kTimeEps)
          throw OutOfTrackRange{"matched footage lies outside the track"};
        PhoneSpan span;
        span.out_t0 = left_s + (query[qi].t_in - q0);
        span.out_t1 = left_s + (query[qi].t_out - q0);
        span.s_t0 = src.t0;
        span.s_t1 = src.t1;
        span.f_begin = edit_begin + grid(query[qi].t_in);
        span.f_end = edit_begin + grid(query[qi].t_out);
        piece.spans.push_back(span);
      }
      piece.src_t0 = piece.spans.front().s_t0;
      piece.src_t1 = piece.spans.back().s_t1;
      if (!pp.match.corpus_range.empty()) {
        piece.src_t0 = corpus[pp.match.corpus_range.begin].t_in;
        piece.src_t1 = corpus[pp.match.corpus_range.end - 1].t_out;
      }
      seg.kind = PlacedSegment::Kind::Retrieved;
      seg.cost = pp.match.cost;
      seg.match = pp.match;
    } else {
      piece.src_anchor = pp.src_anchor;
      piece.src_t0 = pp.src_anchor;
      piece.src_t1 = pp.src_anchor + piece.duration();
      seg.kind = PlacedSegment::Kind::Identity;
    }
    seg.src_t0 = piece.src_t0;
    seg.src_t1 = piece.src_t1;
    segments.push_back(std::move(seg));
    pieces.push_back(std::move(piece));
  }
  {
    Piece right;
    right.context = true;
    right.out_t0 = left_s + query_span;
    right.out_t1 = left_s + query_span + right_s;
    right.frames = {edit_end, n_out};
    right.src_anchor = window_t1;
    right.src_t0 = window_t1;
    right.src_t1 = region_t1;
    if (!right.frames.empty() || right.duration() > kTimeEps)
      pieces.push_back(std::move(right));
  }

  // ---- seams ----
  std::vector<Seam> seams;
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    const Piece& a = pieces[i];
    const Piece& b = pieces[i + 1];
    const bool joined = !a.retrieved && !b.retrieved &&
                        std::abs(a.src_end() - b.src_start()) <= kTimeEps;
    if (joined) continue;
    const double da = a.duration();
    const double db = b.duration();
    if (window_s > 0.0 && da <= 0.0 && db <= 0.0)
      throw WindowTooLarge{"transition has no footage on either side to blend"};
    Seam seam;
    seam.before = i;
    seam.after = i + 1;
    seam.time = b.out_t0;
    seam.half_width = std::min({window_s / 2.0, da / 2.0, db / 2.0});
    if (seam.half_width < 0.0) seam.half_width = 0.0;
    seams.push_back(seam);
  }

  // ---- frame ownership ----
  std::vector<std::size_t> owner(static_cast<std::size_t>(n_out), pieces.size());
  for (std::size_t pi = 0; pi < pieces.size(); ++pi)
    for (std::int64_t j = pieces[pi].frames.begin; j < pieces[pi].frames.end; ++j)
      owner[static_cast<std::size_t>(j)] = pi;
  for (std::size_t j = 0; j < owner.size(); ++j)
    if (owner[j] == pieces.size())
      throw ParseError{"internal: output frame left unowned"};

  // ---- illumination ramps over retrieved runs ----
  struct Ramp {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::array<double, ParameterVector::kIlluminationDim> a{};
    std::array<double, ParameterVector::kIlluminationDim> b{};
  };
  const auto gamma_of = [&](const Sampled& s) {
    std::array<double, ParameterVector::kIlluminationDim> g{};
    const auto block = s.v.illumination();
    std::copy(block.begin(), block.end(), g.begin());
    return g;
  };
  const auto plain_sample = [&](std::int64_t j) {
    const Piece& p = pieces[owner[static_cast<std::size_t>(j)]];
    return sample_full(track, primary_src(p, j, fps_out) * fps_src);
  };
  std::vector<Ramp> ramps;
  for (std::int64_t j = 0; j < n_out;) {
    if (!pieces[owner[static_cast<std::size_t>(j)]].retrieved) {
      ++j;
      continue;
    }
    Ramp ramp;
    ramp.begin = j;
    while (j < n_out && pieces[owner[static_cast<std::size_t>(j)]].retrieved) ++j;
    ramp.end = j;
    if (ramp.begin > 0) {
      ramp.a = gamma_of(plain_sample(ramp.begin - 1));
    } else {
      Sampled s;
      s.v = track.frames[static_cast<std::size_t>(background.region.begin)];
      ramp.a = gamma_of(s);
    }
    if (ramp.end < n_out) {
      ramp.b = gamma_of(plain_sample(ramp.end));
    } else {
      Sampled s;
      s.v = track.frames[static_cast<std::size_t>(background.region.end - 1)];
      ramp.b = gamma_of(s);
    }
    ramps.push_back(ramp);
  }
  const auto ramp_at = [&](std::int64_t j) -> const Ramp* {
    for (const Ramp& r : ramps)
      if (j >= r.begin && j < r.end) return &r;
    return nullptr;
  };

  // ---- assemble frames ----
  BlendResult result;
  result.track.fps = fps_out;
  result.track.frames.resize(static_cast<std::size_t>(n_out));
  result.track.provenance.resize(static_cast<std::size_t>(n_out));
  result.edit_span = {edit_begin, edit_end};
  const ParameterVector& region_head =
      track.frames[static_cast<std::size_t>(background.region.begin)];

  for (std::int64_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / fps_out;
    const std::int64_t bg = background.mapping[static_cast<std::size_t>(j)];
    ParameterVector& out = result.track.frames[static_cast<std::size_t>(j)];
    FrameProvenance& prov = result.track.provenance[static_cast<std::size_t>(j)];
    prov.bg_src_frame = bg;

    copy_block(out, track.frames[static_cast<std::size_t>(bg)],
               ParameterVector::kPoseOffset, ParameterVector::kPoseDim);
    copy_block(out, region_head, ParameterVector::kGeometryOffset,
               ParameterVector::kGeometryDim);
    copy_block(out, region_head, ParameterVector::kReflectanceOffset,
               ParameterVector::kReflectanceDim);

    const Piece& own = pieces[owner[static_cast<std::size_t>(j)]];
    const double own_src = primary_src(own, j, fps_out);
    const Sampled own_sample = sample_full(track, own_src * fps_src);

    // Nearest transition whose window covers this frame time.
    const Seam* active = nullptr;
    for (const Seam& seam : seams) {
      if (seam.half_width <= 0.0) continue;
      if (t < seam.time - seam.half_width || t >= seam.time + seam.half_width)
        continue;
      if (!active || std::abs(t - seam.time) < std::abs(t - active->time))
        active = &seam;
    }

    if (active) {
      const Piece& pa = pieces[active->before];
      const Piece& pb = pieces[active->after];
      const double u =
          (t - (active->time - active->half_width)) / (2.0 * active->half_width);
      const bool own_a = &own == &pa;
      const double src_a = own_a ? own_src : continuous_src(pa, t);
      const double src_b = (&own == &pb) ? own_src : continuous_src(pb, t);
      const Sampled sa = own_a ? own_sample : sample_full(track, src_a * fps_src);
      const Sampled sb = (&own == &pb) ? own_sample
                                       : sample_full(track, src_b * fps_src);
      mix_block(out, sa.v, sb.v, u, ParameterVector::kExpressionOffset,
                ParameterVector::kExpressionDim);
      // Illumination fades only between footage pieces played at their own
      // rate; retrieved illumination is ignored (the ramp covers it).
      if (!pa.retrieved && !pb.retrieved) {
        mix_block(out, sa.v, sb.v, u, ParameterVector::kIlluminationOffset,
                  ParameterVector::kIlluminationDim);
      } else {
        copy_block(out, own_sample.v, ParameterVector::kIlluminationOffset,
                   ParameterVector::kIlluminationDim);
      }
      prov.source = ParamSource::Crossfade;
      prov.segment = pa.segment;
      prov.t_src = src_a;
      prov.segment_b = pb.segment;
      prov.t_src_b = src_b;
      prov.weight_b = u;
    } else {
      copy_block(out, own_sample.v, ParameterVector::kExpressionOffset,
                 ParameterVector::kExpressionDim);
      copy_block(out, own_sample.v, ParameterVector::kIlluminationOffset,
                 ParameterVector::kIlluminationDim);
      const bool is_bg = !own.retrieved && own_sample.on_grid &&
                         own_sample.grid == bg;
      prov.source = is_bg ? ParamSource::Background : ParamSource::Snippet;
      prov.segment = own.segment;
      prov.t_src = own_sample.on_grid
                       ? static_cast<double>(own_sample.grid) / fps_src
                       : own_src;
    }

    if (const Ramp* ramp = ramp_at(j)) {
      const double n = static_cast<double>(ramp->end - ramp->begin);
      const double u = static_cast<double>(j - ramp->begin + 1) / (n + 1.0);
      auto block = out.illumination();
      for (std::size_t i = 0; i < ParameterVector::kIlluminationDim; ++i)
        block[i] = ramp->a[i] + (ramp->b[i] - ramp->a[i]) * u;
    }
  }

  for (const Seam& seam : seams)
    result.transitions.push_back({seam.time, seam.half_width});
  result.segments = std::move(segments);
  return result;
}

EditPlan plan_edit(const EditSpec& edit, const AlignedTranscript& transcript,
                   const ParameterTrack& track, const PronunciationDict& dict,
                   const PlanOptions& options) {
  options.costs.validate();
  if (options.window_s < 0.0 || !std::isfinite(options.window_s))
    throw ParseError{"transition window must be non-negative"};
  if (options.fps_out < 0.0 || !std::isfinite(options.fps_out))
    throw ParseError{"output frame rate must be non-negative"};
  if (transcript.phones().empty()) throw EmptyInput{"transcript has no phones"};
  if (track.frames.empty()) throw EmptyInput{"parameter track is empty"};
  if (track.fps <= 0.0 || !std::isfinite(track.fps))
    throw ParseError{"track frame rate must be positive"};

  const double fps_src = track.fps;
  const double fps_out = options.fps_out > 0.0 ? options.fps_out : fps_src;
  const auto n_frames = static_cast<std::int64_t>(track.frames.size());
  const PhoneSequence& corpus = transcript.phones();
  const std::vector<Word>& words = transcript.words();

  const DurationDefaults defaults = duration_defaults_from(transcript);
  QueryBuild built = build_query_detailed(edit, dict, transcript, defaults,
                                          options.pron_choice);

  // ---- the replaced source span ----
  std::optional<std::size_t> span_lo, span_hi;
  for (const EditWord& w : edit.words) {
    if (!w.orig_index) continue;
    if (!span_lo || *w.orig_index < *span_lo) span_lo = *w.orig_index;
    if (!span_hi || *w.orig_index > *span_hi) span_hi = *w.orig_index;
  }
  double window_t0, window_t1;
  std::size_t sentence_lo, sentence_hi;
  if (span_lo) {
    const Word& first = words[*span_lo];
    const Word& last = words[*span_hi];
    window_t0 = corpus[first.phones.begin].t_in;
    window_t1 = corpus[last.phones.end - 1].t_out;
    sentence_lo = transcript.sentence_of_word(*span_lo);
    sentence_hi = transcript.sentence_of_word(*span_hi);
  } else {
    if (edit.anchor > words.size())
      throw ParseError{"anchor word index " + std::to_string(edit.anchor) +
                       " outside the transcript"};
    if (edit.anchor < words.size()) {
      window_t0 = corpus[words[edit.anchor].phones.begin].t_in;
      sentence_lo = transcript.sentence_of_word(edit.anchor);
    } else {
      window_t0 = corpus[corpus.size() - 1].t_out;
      sentence_lo = transcript.sentence_of_word(words.size() - 1);
    }
    window_t1 = window_t0;
    sentence_hi = sentence_lo;
  }

  // ---- the background region: the sentence(s) being re-rendered ----
  FrameRange region;
  if (options.region) {
    region = *options.region;
    if (region.begin < 0 || region.end > n_frames)
      throw OutOfTrackRange{"background region leaves the track"};
    if (region.empty()) throw EmptyRegion{"background region is empty"};
  } else {
    const IndexRange lo_phones = transcript.sentence_phone_range(sentence_lo);
    const IndexRange hi_phones = transcript.sentence_phone_range(sentence_hi);
    const double t0 = corpus[lo_phones.begin].t_in;
    const double t1 = corpus[hi_phones.end - 1].t_out;
    region.begin = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::floor(t0 * fps_src + kTimeEps)));
    region.end = std::min<std::int64_t>(
        n_frames, static_cast<std::int64_t>(std::ceil(t1 * fps_src - kTimeEps)));
    if (region.empty())
      throw EmptyRegion{"the edited sentence covers no whole frame"};
  }
  const double region_t0 = static_cast<double>(region.begin) / fps_src;
  const double region_t1 = static_cast<double>(region.end) / fps_src;
  if (window_t0 < region_t0 - kTimeEps || window_t1 > region_t1 + kTimeEps)
    throw OutOfTrackRange{"background region does not contain the edited span"};

  // ---- retrieval over runs of new words ----
  // Phones in the background sentence(s) are off limits: the edit may not
  // source from the footage it is replacing. With a caller-supplied region
  // the phones are found by time overlap instead; the sentence rule keeps
  // neighbouring phones eligible when a sentence boundary is not
  // frame-aligned.
  std::size_t excl_begin = corpus.size(), excl_end = 0;
  if (options.region) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].t_out > region_t0 + kTimeEps &&
          corpus[i].t_in < region_t1 - kTimeEps) {
        excl_begin = std::min(excl_begin, i);
        excl_end = std::max(excl_end, i + 1);
      }
    }
  } else {
    excl_begin = transcript.sentence_phone_range(sentence_lo).begin;
    excl_end = transcript.sentence_phone_range(sentence_hi).end;
  }
  std::vector<IndexRange> chunks;
  if (excl_begin >= excl_end) {
    chunks.push_back({0, corpus.size()});
  } else {
    if (excl_begin > 0) chunks.push_back({0, excl_begin});
    if (excl_end < corpus.size()) chunks.push_back({excl_end, corpus.size()});
  }

  SearchResult combined;
  std::vector<PlacementPiece> placement;
  std::size_t pi = 0;
  while (pi < built.pieces.size()) {
    const QueryPiece& piece = built.pieces[pi];
    if (piece.kind == QueryPiece::Kind::New) {
      std::size_t run_end = pi;
      while (run_end < built.pieces.size() &&
             built.pieces[run_end].kind == QueryPiece::Kind::New)
        ++run_end;
      const std::size_t qb = piece.query_phones.begin;
      const std::size_t qe = built.pieces[run_end - 1].query_phones.end;
      if (chunks.empty())
        throw InsufficientCorpus{
            "the edit region leaves no corpus to retrieve from"};
      SearchOptions so;
      so.max_query_length = options.max_query_length;
      so.corpus_chunks = chunks;
      so.threads = options.threads;
      so.dp_dump = options.dp_dump;
      SearchResult res =
          search(built.query.slice(qb, qe), corpus, options.costs, so);
      for (SubsequenceMatch& m : res.split) {
        m.query_range.begin += qb;
        m.query_range.end += qb;
        for (AlignPair& pair : m.alignment)
          if (pair.query_index) *pair.query_index += qb;
        PlacementPiece pp;
        pp.retrieved = true;
        pp.query_range = m.query_range;
        pp.match = m;
        placement.push_back(std::move(pp));
        combined.split.push_back(std::move(m));
      }
      combined.total_cost += res.total_cost;
      pi = run_end;
      continue;
    }
    // Footage piece: split at internal source-time gaps so each placement
    // plays one continuous stretch at rate 1.
    const IndexRange src = piece.source_phones;
    std::size_t sub_begin = src.begin;
    for (std::size_t s = src.begin; s < src.end; ++s) {
      const bool last = s + 1 == src.end;
      const bool gap =
          !last && std::abs(corpus[s + 1].t_in - corpus[s].t_out) > kTimeEps;
      if (!last && !gap) continue;
      PlacementPiece pp;
      pp.retrieved = false;
      pp.query_range = {piece.query_phones.begin + (sub_begin - src.begin),
                        piece.query_phones.begin + (s + 1 - src.begin)};
      pp.src_anchor = corpus[sub_begin].t_in;
      placement.push_back(std::move(pp));
      sub_begin = s + 1;
    }
    ++pi;
  }

  // ---- timing and assembly ----
  const double query_span =
      built.query[built.query.size() - 1].t_out - built.query[0].t_in;
  const double new_duration =
      (window_t0 - region_t0) + query_span + (region_t1 - window_t1);
  BackgroundMap background =
      retime_background(track, region, new_duration, fps_out);
  BlendResult blended =
      blend(built.query, placement, window_t0, window_t1, background, track,
            corpus, options.window_s);

  EditPlan plan;
  plan.edit = edit;
  plan.query = std::move(built.query);
  plan.search = std::move(combined);
  plan.background = std::move(background);
  plan.segments = std::move(blended.segments);
  plan.transitions = std::move(blended.transitions);
  plan.edit_span = blended.edit_span;
  plan.track = std::move(blended.track);
  plan.window_s = options.window_s;
  plan.source_track_hash = fnv1a64(serialize_parameter_track(track));
  return plan;
}

}  // namespace visedit
