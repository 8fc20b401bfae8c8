#include "tracking.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "error.hpp"

namespace segmeta {

namespace {

// Overlap of a segment translated by (dr, dc) with every segment of `cur`,
// restricted to same-class candidates. Translated pixels falling outside
// the frame are dropped.
void shifted_overlaps(const Segment& seg, const PixelShift& shift, const SegmentSet& cur,
                      std::unordered_map<int, long long>& out) {
    out.clear();
    for (const Run& run : seg.runs) {
        int r = run.row + shift.dr;
        if (r < 0 || r >= cur.height) continue;
        int begin = std::max(run.col_begin + shift.dc, 0);
        int end = std::min(run.col_end + shift.dc, cur.width);
        for (int c = begin; c < end; ++c) {
            int32_t idx = cur.index_at(r, c);
            if (idx >= 0 && cur.segments[idx].class_id == seg.class_id) ++out[idx];
        }
    }
}

}  // namespace

std::vector<FramePair> match_with_shifts(const SegmentSet& prev, const SegmentSet& cur,
                                         const std::vector<PixelShift>& shifts,
                                         const MatchConfig& cfg) {
    if (prev.height != cur.height || prev.width != cur.width)
        fail("ResolutionMismatch", "consecutive frames differ in resolution");
    if (cfg.min_overlap < 1) fail("BadConfig", "minimum overlap must be >= 1");

    std::vector<FramePair> candidates;
    std::unordered_map<int, long long> overlaps;
    for (std::size_t pi = 0; pi < prev.segments.size(); ++pi) {
        PixelShift shift = pi < shifts.size() ? shifts[pi] : PixelShift{};
        if (!cfg.linear_shift) shift = {};
        shifted_overlaps(prev.segments[pi], shift, cur, overlaps);
        for (const auto& [ci, count] : overlaps)
            if (count >= cfg.min_overlap)
                candidates.push_back({static_cast<int>(pi), ci, count});
    }
    std::sort(candidates.begin(), candidates.end(), [](const FramePair& a, const FramePair& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.prev_segment != b.prev_segment) return a.prev_segment < b.prev_segment;
        return a.cur_segment < b.cur_segment;
    });

    std::vector<char> prev_taken(prev.segments.size(), 0), cur_taken(cur.segments.size(), 0);
    std::vector<FramePair> pairs;
    for (const FramePair& c : candidates) {
        if (prev_taken[c.prev_segment] || cur_taken[c.cur_segment]) continue;
        prev_taken[c.prev_segment] = 1;
        cur_taken[c.cur_segment] = 1;
        pairs.push_back(c);
    }
    std::sort(pairs.begin(), pairs.end(), [](const FramePair& a, const FramePair& b) {
        return a.prev_segment < b.prev_segment;
    });
    return pairs;
}

std::vector<FramePair> match_frames(const SegmentSet& prev, const SegmentSet* prev2,
                                    const SegmentSet& cur, const MatchConfig& cfg) {
    std::vector<PixelShift> shifts(prev.segments.size());
    if (prev2 && cfg.linear_shift) {
        std::vector<PixelShift> none(prev2->segments.size());
        for (const FramePair& p : match_with_shifts(*prev2, prev, none, cfg)) {
            const Segment& older = prev2->segments[p.prev_segment];
            const Segment& newer = prev.segments[p.cur_segment];
            shifts[p.cur_segment] = {
                static_cast<int>(std::lround(newer.centroid_r - older.centroid_r)),
                static_cast<int>(std::lround(newer.centroid_c - older.centroid_c))};
        }
    }
    return match_with_shifts(prev, cur, shifts, cfg);
}

std::vector<Track> build_tracks(const std::vector<const SegmentSet*>& sequence,
                                const MatchConfig& cfg) {
    std::vector<Track> tracks;
    // per frame: segment index -> track index
    std::vector<int> prev_track, cur_track;
    for (std::size_t f = 0; f < sequence.size(); ++f) {
        const SegmentSet& cur = *sequence[f];
        cur_track.assign(cur.segments.size(), -1);
        if (f > 0) {
            const SegmentSet& prev = *sequence[f - 1];
            std::vector<PixelShift> shifts(prev.segments.size());
            if (cfg.linear_shift) {
                for (std::size_t pi = 0; pi < prev.segments.size(); ++pi) {
                    int t = prev_track[pi];
                    if (t < 0) continue;
                    const auto& members = tracks[t].members;
                    if (members.size() < 2) continue;
                    const TrackMember& last = members[members.size() - 1];
                    const TrackMember& older = members[members.size() - 2];
                    shifts[pi] = {static_cast<int>(std::lround(last.centroid_r - older.centroid_r)),
                                  static_cast<int>(std::lround(last.centroid_c - older.centroid_c))};
                }
            }
            for (const FramePair& p : match_with_shifts(prev, cur, shifts, cfg)) {
                int t = prev_track[p.prev_segment];
                if (t < 0) continue;
                const Segment& seg = cur.segments[p.cur_segment];
                tracks[t].members.push_back({static_cast<int>(f), seg.id, seg.centroid_r,
                                             seg.centroid_c, shifts[p.prev_segment]});
                cur_track[p.cur_segment] = t;
            }
        }
        for (std::size_t si = 0; si < cur.segments.size(); ++si) {
            if (cur_track[si] >= 0) continue;
            const Segment& seg = cur.segments[si];
            Track t;
            t.track_id = static_cast<int>(tracks.size());
            t.class_id = seg.class_id;
            t.members.push_back(
                {static_cast<int>(f), seg.id, seg.centroid_r, seg.centroid_c, PixelShift{}});
            cur_track[si] = t.track_id;
            tracks.push_back(std::move(t));
        }
        prev_track.swap(cur_track);
    }
    return tracks;
}

std::vector<Track> build_tracks(const std::vector<SegmentSet>& sequence, const MatchConfig& cfg) {
    std::vector<const SegmentSet*> ptrs;
    ptrs.reserve(sequence.size());
    for (const SegmentSet& s : sequence) ptrs.push_back(&s);
    return build_tracks(ptrs, cfg);
}

std::vector<std::string> time_series_feature_names(const std::vector<std::string>& base,
                                                   int depth) {
    std::vector<std::string> names;
    for (int lag = depth; lag >= 1; --lag)
        for (const std::string& name : base) names.push_back(name + "_tm" + std::to_string(lag));
    names.insert(names.end(), base.begin(), base.end());
    for (int lag = depth; lag >= 1; --lag) names.push_back("present_tm" + std::to_string(lag));
    names.push_back("present");
    return names;
}

MetricsDataset assemble_time_series(const std::vector<Track>& tracks,
                                    const std::vector<const MetricsDataset*>& frame_metrics,
                                    int depth) {
    if (depth < 0) fail("BadConfig", "time series depth must be >= 0");
    if (frame_metrics.empty()) fail("MissingMetrics", "no per-frame metrics supplied");
    const std::vector<std::string>& base = frame_metrics[0]->feature_names;
    // (frame, segment) -> row
    std::vector<std::unordered_map<int, std::size_t>> row_of(frame_metrics.size());
    for (std::size_t f = 0; f < frame_metrics.size(); ++f) {
        if (frame_metrics[f]->feature_names != base)
            fail("SchemaMismatch", "per-frame metric schemas differ");
        for (std::size_t r = 0; r < frame_metrics[f]->rows(); ++r)
            row_of[f][frame_metrics[f]->segment_ids[r]] = r;
    }

    MetricsDataset out;
    out.feature_names = time_series_feature_names(base, depth);
    out.has_targets = true;

    // Emit rows frame-major so that depth 0 reproduces the single-frame
    // dataset row for row.
    struct Anchor {
        int frame_index;
        int segment_id;
        const Track* track;
        std::size_t member;
    };
    std::vector<Anchor> anchors;
    for (const Track& track : tracks)
        for (std::size_t mi = 0; mi < track.members.size(); ++mi)
            anchors.push_back({track.members[mi].frame_index, track.members[mi].segment_id,
                               &track, mi});
    std::sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) {
        if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
        return a.segment_id < b.segment_id;
    });

    const std::size_t width = base.size();
    std::vector<double> row((depth + 1) * width + (depth + 1));
    for (const Anchor& item : anchors) {
        const Track& track = *item.track;
        const std::size_t mi = item.member;
        const TrackMember& anchor = track.members[mi];
        const MetricsDataset& anchor_ds = *frame_metrics[anchor.frame_index];
        if (!anchor_ds.has_targets) continue;
        auto anchor_row = row_of[anchor.frame_index].find(anchor.segment_id);
        if (anchor_row == row_of[anchor.frame_index].end())
            fail("MissingMetrics", "no metrics row for frame " +
                                       std::to_string(anchor.frame_index) + " segment " +
                                       std::to_string(anchor.segment_id));
        for (int lag = depth; lag >= 0; --lag) {
            // Lags reaching before the track birth repeat the oldest member
            // with a cleared presence flag.
            long long want = static_cast<long long>(mi) - lag;
            bool present = want >= 0;
            std::size_t use = present ? static_cast<std::size_t>(want) : 0;
            const TrackMember& member = track.members[use];
            const MetricsDataset& ds = *frame_metrics[member.frame_index];
            auto it = row_of[member.frame_index].find(member.segment_id);
            if (it == row_of[member.frame_index].end())
                fail("MissingMetrics", "no metrics row for frame " +
                                           std::to_string(member.frame_index) + " segment " +
                                           std::to_string(member.segment_id));
            const double* src = ds.row(it->second);
            std::copy(src, src + width, row.begin() + (depth - lag) * width);
            row[(depth + 1) * width + (depth - lag)] = present ? 1.0 : 0.0;
        }
        out.append_row(anchor_ds.frame_ids[anchor_row->second], anchor.segment_id,
                       anchor_ds.sources[anchor_row->second], row,
                       anchor_ds.target_iou[anchor_row->second],
                       anchor_ds.target_fp[anchor_row->second] != 0);
    }
    return out;
}

MetricsDataset assemble_time_series(const std::vector<Track>& tracks,
                                    const std::vector<MetricsDataset>& frame_metrics, int depth) {
    std::vector<const MetricsDataset*> ptrs;
    ptrs.reserve(frame_metrics.size());
    for (const MetricsDataset& m : frame_metrics) ptrs.push_back(&m);
    return assemble_time_series(tracks, ptrs, depth);
}

}  // namespace segmeta
