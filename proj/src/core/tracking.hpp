#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "segments.hpp"

namespace segmeta {

struct MatchConfig {
    int min_overlap = 1;          // pixels of shifted overlap required
    bool linear_shift = true;     // estimate a per-segment shift from history
};

struct FramePair {
    int prev_segment = 0;
    int cur_segment = 0;
    long long overlap = 0;  // shifted overlap count
};

struct PixelShift {
    int dr = 0;
    int dc = 0;
};

// Greedy one-to-one matching by descending shifted overlap; ties prefer the
// lower (prev, cur) id pair. `shifts` gives the expected translation per
// prev segment (index-aligned); missing entries mean zero shift.
std::vector<FramePair> match_with_shifts(const SegmentSet& prev, const SegmentSet& cur,
                                         const std::vector<PixelShift>& shifts,
                                         const MatchConfig& cfg);

// Convenience form: shifts are derived by first matching prev2 -> prev with
// zero shift and differencing centroids.
std::vector<FramePair> match_frames(const SegmentSet& prev, const SegmentSet* prev2,
                                    const SegmentSet& cur, const MatchConfig& cfg);

struct TrackMember {
    int frame_index = 0;  // position within the sequence
    int segment_id = 0;
    double centroid_r = 0.0;
    double centroid_c = 0.0;
    PixelShift shift_estimate;  // shift used when matching into this frame
};

struct Track {
    int track_id = 0;
    int class_id = 0;
    std::vector<TrackMember> members;  // consecutive frames, no gaps
};

// Sequential matching over one ordered sequence. Track ids are allocated by
// (first frame, segment id); unmatched segments open new tracks and a
// missing frame terminates membership (no gap bridging).
std::vector<Track> build_tracks(const std::vector<const SegmentSet*>& sequence,
                                const MatchConfig& cfg);
std::vector<Track> build_tracks(const std::vector<SegmentSet>& sequence, const MatchConfig& cfg);

// Concatenates metric vectors over a window of `depth` previous frames.
// Column blocks are ordered oldest-to-newest; per-lag presence flags follow.
// Lags before the track's birth repeat the oldest row with flag 0. Rows are
// emitted for anchor frames whose dataset carries targets.
MetricsDataset assemble_time_series(const std::vector<Track>& tracks,
                                    const std::vector<const MetricsDataset*>& frame_metrics,
                                    int depth);
MetricsDataset assemble_time_series(const std::vector<Track>& tracks,
                                    const std::vector<MetricsDataset>& frame_metrics, int depth);

std::vector<std::string> time_series_feature_names(const std::vector<std::string>& base,
                                                   int depth);

}  // namespace segmeta
