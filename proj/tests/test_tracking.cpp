#include <doctest.h>

#include <map>
#include <set>

#include "core/decision.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/segments.hpp"
#include "core/synth.hpp"
#include "core/tracking.hpp"
#include "helpers.hpp"

using namespace segmeta;

namespace {

LabelMap square_at(int h, int w, int r0, int c0, int size, uint8_t cls) {
    LabelMap m = LabelMap::filled(h, w, 0);
    for (int r = r0; r < r0 + size; ++r)
        for (int c = c0; c < c0 + size; ++c) m.at(r, c) = cls;
    return m;
}

long long plain_overlap(const SegmentSet& a, int seg_a, const SegmentSet& b, int seg_b,
                        int dr, int dc) {
    long long count = 0;
    for (const Run& run : a.segments[seg_a].runs)
        for (int c = run.col_begin; c < run.col_end; ++c) {
            int rr = run.row + dr, cc = c + dc;
            if (rr < 0 || rr >= b.height || cc < 0 || cc >= b.width) continue;
            if (b.index_at(rr, cc) == seg_b) ++count;
        }
    return count;
}

}  // namespace

TEST_CASE("identical frames match every segment to its copy") {
    Rng rng(131);
    LabelMap mask = testutil::random_mask(rng, 12, 12, 3);
    SegmentSet a = extract_segments(mask);
    SegmentSet b = extract_segments(mask);
    auto pairs = match_frames(a, nullptr, b, MatchConfig{});
    CHECK(pairs.size() == a.segments.size());
    for (const FramePair& p : pairs) CHECK(p.prev_segment == p.cur_segment);
}

TEST_CASE("zero overlap means no matches") {
    SegmentSet a = extract_segments(square_at(10, 10, 0, 0, 3, 1));
    SegmentSet b = extract_segments(square_at(10, 10, 6, 6, 3, 1));
    auto pairs = match_frames(a, nullptr, b, MatchConfig{});
    // only the background matches; the squares are disjoint
    std::size_t square_matches = 0;
    for (const FramePair& p : pairs)
        if (a.segments[p.prev_segment].class_id == 1) ++square_matches;
    CHECK(square_matches == 0);
}

TEST_CASE("shift correction recovers a translating square") {
    // 4x4 square moving +2 columns per frame
    const int size = 4;
    SegmentSet f0 = extract_segments(square_at(12, 16, 4, 2, size, 1));
    SegmentSet f1 = extract_segments(square_at(12, 16, 4, 4, size, 1));
    SegmentSet f2 = extract_segments(square_at(12, 16, 4, 6, size, 1));

    int sq0 = f0.segments[0].class_id == 1 ? 0 : 1;
    int sq1 = f1.segments[0].class_id == 1 ? 0 : 1;
    int sq2 = f2.segments[0].class_id == 1 ? 0 : 1;

    // with two-frame history the expected shift is (0, +2)
    double dr = f1.segments[sq1].centroid_r - f0.segments[sq0].centroid_r;
    double dc = f1.segments[sq1].centroid_c - f0.segments[sq0].centroid_c;
    CHECK(dr == 0.0);
    CHECK(dc == 2.0);

    // brute-force overlap counts: shifted 16, unshifted 8
    CHECK(plain_overlap(f1, sq1, f2, sq2, 0, 2) == 16);
    CHECK(plain_overlap(f1, sq1, f2, sq2, 0, 0) == 8);

    auto with_shift = match_frames(f1, &f0, f2, MatchConfig{});
    bool matched = false;
    for (const FramePair& p : with_shift)
        if (p.prev_segment == sq1 && p.cur_segment == sq2) {
            matched = true;
            CHECK(p.overlap == 16);
        }
    CHECK(matched);

    MatchConfig no_shift;
    no_shift.linear_shift = false;
    auto without = match_frames(f1, &f0, f2, no_shift);
    for (const FramePair& p : without)
        if (p.prev_segment == sq1 && p.cur_segment == sq2) CHECK(p.overlap == 8);
}

TEST_CASE("matching is one-to-one") {
    Rng rng(137);
    for (int trial = 0; trial < 40; ++trial) {
        SegmentSet a = extract_segments(testutil::random_mask(rng, 14, 14, 3));
        SegmentSet b = extract_segments(testutil::random_mask(rng, 14, 14, 3));
        auto pairs = match_frames(a, nullptr, b, MatchConfig{});
        std::set<int> prev_seen, cur_seen;
        for (const FramePair& p : pairs) {
            CHECK(prev_seen.insert(p.prev_segment).second);
            CHECK(cur_seen.insert(p.cur_segment).second);
            CHECK(a.segments[p.prev_segment].class_id == b.segments[p.cur_segment].class_id);
            CHECK(p.overlap >= 1);
        }
    }
}

TEST_CASE("tracks over identical frames keep their length") {
    Rng rng(139);
    LabelMap mask = testutil::random_mask(rng, 10, 10, 3);
    std::vector<SegmentSet> frames{extract_segments(mask), extract_segments(mask),
                                   extract_segments(mask)};
    std::vector<Track> tracks = build_tracks(frames, MatchConfig{});
    CHECK(tracks.size() == frames[0].segments.size());
    for (const Track& t : tracks) CHECK(t.members.size() == 3);
}

TEST_CASE("a one-frame dropout splits the track") {
    std::vector<SegmentSet> frames{extract_segments(square_at(10, 10, 2, 2, 3, 1)),
                                   extract_segments(square_at(10, 10, 2, 2, 3, 0)),  // absent
                                   extract_segments(square_at(10, 10, 2, 2, 3, 1))};
    std::vector<Track> tracks = build_tracks(frames, MatchConfig{});
    int square_tracks = 0;
    for (const Track& t : tracks)
        if (t.class_id == 1) ++square_tracks;
    CHECK(square_tracks == 2);
}

TEST_CASE("empty frames produce zero tracks") {
    std::vector<SegmentSet> frames;
    for (int t = 0; t < 3; ++t) {
        LabelMap empty = LabelMap::filled(6, 6, kIgnoreLabel);
        frames.push_back(extract_segments(empty));
    }
    CHECK(build_tracks(frames, MatchConfig{}).empty());
}

TEST_CASE("track building is deterministic") {
    SceneSpec spec;
    spec.flicker_prob = 0.2;
    std::vector<SynthFrame> frames = generate_sequence(spec, 6, 3);
    std::vector<SegmentSet> masks;
    for (const SynthFrame& f : frames) {
        SegmentSet set = extract_segments(bayes_decide(f.probs), &f.gt);
        masks.push_back(std::move(set));
    }
    std::vector<Track> a = build_tracks(masks, MatchConfig{});
    std::vector<Track> b = build_tracks(masks, MatchConfig{});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].track_id == b[i].track_id);
        CHECK(a[i].members.size() == b[i].members.size());
        for (std::size_t m = 0; m < a[i].members.size(); ++m)
            CHECK(a[i].members[m].segment_id == b[i].members[m].segment_id);
    }
}

namespace {

struct SeriesFixture {
    std::vector<SegmentSet> masks;
    std::vector<MetricsDataset> metrics;
    std::vector<Track> tracks;

    explicit SeriesFixture(int frames, double flicker = 0.0) {
        SceneSpec spec;
        spec.flicker_prob = flicker;
        std::vector<SynthFrame> synth = generate_sequence(spec, frames, 9);
        for (const SynthFrame& f : synth) {
            SegmentSet set = extract_segments(bayes_decide(f.probs), &f.gt);
            set.frame_id = f.frame_id;
            MatchResult match = match_segments(set, f.gt_segments);
            metrics.push_back(
                aggregate(set, dispersion_maps(f.probs), f.probs, &match, RowSource::real));
            masks.push_back(std::move(set));
        }
        tracks = build_tracks(masks, MatchConfig{});
    }
};

}  // namespace

TEST_CASE("depth zero reproduces the single-frame rows plus a flag") {
    SeriesFixture fx(4);
    MetricsDataset series = assemble_time_series(fx.tracks, fx.metrics, 0);
    MetricsDataset flat;
    bool first = true;
    for (const MetricsDataset& m : fx.metrics) {
        if (first) {
            flat = m;
            first = false;
        } else {
            flat.append(m);
        }
    }
    REQUIRE(series.rows() == flat.rows());
    REQUIRE(series.cols() == flat.cols() + 1);
    CHECK(series.feature_names.back() == "present");
    for (std::size_t r = 0; r < flat.rows(); ++r) {
        CHECK(series.frame_ids[r] == flat.frame_ids[r]);
        CHECK(series.segment_ids[r] == flat.segment_ids[r]);
        for (std::size_t c = 0; c < flat.cols(); ++c) CHECK(series.at(r, c) == flat.at(r, c));
        CHECK(series.at(r, flat.cols()) == 1.0);
        CHECK(series.target_iou[r] == flat.target_iou[r]);
    }
}

TEST_CASE("time series layout: oldest block first, padding repeats the birth frame") {
    SeriesFixture fx(3);
    MetricsDataset series = assemble_time_series(fx.tracks, fx.metrics, 2);
    const std::size_t base_width = fx.metrics[0].cols();
    REQUIRE(series.cols() == 3 * base_width + 3);

    // pick a track alive in all 3 frames and check its anchor at t=2
    for (const Track& track : fx.tracks) {
        if (track.members.size() != 3) continue;
        // find the series row of (frame 2, segment)
        const TrackMember& anchor = track.members[2];
        for (std::size_t r = 0; r < series.rows(); ++r) {
            if (series.frame_ids[r] != fx.metrics[2].frame_ids[0] ||
                series.segment_ids[r] != anchor.segment_id)
                continue;
            for (std::size_t m = 0; m < 3; ++m) {
                const MetricsDataset& src = fx.metrics[track.members[m].frame_index];
                // locate source row
                for (std::size_t sr = 0; sr < src.rows(); ++sr) {
                    if (src.segment_ids[sr] != track.members[m].segment_id) continue;
                    for (std::size_t c = 0; c < base_width; ++c)
                        CHECK(series.at(r, m * base_width + c) == src.at(sr, c));
                }
                CHECK(series.at(r, 3 * base_width + m) == 1.0);
            }
        }
    }

    // tracks born at the anchor frame repeat their birth metrics with flag 0
    for (const Track& track : fx.tracks) {
        if (track.members.size() != 1 || track.members[0].frame_index != 2) continue;
        for (std::size_t r = 0; r < series.rows(); ++r) {
            if (series.segment_ids[r] != track.members[0].segment_id) continue;
            if (series.frame_ids[r] != fx.metrics[2].frame_ids[0]) continue;
            for (std::size_t c = 0; c < base_width; ++c) {
                CHECK(series.at(r, c) == series.at(r, 2 * base_width + c));
                CHECK(series.at(r, base_width + c) == series.at(r, 2 * base_width + c));
            }
            CHECK(series.at(r, 3 * base_width + 0) == 0.0);
            CHECK(series.at(r, 3 * base_width + 1) == 0.0);
            CHECK(series.at(r, 3 * base_width + 2) == 1.0);
        }
    }
}

TEST_CASE("identity preservation on translating shapes") {
    SceneSpec spec;
    spec.flicker_prob = 0.0;
    spec.fn_suppression_rate = 0.0;  // keep shapes present in predictions
    spec.label_swap_rate = 0.0;
    spec.fp_blob_rate = 0.0;
    int checked = 0, preserved = 0;
    for (uint64_t seq = 0; seq < 6; ++seq) {
        std::vector<SynthFrame> frames = generate_sequence(spec, 8, seq);
        std::vector<SegmentSet> masks;
        for (const SynthFrame& f : frames) {
            SegmentSet set = extract_segments(bayes_decide(f.probs), &f.gt);
            masks.push_back(std::move(set));
        }
        std::vector<Track> tracks = build_tracks(masks, MatchConfig{});
        // map (frame, segment) -> track
        std::map<std::pair<int, int>, int> track_of;
        for (const Track& t : tracks)
            for (const TrackMember& m : t.members)
                track_of[{m.frame_index, m.segment_id}] = t.track_id;
        // shape identity oracle: the predicted segment under a shape's
        // centroid should stay on one track across consecutive frames
        for (std::size_t shape = 0; shape < frames[0].shapes.size(); ++shape) {
            int prev_track = -1;
            for (std::size_t t = 0; t < frames.size(); ++t) {
                const ShapeTrace& trace = frames[t].shapes[shape];
                if (!trace.visible || trace.pixels.empty()) {
                    prev_track = -1;
                    continue;
                }
                int r = static_cast<int>(trace.centroid_r);
                int c = static_cast<int>(trace.centroid_c);
                const SegmentSet& mask = masks[t];
                const Segment* seg = mask.segment_of(r, c);
                if (!seg || seg->class_id != trace.class_id) {
                    prev_track = -1;
                    continue;
                }
                auto it = track_of.find({static_cast<int>(t), seg->id});
                int cur_track = it == track_of.end() ? -1 : it->second;
                if (prev_track >= 0 && cur_track >= 0) {
                    ++checked;
                    if (cur_track == prev_track) ++preserved;
                }
                prev_track = cur_track;
            }
        }
    }
    REQUIRE(checked > 40);
    CHECK(static_cast<double>(preserved) / checked >= 0.95);
}
