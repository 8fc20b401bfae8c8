#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace segmeta {

enum class Source { predicted, ground_truth, pseudo };

const char* source_name(Source s);
Source source_from_name(const std::string& name);

// Maximal run of same-segment pixels within one row, [col_begin, col_end).
struct Run {
    int row = 0;
    int col_begin = 0;
    int col_end = 0;
};

// One connected component of same-class pixels (8-connectivity). Boundary
// pixels have a 4-neighbour outside the component; the image border counts
// as outside.
struct Segment {
    int id = 0;
    int class_id = 0;
    std::vector<Run> runs;  // sorted by (row, col_begin)
    int size = 0;
    int boundary_size = 0;
    int interior_size = 0;
    int bbox_rmin = 0, bbox_rmax = 0, bbox_cmin = 0, bbox_cmax = 0;  // inclusive
    double centroid_r = 0.0;
    double centroid_c = 0.0;
};

struct SegmentSet {
    std::string frame_id;
    Source source = Source::predicted;
    int height = 0;
    int width = 0;
    std::vector<Segment> segments;
    std::vector<int32_t> segment_at;  // pixel -> index into segments, -1 if none

    int32_t index_at(int r, int c) const {
        return segment_at[static_cast<std::size_t>(r) * width + c];
    }
    const Segment* segment_of(int r, int c) const {
        int32_t i = index_at(r, c);
        return i < 0 ? nullptr : &segments[i];
    }
};

// Pixels are excluded from components when their own label is the ignore
// value or when the supplied ignore map marks them.
SegmentSet extract_segments(const SegmentationMask& mask, const LabelMap* ignore = nullptr,
                            Source source = Source::predicted);

// IoU of a predicted segment against the union of ground-truth components
// of the same class it touches; 0 when it touches none.
double segment_iou(const Segment& k, const SegmentSet& gt);

struct MatchResult {
    std::vector<double> iou;        // per predicted segment
    std::vector<uint8_t> is_fp;     // iou == 0
    std::vector<double> precision;  // per predicted segment
    std::vector<double> recall;     // per ground-truth segment
};

MatchResult match_segments(const SegmentSet& pred, const SegmentSet& gt);

struct ClassMatchView {
    std::vector<double> precision;  // predicted segments of the class
    std::vector<double> recall;     // ground-truth segments of the class
};

ClassMatchView segment_precision_recall(const SegmentSet& pred, const SegmentSet& gt,
                                        const std::vector<int>& class_ids);

}  // namespace segmeta
