#include "segments.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "error.hpp"

namespace segmeta {

const char* source_name(Source s) {
    switch (s) {
        case Source::predicted: return "predicted";
        case Source::ground_truth: return "ground-truth";
        case Source::pseudo: return "pseudo";
    }
    return "";
}

Source source_from_name(const std::string& name) {
    if (name == "predicted") return Source::predicted;
    if (name == "ground-truth") return Source::ground_truth;
    if (name == "pseudo") return Source::pseudo;
    fail("HeaderMalformed", "unknown segment source '" + name + "'");
}

namespace {

struct RawRun {
    int row, col_begin, col_end;
    int class_id;
    int parent;  // union-find over run indices
};

int find_root(std::vector<RawRun>& runs, int i) {
    while (runs[i].parent != i) {
        runs[i].parent = runs[runs[i].parent].parent;
        i = runs[i].parent;
    }
    return i;
}

void unite(std::vector<RawRun>& runs, int a, int b) {
    a = find_root(runs, a);
    b = find_root(runs, b);
    if (a != b) runs[std::max(a, b)].parent = std::min(a, b);
}

}  // namespace

SegmentSet extract_segments(const SegmentationMask& mask, const LabelMap* ignore, Source source) {
    if (ignore && (ignore->height != mask.height || ignore->width != mask.width))
        fail("ShapeMismatch", "ignore map resolution does not match the mask");

    auto included = [&](int r, int c) {
        if (mask.at(r, c) == kIgnoreLabel) return false;
        if (ignore && ignore->at(r, c) == kIgnoreLabel) return false;
        return true;
    };

    // Row scan into runs, then union-find across adjacent rows.
    std::vector<RawRun> runs;
    std::vector<int> row_start(mask.height + 1, 0);
    for (int r = 0; r < mask.height; ++r) {
        row_start[r] = static_cast<int>(runs.size());
        int c = 0;
        while (c < mask.width) {
            if (!included(r, c)) {
                ++c;
                continue;
            }
            int cls = mask.at(r, c);
            int begin = c;
            while (c < mask.width && included(r, c) && mask.at(r, c) == cls) ++c;
            runs.push_back({r, begin, c, cls, static_cast<int>(runs.size())});
        }
    }
    row_start[mask.height] = static_cast<int>(runs.size());

    for (int r = 1; r < mask.height; ++r) {
        int prev = row_start[r - 1];
        const int prev_end = row_start[r];
        for (int cur = row_start[r]; cur < row_start[r + 1]; ++cur) {
            // 8-connectivity: runs touch when the column spans, widened by
            // one, overlap.
            while (prev < prev_end && runs[prev].col_end < runs[cur].col_begin) ++prev;
            for (int p = prev; p < prev_end && runs[p].col_begin <= runs[cur].col_end; ++p)
                if (runs[p].class_id == runs[cur].class_id) unite(runs, p, cur);
        }
    }

    SegmentSet set;
    set.source = source;
    set.height = mask.height;
    set.width = mask.width;
    set.segment_at.assign(static_cast<std::size_t>(mask.height) * mask.width, -1);

    std::unordered_map<int, int> root_to_segment;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        int root = find_root(runs, static_cast<int>(i));
        auto [it, inserted] = root_to_segment.try_emplace(root, static_cast<int>(set.segments.size()));
        if (inserted) {
            Segment s;
            s.id = it->second;
            s.class_id = runs[i].class_id;
            s.bbox_rmin = runs[i].row;
            s.bbox_rmax = runs[i].row;
            s.bbox_cmin = runs[i].col_begin;
            s.bbox_cmax = runs[i].col_end - 1;
            set.segments.push_back(std::move(s));
        }
        Segment& s = set.segments[it->second];
        const RawRun& run = runs[i];
        s.runs.push_back({run.row, run.col_begin, run.col_end});
        int len = run.col_end - run.col_begin;
        s.size += len;
        s.centroid_r += static_cast<double>(run.row) * len;
        s.centroid_c += (run.col_begin + run.col_end - 1) / 2.0 * len;
        s.bbox_rmin = std::min(s.bbox_rmin, run.row);
        s.bbox_rmax = std::max(s.bbox_rmax, run.row);
        s.bbox_cmin = std::min(s.bbox_cmin, run.col_begin);
        s.bbox_cmax = std::max(s.bbox_cmax, run.col_end - 1);
        for (int c = run.col_begin; c < run.col_end; ++c)
            set.segment_at[static_cast<std::size_t>(run.row) * mask.width + c] = it->second;
    }

    for (Segment& s : set.segments) {
        s.centroid_r /= s.size;
        s.centroid_c /= s.size;
        for (const Run& run : s.runs) {
            for (int c = run.col_begin; c < run.col_end; ++c) {
                int r = run.row;
                bool boundary = r == 0 || r == set.height - 1 || c == 0 || c == set.width - 1;
                if (!boundary)
                    boundary = set.index_at(r - 1, c) != s.id || set.index_at(r + 1, c) != s.id ||
                               set.index_at(r, c - 1) != s.id || set.index_at(r, c + 1) != s.id;
                if (boundary) ++s.boundary_size;
            }
        }
        s.interior_size = s.size - s.boundary_size;
    }
    return set;
}

double segment_iou(const Segment& k, const SegmentSet& gt) {
    std::unordered_map<int32_t, int> touched;  // gt segment index -> |k ∩ k'|
    for (const Run& run : k.runs) {
        for (int c = run.col_begin; c < run.col_end; ++c) {
            int32_t gi = gt.index_at(run.row, c);
            if (gi >= 0 && gt.segments[gi].class_id == k.class_id) ++touched[gi];
        }
    }
    if (touched.empty()) return 0.0;
    long long inter = 0, matched_size = 0;
    for (const auto& [gi, count] : touched) {
        inter += count;
        matched_size += gt.segments[gi].size;
    }
    long long uni = k.size + matched_size - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchResult match_segments(const SegmentSet& pred, const SegmentSet& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        fail("ShapeMismatch", "prediction and ground truth resolutions differ");
    MatchResult m;
    m.iou.reserve(pred.segments.size());
    m.precision.reserve(pred.segments.size());
    for (const Segment& k : pred.segments) {
        double iou = segment_iou(k, gt);
        m.iou.push_back(iou);
        m.is_fp.push_back(iou == 0.0 ? 1 : 0);
        long long hit = 0;
        for (const Run& run : k.runs)
            for (int c = run.col_begin; c < run.col_end; ++c) {
                const Segment* g = gt.segment_of(run.row, c);
                if (g && g->class_id == k.class_id) ++hit;
            }
        m.precision.push_back(static_cast<double>(hit) / k.size);
    }
    m.recall.reserve(gt.segments.size());
    for (const Segment& g : gt.segments) {
        long long hit = 0;
        for (const Run& run : g.runs)
            for (int c = run.col_begin; c < run.col_end; ++c) {
                const Segment* k = pred.segment_of(run.row, c);
                if (k && k->class_id == g.class_id) ++hit;
            }
        m.recall.push_back(static_cast<double>(hit) / g.size);
    }
    return m;
}

ClassMatchView segment_precision_recall(const SegmentSet& pred, const SegmentSet& gt,
                                        const std::vector<int>& class_ids) {
    MatchResult all = match_segments(pred, gt);
    auto wanted = [&](int cls) {
        return std::find(class_ids.begin(), class_ids.end(), cls) != class_ids.end();
    };
    ClassMatchView view;
    for (std::size_t i = 0; i < pred.segments.size(); ++i)
        if (wanted(pred.segments[i].class_id)) view.precision.push_back(all.precision[i]);
    for (std::size_t i = 0; i < gt.segments.size(); ++i)
        if (wanted(gt.segments[i].class_id)) view.recall.push_back(all.recall[i]);
    return view;
}

}  // namespace segmeta
