#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "error.hpp"

namespace segmeta {

const char* cdf_kind_name(CdfKind k) { return k == CdfKind::precision ? "precision" : "recall"; }

const char* dominance_verdict_name(DominanceVerdict v) {
    switch (v) {
        case DominanceVerdict::a_dominates_b: return "a_dominates_b";
        case DominanceVerdict::b_dominates_a: return "b_dominates_a";
        case DominanceVerdict::crossing: return "crossing";
        case DominanceVerdict::equal: return "equal";
    }
    return "";
}

EmpiricalCdf build_cdf(std::vector<double> values, CdfKind kind, int class_id,
                       std::string rule_tag) {
    if (values.empty()) fail("EmptySample", "cdf of an empty sample");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) fail("ShapeMismatch", "cdf values must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    EmpiricalCdf cdf;
    cdf.sorted_values = std::move(values);
    cdf.kind = kind;
    cdf.class_id = class_id;
    cdf.rule_tag = std::move(rule_tag);
    return cdf;
}

double EmpiricalCdf::eval(double v) const {
    auto it = std::upper_bound(sorted_values.begin(), sorted_values.end(), v);
    return static_cast<double>(it - sorted_values.begin()) /
           static_cast<double>(sorted_values.size());
}

DominanceResult dominance(const EmpiricalCdf& a, const EmpiricalCdf& b, double tol) {
    if (a.kind != b.kind) fail("KindMismatch", "cdfs compare precision against recall");
    std::vector<double> grid;
    grid.reserve(a.count() + b.count() + 2);
    grid.push_back(0.0);
    grid.insert(grid.end(), a.sorted_values.begin(), a.sorted_values.end());
    grid.insert(grid.end(), b.sorted_values.begin(), b.sorted_values.end());
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    DominanceResult res;
    res.grid_size = grid.size();
    for (double v : grid) {
        double fa = a.eval(v), fb = b.eval(v);
        res.max_violation_a_over_b = std::max(res.max_violation_a_over_b, fa - fb);
        res.max_violation_b_over_a = std::max(res.max_violation_b_over_a, fb - fa);
    }
    res.max_violation_a_over_b = std::max(res.max_violation_a_over_b, 0.0);
    res.max_violation_b_over_a = std::max(res.max_violation_b_over_a, 0.0);

    const bool a_below = res.max_violation_a_over_b <= tol;  // F_A <= F_B everywhere
    const bool b_below = res.max_violation_b_over_a <= tol;
    if (a_below && b_below)
        res.verdict = DominanceVerdict::equal;
    else if (a_below)
        res.verdict = DominanceVerdict::a_dominates_b;
    else if (b_below)
        res.verdict = DominanceVerdict::b_dominates_a;
    else
        res.verdict = DominanceVerdict::crossing;
    return res;
}

double nondetection_rate(const EmpiricalCdf& cdf) {
    if (cdf.kind != CdfKind::recall) fail("KindMismatch", "non-detection rate needs a recall cdf");
    std::size_t zeros = 0;
    for (double v : cdf.sorted_values) {
        if (v != 0.0) break;
        ++zeros;
    }
    return static_cast<double>(zeros) / static_cast<double>(cdf.count());
}

namespace {

void write_ppm(const std::string& path, int height, int width,
               const std::vector<uint8_t>& rgb) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out << "P6\n" << width << ' ' << height << "\n255\n";
        out.write(reinterpret_cast<const char*>(rgb.data()),
                  static_cast<std::streamsize>(rgb.size()));
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

}  // namespace

void render_heatmap(const std::vector<double>& segment_values, const SegmentSet& segments,
                    const LabelMap* ignore, const std::string& path) {
    if (segment_values.size() != segments.segments.size())
        fail("ShapeMismatch", "need one value per segment");
    for (double v : segment_values)
        if (!(v >= 0.0 && v <= 1.0)) fail("ShapeMismatch", "heatmap values must lie in [0, 1]");
    if (ignore && (ignore->height != segments.height || ignore->width != segments.width))
        fail("ShapeMismatch", "ignore map resolution does not match");

    std::vector<uint8_t> rgb(static_cast<std::size_t>(segments.height) * segments.width * 3, 0);
    for (int r = 0; r < segments.height; ++r) {
        for (int c = 0; c < segments.width; ++c) {
            std::size_t px = (static_cast<std::size_t>(r) * segments.width + c) * 3;
            if (ignore && ignore->at(r, c) == kIgnoreLabel) {
                rgb[px] = rgb[px + 1] = rgb[px + 2] = 255;
                continue;
            }
            int32_t idx = segments.index_at(r, c);
            if (idx < 0) continue;  // black
            double v = segment_values[idx];
            rgb[px] = static_cast<uint8_t>(std::lround(255.0 * (1.0 - v)));
            rgb[px + 1] = static_cast<uint8_t>(std::lround(255.0 * v));
            rgb[px + 2] = 0;
        }
    }
    write_ppm(path, segments.height, segments.width, rgb);
}

void render_classes(const LabelMap& mask, const std::string& path) {
    // fixed palette, repeating after 12 classes
    static const uint8_t palette[12][3] = {
        {68, 1, 84},   {49, 104, 142}, {33, 145, 140}, {53, 183, 121},
        {143, 215, 68}, {253, 231, 37}, {217, 95, 2},   {117, 112, 179},
        {231, 41, 138}, {102, 166, 30}, {230, 171, 2},  {166, 118, 29}};
    std::vector<uint8_t> rgb(static_cast<std::size_t>(mask.height) * mask.width * 3, 0);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            std::size_t px = (static_cast<std::size_t>(r) * mask.width + c) * 3;
            uint8_t y = mask.at(r, c);
            if (y == kIgnoreLabel) {
                rgb[px] = rgb[px + 1] = rgb[px + 2] = 255;
            } else {
                const uint8_t* color = palette[y % 12];
                rgb[px] = color[0];
                rgb[px + 1] = color[1];
                rgb[px + 2] = color[2];
            }
        }
    }
    write_ppm(path, mask.height, mask.width, rgb);
}

}  // namespace segmeta
