#include "metrics.hpp"

#include <cmath>

#include "error.hpp"

namespace segmeta {

DispersionMaps dispersion_maps(const ProbabilityVolume& p) {
    DispersionMaps maps;
    maps.height = p.height;
    maps.width = p.width;
    const std::size_t pixels = static_cast<std::size_t>(p.height) * p.width;
    maps.entropy.resize(pixels);
    maps.variation_ratio.resize(pixels);
    maps.margin.resize(pixels);
    const double log_q = p.classes > 1 ? std::log(static_cast<double>(p.classes)) : 1.0;
    for (std::size_t i = 0; i < pixels; ++i) {
        const float* f = p.values.data() + i * p.classes;
        double entropy = 0.0;
        double max1 = 0.0, max2 = 0.0;
        for (int y = 0; y < p.classes; ++y) {
            double v = f[y];
            if (v > 0.0) entropy -= v * std::log(v);
            if (v > max1) {
                max2 = max1;
                max1 = v;
            } else if (v > max2) {
                max2 = v;
            }
        }
        maps.entropy[i] = p.classes > 1 ? entropy / log_q : 0.0;
        maps.variation_ratio[i] = 1.0 - max1;
        maps.margin[i] = p.classes > 1 ? 1.0 - (max1 - max2) : 0.0;
    }
    return maps;
}

std::vector<std::string> metric_feature_names(int classes) {
    std::vector<std::string> names = {"S",      "S_in",   "S_bd",   "S_rel", "S_rel_in",
                                      "E_mean", "E_bd",   "E_in",   "V_mean", "V_bd",
                                      "V_in",   "M_mean", "M_bd",   "M_in"};
    for (int y = 0; y < classes; ++y) names.push_back("P" + std::to_string(y));
    names.push_back("class_id");
    names.push_back("has_interior");
    return names;
}

namespace {

struct MeanTriple {
    double all = 0.0, boundary = 0.0, interior = 0.0;
};

bool is_boundary_pixel(const SegmentSet& set, int r, int c, int seg_index) {
    if (r == 0 || r == set.height - 1 || c == 0 || c == set.width - 1) return true;
    return set.index_at(r - 1, c) != seg_index || set.index_at(r + 1, c) != seg_index ||
           set.index_at(r, c - 1) != seg_index || set.index_at(r, c + 1) != seg_index;
}

}  // namespace

MetricsDataset aggregate(const SegmentSet& segments, const DispersionMaps& maps,
                         const ProbabilityVolume& p, const MatchResult* match,
                         RowSource provenance) {
    if (maps.height != p.height || maps.width != p.width || segments.height != p.height ||
        segments.width != p.width)
        fail("ShapeMismatch", "segments, heatmaps and volume disagree on resolution");
    if (match && match->iou.size() != segments.segments.size())
        fail("ShapeMismatch", "match result does not cover the segment set");

    MetricsDataset ds;
    ds.feature_names = metric_feature_names(p.classes);
    ds.has_targets = match != nullptr;

    std::vector<double> row;
    std::vector<double> class_mean(p.classes);
    for (std::size_t si = 0; si < segments.segments.size(); ++si) {
        const Segment& s = segments.segments[si];
        MeanTriple entropy, variation, margin;
        std::fill(class_mean.begin(), class_mean.end(), 0.0);
        for (const Run& run : s.runs) {
            for (int c = run.col_begin; c < run.col_end; ++c) {
                std::size_t i = maps.index(run.row, c);
                bool bd = is_boundary_pixel(segments, run.row, c, s.id);
                entropy.all += maps.entropy[i];
                variation.all += maps.variation_ratio[i];
                margin.all += maps.margin[i];
                if (bd) {
                    entropy.boundary += maps.entropy[i];
                    variation.boundary += maps.variation_ratio[i];
                    margin.boundary += maps.margin[i];
                } else {
                    entropy.interior += maps.entropy[i];
                    variation.interior += maps.variation_ratio[i];
                    margin.interior += maps.margin[i];
                }
                const float* f = p.pixel(run.row, c);
                for (int y = 0; y < p.classes; ++y) class_mean[y] += f[y];
            }
        }
        const double size = s.size;
        const double bd = s.boundary_size;
        const bool has_interior = s.interior_size > 0;
        const double in = has_interior ? s.interior_size : 1.0;  // divisor only

        row.clear();
        row.push_back(size);
        row.push_back(s.interior_size);
        row.push_back(bd);
        row.push_back(size / bd);
        row.push_back(s.interior_size / bd);
        row.push_back(entropy.all / size);
        row.push_back(entropy.boundary / bd);
        row.push_back(has_interior ? entropy.interior / in : 0.0);
        row.push_back(variation.all / size);
        row.push_back(variation.boundary / bd);
        row.push_back(has_interior ? variation.interior / in : 0.0);
        row.push_back(margin.all / size);
        row.push_back(margin.boundary / bd);
        row.push_back(has_interior ? margin.interior / in : 0.0);
        for (int y = 0; y < p.classes; ++y) row.push_back(class_mean[y] / size);
        row.push_back(s.class_id);
        row.push_back(has_interior ? 1.0 : 0.0);

        if (match) {
            ds.append_row(segments.frame_id, s.id, provenance, row, match->iou[si],
                          match->is_fp[si] != 0);
        } else {
            ds.append_row(segments.frame_id, s.id, provenance, row);
        }
    }
    return ds;
}

std::vector<FeatureCorrelation> correlation_report(const MetricsDataset& m) {
    if (!m.has_targets) fail("InsufficientData", "correlation needs iou targets");
    if (m.rows() < 2) fail("InsufficientData", "correlation needs at least two rows");
    const std::size_t n = m.rows();
    double target_mean = 0.0;
    for (double v : m.target_iou) target_mean += v;
    target_mean /= static_cast<double>(n);
    double target_var = 0.0;
    for (double v : m.target_iou) target_var += (v - target_mean) * (v - target_mean);

    std::vector<FeatureCorrelation> report;
    for (std::size_t col = 0; col < m.cols(); ++col) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += m.at(r, col);
        mean /= static_cast<double>(n);
        double var = 0.0, cov = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double d = m.at(r, col) - mean;
            var += d * d;
            cov += d * (m.target_iou[r] - target_mean);
        }
        FeatureCorrelation fc;
        fc.feature = m.feature_names[col];
        if (var > 0.0 && target_var > 0.0) fc.pearson_r = cov / std::sqrt(var * target_var);
        report.push_back(std::move(fc));
    }
    return report;
}

}  // namespace segmeta
