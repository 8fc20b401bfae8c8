#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "grid.hpp"
#include "segments.hpp"

namespace segmeta {

// Pixel-wise softmax dispersion, each value in [0, 1]. A one-hot pixel
// scores (0, 0, 0); a uniform pixel (1, 1 - 1/q, 1).
struct DispersionMaps {
    int height = 0;
    int width = 0;
    std::vector<double> entropy;          // normalized by log q
    std::vector<double> variation_ratio;  // 1 - max
    std::vector<double> margin;           // 1 - (max - second max)

    std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
};

DispersionMaps dispersion_maps(const ProbabilityVolume& p);

// Feature schema for q classes: sizes and volume/boundary quotients, the
// dispersion means over the whole segment / its boundary / its interior,
// per-class mean softmax, predicted class id and the interior flag.
std::vector<std::string> metric_feature_names(int classes);

// One row per predicted segment. Interior means are 0 with has_interior=0
// for segments without interior pixels. Targets come from `match` when
// given; `provenance` marks whether they stem from real or pseudo ground
// truth.
MetricsDataset aggregate(const SegmentSet& segments, const DispersionMaps& maps,
                         const ProbabilityVolume& p, const MatchResult* match = nullptr,
                         RowSource provenance = RowSource::real);

struct FeatureCorrelation {
    std::string feature;
    std::optional<double> pearson_r;  // empty for constant features
};

// Pearson R of each feature against the iou target.
std::vector<FeatureCorrelation> correlation_report(const MetricsDataset& m);

}  // namespace segmeta
