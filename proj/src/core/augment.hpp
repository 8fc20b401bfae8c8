#pragma once

#include <cstdint>
#include <string>

#include "dataset.hpp"
#include "segments.hpp"

namespace segmeta {

struct AugmentConfig {
    int k_neighbors = 5;
    double factor = 1.0;  // synthetic rows per rare row
    uint64_t seed = 1;
};

// Interpolation-based oversampling of the rare target stratum: rows with
// iou == 0 plus rows falling into decile bins holding under 10% of the
// data. Each synthetic row sits on the segment between a rare seed row and
// one of its k nearest neighbours within the stratum (Euclidean distance in
// standardized feature space); the target is the inverse-distance-weighted
// mean of the two parents' targets. Output rows carry source=augmented.
MetricsDataset smote_rows(const MetricsDataset& m, const AugmentConfig& cfg);

// IoU / false-positive targets computed against a reference prediction
// instead of real ground truth.
MatchResult pseudo_targets(const SegmentSet& pred, const SegmentSet& reference);

enum class Composition { R, RA, RAP, RP, P };

Composition composition_from_name(const std::string& s);
const char* composition_name(Composition c);

// Concatenation of training rows per selector; validation and test splits
// stay real-only and are never routed through here.
MetricsDataset compose(const MetricsDataset& real, const MetricsDataset& augmented,
                       const MetricsDataset& pseudo, Composition spec);

}  // namespace segmeta
