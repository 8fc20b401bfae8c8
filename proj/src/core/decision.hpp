#pragma once

#include <vector>

#include "grid.hpp"

namespace segmeta {

// Per-pixel argmax of the softmax; ties go to the lowest class index.
SegmentationMask bayes_decide(const ProbabilityVolume& p);

// Per-pixel argmin of the expected confusion cost. An all-zero cost matrix
// is degenerate (every class optimal); class 0 is returned everywhere and
// *degenerate, when given, is set.
SegmentationMask cost_decide(const ProbabilityVolume& p, const CostMatrix& c,
                             bool* degenerate = nullptr);

// Per-pixel argmax of softmax / prior. Priors must be strictly positive and
// cover the volume's resolution (directly or as coarser blocks).
SegmentationMask ml_decide(const ProbabilityVolume& p, const PriorMap& priors);

struct PriorConfig {
    double alpha = 1.0;  // additive smoothing per class
    int downscale = 1;   // block edge in pixels; counts are pooled per block
};

// Position-specific class frequencies over a stack of label maps. Ignore
// pixels contribute to neither the numerator nor the per-position total.
PriorMap estimate_priors(const std::vector<const LabelMap*>& labels, int classes,
                         const PriorConfig& cfg = {});
PriorMap estimate_priors(const std::vector<LabelMap>& labels, int classes,
                         const PriorConfig& cfg = {});

}  // namespace segmeta
