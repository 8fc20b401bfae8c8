#include "decision.hpp"

#include <cmath>

#include "error.hpp"

namespace segmeta {

SegmentationMask bayes_decide(const ProbabilityVolume& p) {
    SegmentationMask mask = LabelMap::filled(p.height, p.width, 0);
    const std::size_t pixels = static_cast<std::size_t>(p.height) * p.width;
    for (std::size_t i = 0; i < pixels; ++i) {
        const float* f = p.values.data() + i * p.classes;
        int best = 0;
        for (int y = 1; y < p.classes; ++y)
            if (f[y] > f[best]) best = y;
        mask.labels[i] = static_cast<uint8_t>(best);
    }
    return mask;
}

SegmentationMask cost_decide(const ProbabilityVolume& p, const CostMatrix& c, bool* degenerate) {
    c.validate();
    if (c.classes != p.classes) fail("ShapeMismatch", "cost matrix classes do not match volume");
    bool all_zero = true;
    for (double v : c.costs)
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    if (degenerate) *degenerate = all_zero;
    SegmentationMask mask = LabelMap::filled(p.height, p.width, 0);
    if (all_zero) return mask;  // every class is optimal; keep class 0

    const std::size_t pixels = static_cast<std::size_t>(p.height) * p.width;
    for (std::size_t i = 0; i < pixels; ++i) {
        const float* f = p.values.data() + i * p.classes;
        int best = 0;
        double best_cost = 0.0;
        for (int cand = 0; cand < p.classes; ++cand) {
            double cost = 0.0;
            for (int y = 0; y < p.classes; ++y) cost += c.at(cand, y) * f[y];
            if (cand == 0 || cost < best_cost) {
                best = cand;
                best_cost = cost;
            }
        }
        mask.labels[i] = static_cast<uint8_t>(best);
    }
    return mask;
}

SegmentationMask ml_decide(const ProbabilityVolume& p, const PriorMap& priors) {
    if (priors.classes != p.classes) fail("ShapeMismatch", "prior classes do not match volume");
    if (priors.height > p.height || priors.width > p.width)
        fail("ShapeMismatch", "prior map is finer than the volume");
    for (double v : priors.values)
        if (!(v > 0.0)) fail("NonpositivePrior", "ml rule needs strictly positive priors");

    SegmentationMask mask = LabelMap::filled(p.height, p.width, 0);
    for (int r = 0; r < p.height; ++r) {
        for (int c = 0; c < p.width; ++c) {
            const float* f = p.pixel(r, c);
            const double* prior = priors.lookup(r, c, p.height, p.width);
            int best = 0;
            double best_ratio = f[0] / prior[0];
            for (int y = 1; y < p.classes; ++y) {
                double ratio = f[y] / prior[y];
                if (ratio > best_ratio) {
                    best = y;
                    best_ratio = ratio;
                }
            }
            mask.at(r, c) = static_cast<uint8_t>(best);
        }
    }
    return mask;
}

PriorMap estimate_priors(const std::vector<const LabelMap*>& labels, int classes,
                         const PriorConfig& cfg) {
    if (labels.empty()) fail("EmptyInput", "prior estimation needs at least one label map");
    if (cfg.alpha < 0.0) fail("ShapeMismatch", "smoothing must be non-negative");
    if (cfg.downscale < 1) fail("ShapeMismatch", "downscale must be >= 1");
    const int full_h = labels[0]->height;
    const int full_w = labels[0]->width;
    for (const LabelMap* m : labels)
        if (m->height != full_h || m->width != full_w)
            fail("ShapeMismatch", "label maps must share one resolution");

    const int h = (full_h + cfg.downscale - 1) / cfg.downscale;
    const int w = (full_w + cfg.downscale - 1) / cfg.downscale;

    std::vector<int64_t> counts(static_cast<std::size_t>(h) * w * classes, 0);
    std::vector<int64_t> totals(static_cast<std::size_t>(h) * w, 0);
    for (const LabelMap* m : labels) {
        for (int r = 0; r < full_h; ++r) {
            for (int c = 0; c < full_w; ++c) {
                uint8_t y = m->at(r, c);
                if (y == kIgnoreLabel) continue;
                if (y >= classes) fail("ShapeMismatch", "label exceeds the class count");
                std::size_t cell = static_cast<std::size_t>(r / cfg.downscale) * w +
                                   (c / cfg.downscale);
                ++counts[cell * classes + y];
                ++totals[cell];
            }
        }
    }

    PriorMap prior;
    prior.height = h;
    prior.width = w;
    prior.classes = classes;
    prior.values.resize(counts.size());
    const std::size_t cells = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < cells; ++i) {
        double denom = static_cast<double>(totals[i]) + cfg.alpha * classes;
        for (int y = 0; y < classes; ++y) {
            int64_t count = counts[i * classes + y];
            if (cfg.alpha == 0.0 && count == 0)
                fail("ZeroPrior", "class " + std::to_string(y) +
                                      " unseen at a position; raise the smoothing");
            prior.values[i * classes + y] = (static_cast<double>(count) + cfg.alpha) / denom;
        }
    }
    return prior;
}

PriorMap estimate_priors(const std::vector<LabelMap>& labels, int classes,
                         const PriorConfig& cfg) {
    std::vector<const LabelMap*> ptrs;
    ptrs.reserve(labels.size());
    for (const LabelMap& m : labels) ptrs.push_back(&m);
    return estimate_priors(ptrs, classes, cfg);
}

}  // namespace segmeta
