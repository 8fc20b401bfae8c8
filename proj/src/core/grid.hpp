#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "array.hpp"

namespace segmeta {

// Label value reserved for "no ground truth here".
constexpr uint8_t kIgnoreLabel = 255;

// H x W grid of class ids. Used both for ground truth (may contain the
// ignore label) and for predicted masks (ids in [0, q)).
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> labels;  // row-major

    uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
    uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return labels.size(); }

    static LabelMap filled(int h, int w, uint8_t value);
    static LabelMap from_array(const Array& a);
    Array to_array() const;

    bool operator==(const LabelMap&) const = default;
};

using SegmentationMask = LabelMap;

// H x W x q softmax tensor; each pixel holds a distribution over q classes.
struct ProbabilityVolume {
    int height = 0;
    int width = 0;
    int classes = 0;
    std::vector<float> values;  // row-major, class fastest

    const float* pixel(int r, int c) const {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * classes;
    }
    float* pixel(int r, int c) {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * classes;
    }

    static ProbabilityVolume zeros(int h, int w, int q);

    // Rejects NaN/Inf, negative mass and pixels whose distribution does not
    // sum to 1 within 1e-4.
    static ProbabilityVolume from_array(const Array& a);
    Array to_array() const;
    void validate() const;
};

// Pixel-wise class priors. May be stored at a coarser resolution than the
// frames it was estimated from; lookups map pixels onto blocks.
struct PriorMap {
    int height = 0;
    int width = 0;
    int classes = 0;
    std::vector<double> values;  // row-major, class fastest

    const double* cell(int r, int c) const {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * classes;
    }
    double* cell(int r, int c) {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * classes;
    }

    // Block lookup for a pixel of a full_h x full_w frame.
    const double* lookup(int r, int c, int full_h, int full_w) const;

    static PriorMap from_array(const Array& a);  // renormalizes after f32 storage
    Array to_array() const;
};

// q x q confusion costs, zero diagonal.
struct CostMatrix {
    int classes = 0;
    std::vector<double> costs;  // row = predicted class, col = actual class

    double at(int predicted, int actual) const {
        return costs[static_cast<std::size_t>(predicted) * classes + actual];
    }
    double& at(int predicted, int actual) {
        return costs[static_cast<std::size_t>(predicted) * classes + actual];
    }

    static CostMatrix uniform(int q);  // 1 off the diagonal
    static CostMatrix read_csv(const std::string& path);
    void write_csv(const std::string& path) const;
    void validate() const;
};

}  // namespace segmeta
