// Brute-force reference implementations, kept independent of the library
// code paths they check.
#pragma once

#include <cstdint>
#include <queue>
#include <set>
#include <vector>

#include "core/grid.hpp"

namespace oracle {

using Pixel = std::pair<int, int>;

struct Component {
    int class_id;
    std::set<Pixel> pixels;

    bool operator<(const Component& other) const {
        if (class_id != other.class_id) return class_id < other.class_id;
        return pixels < other.pixels;
    }
    bool operator==(const Component& other) const = default;
};

inline bool oracle_included(const segmeta::LabelMap& mask, const segmeta::LabelMap* ignore, int r,
                            int c) {
    if (mask.at(r, c) == segmeta::kIgnoreLabel) return false;
    if (ignore && ignore->at(r, c) == segmeta::kIgnoreLabel) return false;
    return true;
}

// queue-based flood fill, 8-connectivity
inline std::vector<Component> flood_fill_components(const segmeta::LabelMap& mask,
                                                    const segmeta::LabelMap* ignore = nullptr) {
    std::vector<char> seen(mask.size(), 0);
    std::vector<Component> components;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            std::size_t start = static_cast<std::size_t>(r) * mask.width + c;
            if (seen[start] || !oracle_included(mask, ignore, r, c)) continue;
            Component comp;
            comp.class_id = mask.at(r, c);
            std::queue<Pixel> frontier;
            frontier.push({r, c});
            seen[start] = 1;
            while (!frontier.empty()) {
                auto [pr, pc] = frontier.front();
                frontier.pop();
                comp.pixels.insert({pr, pc});
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        int nr = pr + dr, nc = pc + dc;
                        if (nr < 0 || nr >= mask.height || nc < 0 || nc >= mask.width) continue;
                        std::size_t ni = static_cast<std::size_t>(nr) * mask.width + nc;
                        if (seen[ni] || !oracle_included(mask, ignore, nr, nc)) continue;
                        if (mask.at(nr, nc) != comp.class_id) continue;
                        seen[ni] = 1;
                        frontier.push({nr, nc});
                    }
            }
            components.push_back(std::move(comp));
        }
    }
    return components;
}

// IoU against the union of same-class ground-truth components that the
// segment touches, by explicit pixel counting.
inline double brute_iou(const Component& segment,
                        const std::vector<Component>& gt_components) {
    std::set<Pixel> merged;
    for (const Component& gt : gt_components) {
        if (gt.class_id != segment.class_id) continue;
        bool touches = false;
        for (const Pixel& p : gt.pixels)
            if (segment.pixels.count(p)) {
                touches = true;
                break;
            }
        if (touches) merged.insert(gt.pixels.begin(), gt.pixels.end());
    }
    if (merged.empty()) return 0.0;
    std::size_t inter = 0;
    for (const Pixel& p : segment.pixels)
        if (merged.count(p)) ++inter;
    std::size_t uni = segment.pixels.size() + merged.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// all-pairs Mann-Whitney
inline double pair_auroc(const std::vector<double>& scores,
                         const std::vector<uint8_t>& labels) {
    double pairs = 0.0, score = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) score += 1.0;
            else if (scores[i] == scores[j]) score += 0.5;
        }
    }
    return score / pairs;
}

// expected-cost minimizer evaluated directly per pixel
inline int brute_cost_decision(const float* f, const segmeta::CostMatrix& costs, int q) {
    int best = 0;
    double best_cost = 0.0;
    bool first = true;
    for (int cand = 0; cand < q; ++cand) {
        double total = 0.0;
        for (int y = 0; y < q; ++y)
            if (y != cand) total += costs.at(cand, y) * f[y];
        if (first || total < best_cost) {
            best = cand;
            best_cost = total;
            first = false;
        }
    }
    return best;
}

}  // namespace oracle
