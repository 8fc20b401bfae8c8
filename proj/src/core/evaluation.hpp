#pragma once

#include <string>
#include <vector>

#include "grid.hpp"
#include "segments.hpp"

namespace segmeta {

enum class CdfKind { precision, recall };

const char* cdf_kind_name(CdfKind k);

// Empirical CDF over values in [0, 1]; F(v) = fraction of samples <= v.
struct EmpiricalCdf {
    std::vector<double> sorted_values;
    CdfKind kind = CdfKind::precision;
    int class_id = 0;
    std::string rule_tag;

    double eval(double v) const;
    std::size_t count() const { return sorted_values.size(); }
};

EmpiricalCdf build_cdf(std::vector<double> values, CdfKind kind = CdfKind::precision,
                       int class_id = 0, std::string rule_tag = {});

enum class DominanceVerdict { a_dominates_b, b_dominates_a, crossing, equal };

const char* dominance_verdict_name(DominanceVerdict v);

struct DominanceResult {
    DominanceVerdict verdict = DominanceVerdict::equal;
    // pointwise excess of one CDF over the other across the merged grid
    double max_violation_a_over_b = 0.0;  // max (F_A - F_B)+  (A right of B fails here)
    double max_violation_b_over_a = 0.0;  // max (F_B - F_A)+
    std::size_t grid_size = 0;
};

// First-order stochastic dominance on the merged sample grid, which is
// exact for step functions. "A dominates B" means A's values are right
// shifted: F_A <= F_B + tol everywhere with some point beyond tol.
DominanceResult dominance(const EmpiricalCdf& a, const EmpiricalCdf& b, double tol = 0.0);

// F^r(0): fraction of ground-truth segments with recall exactly zero.
double nondetection_rate(const EmpiricalCdf& cdf);

// Binary PPM with a red-to-green ramp over per-segment values; pixels
// marked ignore render white, pixels outside any segment black.
void render_heatmap(const std::vector<double>& segment_values, const SegmentSet& segments,
                    const LabelMap* ignore, const std::string& path);

// Class-id view with a fixed palette; ignore pixels render white.
void render_classes(const LabelMap& mask, const std::string& path);

}  // namespace segmeta
