#include "augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace segmeta {

namespace {

// Rare stratum: every iou == 0 row, plus rows in [i/10, (i+1)/10) bins that
// hold less than 10% of all rows (iou == 1 counts into the last bin).
std::vector<std::size_t> rare_stratum(const MetricsDataset& m) {
    std::vector<std::size_t> bin_count(10, 0);
    auto bin_of = [](double iou) {
        int b = static_cast<int>(iou * 10.0);
        return std::clamp(b, 0, 9);
    };
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (m.target_iou[i] > 0.0) ++bin_count[bin_of(m.target_iou[i])];
    const double low_mass = 0.1 * static_cast<double>(m.rows());
    std::vector<std::size_t> rare;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m.target_iou[i] == 0.0 ||
            static_cast<double>(bin_count[bin_of(m.target_iou[i])]) < low_mass)
            rare.push_back(i);
    }
    return rare;
}

}  // namespace

MetricsDataset smote_rows(const MetricsDataset& m, const AugmentConfig& cfg) {
    if (!m.has_targets) fail("TooFewRows", "smote needs a dataset with targets");
    if (cfg.k_neighbors < 1) fail("BadConfig", "k_neighbors must be >= 1");
    if (cfg.factor < 0.0) fail("BadConfig", "oversample factor must be >= 0");

    std::vector<std::size_t> rare = rare_stratum(m);
    if (rare.size() < static_cast<std::size_t>(cfg.k_neighbors) + 1)
        fail("TooFewRows", "rare stratum has " + std::to_string(rare.size()) +
                               " rows; need k_neighbors + 1");

    const std::size_t d = m.cols();
    // standardization over the whole dataset, for neighbour distances only
    std::vector<double> mean(d, 0.0), scale(d, 1.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += m.at(i, j);
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(m.rows());
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double dv = m.at(i, j) - mean[j];
            var[j] += dv * dv;
        }
    for (std::size_t j = 0; j < d; ++j)
        scale[j] = var[j] > 0.0 ? std::sqrt(var[j] / static_cast<double>(m.rows())) : 1.0;

    auto distance = [&](std::size_t a, std::size_t b) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double dv = (m.at(a, j) - m.at(b, j)) / scale[j];
            sum += dv * dv;
        }
        return std::sqrt(sum);
    };

    // k nearest neighbours within the stratum, per rare row
    const std::size_t k = static_cast<std::size_t>(cfg.k_neighbors);
    std::vector<std::vector<std::size_t>> neighbors(rare.size());
    std::vector<std::pair<double, std::size_t>> dists;
    for (std::size_t a = 0; a < rare.size(); ++a) {
        dists.clear();
        for (std::size_t b = 0; b < rare.size(); ++b)
            if (b != a) dists.push_back({distance(rare[a], rare[b]), rare[b]});
        std::sort(dists.begin(), dists.end());
        for (std::size_t i = 0; i < k && i < dists.size(); ++i)
            neighbors[a].push_back(dists[i].second);
    }

    MetricsDataset out;
    out.feature_names = m.feature_names;
    out.has_targets = true;

    Rng rng(cfg.seed);
    const std::size_t n_synthetic =
        static_cast<std::size_t>(std::llround(cfg.factor * static_cast<double>(rare.size())));
    std::vector<double> row(d);
    for (std::size_t s = 0; s < n_synthetic; ++s) {
        std::size_t a = rng.uniform_int(rare.size());
        std::size_t seed_row = rare[a];
        std::size_t nn_row = neighbors[a][rng.uniform_int(neighbors[a].size())];
        double u = rng.uniform();
        for (std::size_t j = 0; j < d; ++j)
            row[j] = m.at(seed_row, j) + u * (m.at(nn_row, j) - m.at(seed_row, j));
        // Inverse-distance weighting of the parents' targets reduces to
        // linear interpolation along the segment; endpoints are exact.
        double t_seed = m.target_iou[seed_row], t_nn = m.target_iou[nn_row];
        double target;
        if (u == 0.0)
            target = t_seed;
        else if (u == 1.0)
            target = t_nn;
        else
            target = (1.0 - u) * t_seed + u * t_nn;
        out.append_row(m.frame_ids[seed_row], static_cast<int>(out.rows()), RowSource::augmented,
                       row, target, target == 0.0);
    }
    return out;
}

MatchResult pseudo_targets(const SegmentSet& pred, const SegmentSet& reference) {
    return match_segments(pred, reference);
}

Composition composition_from_name(const std::string& s) {
    if (s == "R") return Composition::R;
    if (s == "RA") return Composition::RA;
    if (s == "RAP") return Composition::RAP;
    if (s == "RP") return Composition::RP;
    if (s == "P") return Composition::P;
    fail("BadConfig", "unknown composition '" + s + "' (expect R, RA, RAP, RP or P)");
}

const char* composition_name(Composition c) {
    switch (c) {
        case Composition::R: return "R";
        case Composition::RA: return "RA";
        case Composition::RAP: return "RAP";
        case Composition::RP: return "RP";
        case Composition::P: return "P";
    }
    return "";
}

MetricsDataset compose(const MetricsDataset& real, const MetricsDataset& augmented,
                       const MetricsDataset& pseudo, Composition spec) {
    MetricsDataset out;
    switch (spec) {
        case Composition::R:
            out = real;
            break;
        case Composition::RA:
            out = real;
            out.append(augmented);
            break;
        case Composition::RAP:
            out = real;
            out.append(augmented);
            out.append(pseudo);
            break;
        case Composition::RP:
            out = real;
            out.append(pseudo);
            break;
        case Composition::P:
            out = pseudo;
            break;
    }
    return out;
}

}  // namespace segmeta
