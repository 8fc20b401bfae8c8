#include <doctest.h>

#include <cmath>

#include "core/augment.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace segmeta;

namespace {

MetricsDataset skewed_data(Rng& rng, int n, double rare_share) {
    MetricsDataset ds;
    ds.feature_names = {"a", "b", "c"};
    ds.has_targets = true;
    for (int i = 0; i < n; ++i) {
        bool rare = rng.uniform() < rare_share;
        double iou = rare ? 0.0 : rng.uniform(0.55, 0.95);
        ds.append_row("f", i, RowSource::real,
                      {rng.normal() + (rare ? 2.0 : 0.0), rng.normal() * 3.0, rng.uniform()},
                      iou, iou == 0.0);
    }
    return ds;
}

}  // namespace

TEST_CASE("synthetic rows lie on the segment between their parents") {
    Rng rng(149);
    MetricsDataset ds = skewed_data(rng, 120, 0.25);
    AugmentConfig cfg;
    cfg.factor = 2.0;
    cfg.seed = 5;
    MetricsDataset synthetic = smote_rows(ds, cfg);
    CHECK(synthetic.rows() > 0);

    for (std::size_t s = 0; s < synthetic.rows(); ++s) {
        CHECK(synthetic.sources[s] == RowSource::augmented);
        // find two parents: the synthetic point must be a convex combination
        // of SOME pair of dataset rows, coordinate-wise with one parameter.
        bool found = false;
        for (std::size_t a = 0; a < ds.rows() && !found; ++a) {
            // recover u from the first coordinate where parents differ
            for (std::size_t b = 0; b < ds.rows() && !found; ++b) {
                if (a == b) continue;
                double u = -1.0;
                bool ok = true;
                for (std::size_t c = 0; c < ds.cols(); ++c) {
                    double pa = ds.at(a, c), pb = ds.at(b, c), pv = synthetic.at(s, c);
                    if (pa == pb) {
                        if (std::abs(pv - pa) > 1e-9) {
                            ok = false;
                            break;
                        }
                        continue;
                    }
                    double cu = (pv - pa) / (pb - pa);
                    if (u < 0.0) u = cu;
                    if (std::abs(cu - u) > 1e-7 || cu < -1e-9 || cu > 1.0 + 1e-9) {
                        ok = false;
                        break;
                    }
                }
                if (ok && u >= -1e-9) {
                    found = true;
                    // target within the parents' range
                    double lo = std::min(ds.target_iou[a], ds.target_iou[b]);
                    double hi = std::max(ds.target_iou[a], ds.target_iou[b]);
                    CHECK(synthetic.target_iou[s] >= lo - 1e-9);
                    CHECK(synthetic.target_iou[s] <= hi + 1e-9);
                }
            }
        }
        CHECK(found);
    }
}

TEST_CASE("interpolation endpoints and midpoint") {
    // a two-row rare stratum (one iou=0 row, one low-mass-bin row); k=1
    // forces the pair, u is drawn but the produced rows must always
    // interpolate linearly between the two parents
    MetricsDataset ds;
    ds.feature_names = {"x", "y"};
    ds.has_targets = true;
    ds.append_row("f", 0, RowSource::real, {0.0, 10.0}, 0.0, true);
    ds.append_row("f", 1, RowSource::real, {1.0, 20.0}, 0.4, false);
    for (int i = 2; i < 12; ++i)
        ds.append_row("f", i, RowSource::real, {50.0 + i, -30.0}, 0.85, false);
    AugmentConfig cfg;
    cfg.k_neighbors = 1;
    cfg.factor = 30.0;
    cfg.seed = 3;
    MetricsDataset synthetic = smote_rows(ds, cfg);
    REQUIRE(synthetic.rows() == 60);
    for (std::size_t s = 0; s < synthetic.rows(); ++s) {
        double x = synthetic.at(s, 0);
        // y must track x affinely: y = 10 + 10 x
        CHECK(std::abs(synthetic.at(s, 1) - (10.0 + 10.0 * x)) < 1e-9);
        // target interpolates with the same parameter, measured from the
        // seed row's end
        double u_from_zero = x;  // seed 0 -> u = x; seed 1 -> u = 1 - x
        double t1 = 0.0 * (1.0 - u_from_zero) + 0.4 * u_from_zero;
        double t2 = 0.4 * (1.0 - (1.0 - x)) + 0.0 * (1.0 - x);
        CHECK((std::abs(synthetic.target_iou[s] - t1) < 1e-9 ||
               std::abs(synthetic.target_iou[s] - t2) < 1e-9));
        CHECK((synthetic.target_fp[s] != 0) == (synthetic.target_iou[s] == 0.0));
    }
}

TEST_CASE("smote is reproducible and respects the row budget") {
    Rng rng(151);
    MetricsDataset ds = skewed_data(rng, 80, 0.3);
    AugmentConfig cfg;
    cfg.factor = 1.5;
    cfg.seed = 9;
    MetricsDataset a = smote_rows(ds, cfg);
    MetricsDataset b = smote_rows(ds, cfg);
    CHECK(a.to_csv() == b.to_csv());

    std::size_t rare = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        if (ds.target_iou[i] == 0.0) ++rare;
    // stratum holds at least the iou=0 rows
    CHECK(a.rows() >= static_cast<std::size_t>(std::llround(1.5 * rare)) - 1);
}

TEST_CASE("too-small strata are rejected") {
    MetricsDataset ds;
    ds.feature_names = {"x"};
    ds.has_targets = true;
    for (int i = 0; i < 6; ++i)
        ds.append_row("f", i, RowSource::real, {1.0 * i}, i == 0 ? 0.0 : 0.1 * i, i == 0);
    AugmentConfig cfg;
    cfg.k_neighbors = 50;
    try {
        smote_rows(ds, cfg);
        FAIL("expected TooFewRows");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "TooFewRows");
    }
}

TEST_CASE("pseudo targets equal real targets when the reference is the truth") {
    Rng rng(157);
    LabelMap pred_mask = testutil::random_mask(rng, 16, 16, 3);
    LabelMap gt_mask = testutil::random_mask(rng, 16, 16, 3);
    SegmentSet pred = extract_segments(pred_mask);
    SegmentSet gt = extract_segments(gt_mask, nullptr, Source::ground_truth);
    SegmentSet ref = extract_segments(gt_mask, nullptr, Source::pseudo);
    MatchResult real = match_segments(pred, gt);
    MatchResult pseudo = pseudo_targets(pred, ref);
    CHECK(real.iou == pseudo.iou);
    CHECK(real.precision == pseudo.precision);

    // prediction used as its own reference: all iou 1, no fps
    MatchResult self = pseudo_targets(pred, extract_segments(pred_mask, nullptr, Source::pseudo));
    for (double v : self.iou) CHECK(v == 1.0);
    for (uint8_t fp : self.is_fp) CHECK(fp == 0);
}

TEST_CASE("compositions concatenate by selector") {
    Rng rng(163);
    MetricsDataset real = skewed_data(rng, 30, 0.2);
    MetricsDataset augmented = skewed_data(rng, 10, 0.2);
    MetricsDataset pseudo = skewed_data(rng, 20, 0.2);
    for (auto& s : augmented.sources) s = RowSource::augmented;
    for (auto& s : pseudo.sources) s = RowSource::pseudo;

    CHECK(compose(real, augmented, pseudo, Composition::R).rows() == 30);
    CHECK(compose(real, augmented, pseudo, Composition::RA).rows() == 40);
    CHECK(compose(real, augmented, pseudo, Composition::RAP).rows() == 60);
    CHECK(compose(real, augmented, pseudo, Composition::RP).rows() == 50);
    CHECK(compose(real, augmented, pseudo, Composition::P).rows() == 20);

    MetricsDataset r = compose(real, augmented, pseudo, Composition::R);
    for (RowSource s : r.sources) CHECK(s == RowSource::real);
    MetricsDataset p = compose(real, augmented, pseudo, Composition::P);
    for (RowSource s : p.sources) CHECK(s == RowSource::pseudo);

    MetricsDataset wrong;
    wrong.feature_names = {"different"};
    wrong.has_targets = true;
    CHECK_THROWS_AS(compose(real, wrong, pseudo, Composition::RA), ValidationError);
}
