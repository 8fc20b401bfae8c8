#pragma once

#include <map>
#include <string>
#include <vector>

#include "augment.hpp"
#include "meta_models.hpp"

namespace segmeta {

// End-to-end run over a corpus directory: decision rule -> segment metrics
// (-> tracked time series) -> repeated-run meta evaluation. Stages cache
// their outputs by content hash and are skipped while inputs, outputs and
// stage config are unchanged.
struct PipelineConfig {
    std::string corpus_dir;
    std::string out_dir;

    std::string rule = "bayes";  // bayes | ml | cost
    std::string cost_csv;        // cost rule only
    double prior_alpha = 1.0;    // ml rule only
    int prior_downscale = 1;

    int depth = -1;  // -1 single-frame; >= 0 tracked time-series window

    std::string task = "fp";         // fp | iou
    std::string model = "logistic";  // linear | logistic | gbt | mlp
    std::string penalty = "none";    // none | l1 | l2
    double lambda = 0.01;

    std::string composition = "R";  // R | RA | RAP | RP | P
    double smote_factor = 1.0;
    int smote_k = 5;

    int runs = 10;
    uint64_t seed = 42;
    double train_fraction = 0.8;

    std::map<std::string, std::string> echo() const;  // effective settings
};

struct StageStatus {
    std::string name;
    bool cached = false;
};

struct PipelineResult {
    std::vector<StageStatus> stages;
    EvaluationReport report;
    std::string report_path;

    bool stage_cached(const std::string& name) const;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Repeated-run evaluation with per-run training compositions: real rows are
// resampled into train/test, the train side is extended per the selector
// with interpolated rows and rows targeted against the pseudo reference.
// Test rows stay real-only.
EvaluationReport evaluate_composed(const MetricsDataset& real, const MetricsDataset* pseudo,
                                   Composition composition, const AugmentConfig& smote_cfg,
                                   const TrainConfig& cfg, int n_runs, uint64_t base_seed,
                                   double train_fraction);

}  // namespace segmeta
