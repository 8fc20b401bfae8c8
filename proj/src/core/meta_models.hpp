#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace segmeta {

enum class MetaTask { classify_fp, regress_iou };
enum class ModelKind { linear, logistic, gbt, mlp };
enum class PenaltyKind { none, l1, l2 };

const char* task_name(MetaTask t);
MetaTask task_from_name(const std::string& s);
const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);
const char* penalty_name(PenaltyKind p);
PenaltyKind penalty_from_name(const std::string& s);

struct Penalty {
    PenaltyKind kind = PenaltyKind::none;
    double lambda = 0.0;
};

struct TrainConfig {
    ModelKind kind = ModelKind::logistic;
    MetaTask task = MetaTask::classify_fp;
    Penalty penalty;
    uint64_t seed = 0;

    // logistic / linear gradient paths
    int max_iterations = 10000;
    double tolerance = 1e-6;

    // gradient boosted trees
    int gbt_stages = 100;
    int gbt_depth = 3;
    double gbt_learning_rate = 0.1;

    // shallow network
    int mlp_hidden = 50;
    double mlp_l2 = 1e-3;
    int mlp_iterations = 300;

    // restrict training to these features (empty = all); the entropy-only
    // baseline passes {"E_mean"}
    std::vector<std::string> feature_subset;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double eval(const double* x) const;
};

// A trained meta classifier or regressor. Inputs are standardized with
// training-split statistics; constant columns are dropped at training time
// and recorded in `active`.
struct MetaModel {
    ModelKind kind = ModelKind::logistic;
    MetaTask task = MetaTask::classify_fp;
    Penalty penalty;
    uint64_t seed = 0;

    std::vector<std::string> schema;  // expected input columns
    std::vector<int> active;          // indices into schema actually used
    std::vector<double> mean;         // per active feature
    std::vector<double> stddev;

    // linear / logistic
    std::vector<double> weights;
    double bias = 0.0;

    // gbt
    std::vector<Tree> trees;
    double gbt_base = 0.0;
    double gbt_learning_rate = 0.1;
    std::vector<double> stage_losses;  // training loss after each stage

    // mlp
    int hidden = 0;
    std::vector<double> w_in;   // hidden x active
    std::vector<double> b_in;   // hidden
    std::vector<double> w_out;  // hidden
    double b_out = 0.0;

    std::string to_json() const;
    static MetaModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static MetaModel load(const std::string& path);
};

// Targets are required; classification additionally needs both classes.
MetaModel train(const MetricsDataset& data, const TrainConfig& cfg);

// Classification scores are P(is_fp); regression estimates are clamped to
// [0, 1]. SchemaMismatch when the columns differ from training.
std::vector<double> predict(const MetaModel& m, const MetricsDataset& rows);

// Mann-Whitney statistic: (ordered pairs + 0.5 * ties) / all pos-neg pairs.
double auroc(std::span<const double> scores, std::span<const uint8_t> labels);

double accuracy(std::span<const double> scores, std::span<const uint8_t> labels,
                double threshold = 0.5);
double r_squared(std::span<const double> predicted, std::span<const double> actual);
double rmse(std::span<const double> predicted, std::span<const double> actual);

struct MetricSummary {
    std::vector<double> values;  // one per run
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev over runs
};

struct EvaluationReport {
    MetaTask task = MetaTask::classify_fp;
    int runs = 0;
    uint64_t base_seed = 0;
    // classification: acc_*, auroc_*; regression: r2_*, sigma_*
    MetricSummary acc_train, acc_test, auroc_train, auroc_test;
    MetricSummary r2_train, r2_test, sigma_train, sigma_test;
    std::string to_json() const;
};

// Repeated-run protocol: run i reshuffles the rows with base_seed + i,
// splits train/test at `train_fraction`, trains from scratch and scores
// both splits.
EvaluationReport evaluate(const MetricsDataset& data, const TrainConfig& cfg, int n_runs,
                          uint64_t base_seed, double train_fraction = 0.8);

// Uniform scores in [0, 1); the random-guessing baseline.
std::vector<double> naive_random_scores(std::size_t n, uint64_t seed);

MetricSummary summarize(std::vector<double> values);

}  // namespace segmeta
