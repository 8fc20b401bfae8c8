#include "pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "array.hpp"
#include "augment.hpp"
#include "corpus.hpp"
#include "decision.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "tracking.hpp"
#include "util.hpp"

namespace segmeta {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, std::string> PipelineConfig::echo() const {
    std::map<std::string, std::string> m;
    m["corpus"] = corpus_dir;
    m["out"] = out_dir;
    m["rule"] = rule;
    if (!cost_csv.empty()) m["cost"] = cost_csv;
    m["prior_alpha"] = format_value(prior_alpha);
    m["prior_downscale"] = std::to_string(prior_downscale);
    m["depth"] = std::to_string(depth);
    m["task"] = task;
    m["model"] = model;
    m["penalty"] = penalty;
    m["lambda"] = format_value(lambda);
    m["composition"] = composition;
    m["smote_factor"] = format_value(smote_factor);
    m["smote_k"] = std::to_string(smote_k);
    m["runs"] = std::to_string(runs);
    m["seed"] = std::to_string(seed);
    m["train_fraction"] = format_value(train_fraction);
    return m;
}

bool PipelineResult::stage_cached(const std::string& name) const {
    for (const StageStatus& s : stages)
        if (s.name == name) return s.cached;
    fail("StageFailure", "unknown stage '" + name + "'");
}

namespace {

struct Stage {
    std::string name;
    std::string config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

std::string stamp_path(const std::string& out_dir, const std::string& stage) {
    return (fs::path(out_dir) / "cache" / (stage + ".stamp.json")).string();
}

bool stage_fresh(const Stage& stage, const std::string& out_dir) {
    std::ifstream in(stamp_path(out_dir, stage.name));
    if (!in) return false;
    json stamp;
    try {
        stamp = json::parse(in);
    } catch (const json::exception&) {
        return false;
    }
    auto matches = [&](const char* key, const std::vector<std::string>& paths) {
        if (!stamp.contains(key)) return false;
        const json& recorded = stamp[key];
        if (recorded.size() != paths.size()) return false;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const json& entry = recorded[i];
            if (entry.at(0).get<std::string>() != paths[i]) return false;
            if (entry.at(1).get<std::string>() != file_hash(paths[i])) return false;
        }
        return true;
    };
    if (stamp.value("config", "") != hash_bytes(stage.config.data(), stage.config.size()))
        return false;
    return matches("inputs", stage.inputs) && matches("outputs", stage.outputs);
}

void write_stamp(const Stage& stage, const std::string& out_dir) {
    json stamp;
    stamp["config"] = hash_bytes(stage.config.data(), stage.config.size());
    auto record = [&](const char* key, const std::vector<std::string>& paths) {
        json list = json::array();
        for (const std::string& p : paths) list.push_back({p, file_hash(p)});
        stamp[key] = std::move(list);
    };
    record("inputs", stage.inputs);
    record("outputs", stage.outputs);
    fs::create_directories(fs::path(out_dir) / "cache");
    const std::string path = stamp_path(out_dir, stage.name);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out << stamp.dump(2) << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

template <typename Fn>
void run_stage(const Stage& stage, const std::string& out_dir, std::vector<StageStatus>& status,
               const Fn& body) {
    if (stage_fresh(stage, out_dir)) {
        status.push_back({stage.name, true});
        return;
    }
    try {
        body();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail("StageFailure", "stage '" + stage.name + "' failed: " + e.what());
    }
    write_stamp(stage, out_dir);
    status.push_back({stage.name, false});
}

std::string pred_mask_path(const std::string& out_dir, const FrameEntry& f) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "pred_%s_f%03d.npy", f.sequence_id.c_str(), f.frame_index);
    return (fs::path(out_dir) / "pred" / buf).string();
}

MetricsDataset per_frame_dataset(const MetricsDataset& all, const std::string& frame_id) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < all.rows(); ++i)
        if (all.frame_ids[i] == frame_id) rows.push_back(i);
    return all.select_rows(rows);
}

}  // namespace

EvaluationReport evaluate_composed(const MetricsDataset& real, const MetricsDataset* pseudo,
                                   Composition composition, const AugmentConfig& smote_cfg,
                                   const TrainConfig& cfg, int n_runs, uint64_t base_seed,
                                   double train_fraction) {
    const bool needs_pseudo = composition == Composition::RAP || composition == Composition::RP ||
                              composition == Composition::P;
    const bool needs_augmented =
        composition == Composition::RA || composition == Composition::RAP;
    if (needs_pseudo) {
        if (!pseudo) fail("BadConfig", "composition needs pseudo-targeted rows");
        if (pseudo->rows() != real.rows())
            fail("SchemaMismatch", "pseudo rows must align with the real rows");
    }
    if (real.rows() < 2) fail("InsufficientData", "evaluation needs at least two rows");

    EvaluationReport report;
    report.task = cfg.task;
    report.runs = n_runs;
    report.base_seed = base_seed;
    std::vector<double> acc_tr, acc_te, auc_tr, auc_te, r2_tr, r2_te, sg_tr, sg_te;

    const std::size_t n = real.rows();
    for (int run = 0; run < n_runs; ++run) {
        Rng rng(base_seed + static_cast<uint64_t>(run));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n; i-- > 1;)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);
        std::size_t n_train =
            static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
        std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());

        MetricsDataset real_train = real.select_rows(train_idx);
        MetricsDataset test_split = real.select_rows(test_idx);

        MetricsDataset augmented;
        augmented.feature_names = real.feature_names;
        augmented.has_targets = true;
        if (needs_augmented) {
            AugmentConfig run_smote = smote_cfg;
            run_smote.seed = base_seed + static_cast<uint64_t>(run);
            augmented = smote_rows(real_train, run_smote);
        }
        MetricsDataset pseudo_train;
        pseudo_train.feature_names = real.feature_names;
        pseudo_train.has_targets = true;
        if (needs_pseudo) pseudo_train = pseudo->select_rows(train_idx);

        MetricsDataset train_split = compose(real_train, augmented, pseudo_train, composition);

        TrainConfig run_cfg = cfg;
        run_cfg.seed = base_seed + static_cast<uint64_t>(run);
        MetaModel model = train(train_split, run_cfg);
        std::vector<double> score_tr = predict(model, train_split);
        std::vector<double> score_te = predict(model, test_split);

        if (cfg.task == MetaTask::classify_fp) {
            acc_tr.push_back(accuracy(score_tr, train_split.target_fp));
            acc_te.push_back(accuracy(score_te, test_split.target_fp));
            auc_tr.push_back(auroc(score_tr, train_split.target_fp));
            auc_te.push_back(auroc(score_te, test_split.target_fp));
        } else {
            r2_tr.push_back(r_squared(score_tr, train_split.target_iou));
            r2_te.push_back(r_squared(score_te, test_split.target_iou));
            sg_tr.push_back(rmse(score_tr, train_split.target_iou));
            sg_te.push_back(rmse(score_te, test_split.target_iou));
        }
    }
    report.acc_train = summarize(std::move(acc_tr));
    report.acc_test = summarize(std::move(acc_te));
    report.auroc_train = summarize(std::move(auc_tr));
    report.auroc_test = summarize(std::move(auc_te));
    report.r2_train = summarize(std::move(r2_tr));
    report.r2_test = summarize(std::move(r2_te));
    report.sigma_train = summarize(std::move(sg_tr));
    report.sigma_test = summarize(std::move(sg_te));
    return report;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.rule != "bayes" && cfg.rule != "ml" && cfg.rule != "cost")
        fail("BadConfig", "unknown rule '" + cfg.rule + "'");
    if (cfg.rule == "cost" && cfg.cost_csv.empty())
        fail("BadConfig", "cost rule needs a cost matrix csv");

    CorpusConfig corpus_cfg;
    corpus_cfg.seed = cfg.seed;
    CorpusLayout corpus = load_corpus(cfg.corpus_dir, corpus_cfg);
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "pred");

    PipelineResult result;

    const bool has_pseudo = std::all_of(corpus.frames.begin(), corpus.frames.end(),
                                        [](const FrameEntry& f) { return !f.pseudo_path.empty(); });

    // ---- stage: predict ----
    Stage predict_stage;
    predict_stage.name = "predict";
    predict_stage.config = cfg.rule + "|alpha=" + format_value(cfg.prior_alpha) +
                           "|downscale=" + std::to_string(cfg.prior_downscale);
    for (const FrameEntry& f : corpus.frames)
        predict_stage.inputs.push_back(corpus.resolve(f.probs_path));
    if (cfg.rule == "ml")
        for (const FrameEntry& f : corpus.frames)
            if (!f.gt_path.empty()) predict_stage.inputs.push_back(corpus.resolve(f.gt_path));
    if (cfg.rule == "cost") predict_stage.inputs.push_back(cfg.cost_csv);
    for (const FrameEntry& f : corpus.frames)
        predict_stage.outputs.push_back(pred_mask_path(cfg.out_dir, f));

    run_stage(predict_stage, cfg.out_dir, result.stages, [&] {
        PriorMap priors;
        CostMatrix costs;
        if (cfg.rule == "ml") {
            std::vector<LabelMap> labels;
            for (const FrameEntry& f : corpus.frames)
                if (!f.gt_path.empty())
                    labels.push_back(LabelMap::from_array(read_array(corpus.resolve(f.gt_path))));
            if (labels.empty()) fail("EmptyInput", "ml rule needs labelled frames for priors");
            Array first = read_array(corpus.resolve(corpus.frames[0].probs_path));
            int q = static_cast<int>(first.shape.back());
            priors = estimate_priors(labels, q, {cfg.prior_alpha, cfg.prior_downscale});
        } else if (cfg.rule == "cost") {
            costs = CostMatrix::read_csv(cfg.cost_csv);
        }
        parallel_for(corpus.frames.size(), [&](std::size_t i) {
            const FrameEntry& f = corpus.frames[i];
            ProbabilityVolume probs =
                ProbabilityVolume::from_array(read_array(corpus.resolve(f.probs_path)));
            SegmentationMask mask;
            if (cfg.rule == "bayes")
                mask = bayes_decide(probs);
            else if (cfg.rule == "ml")
                mask = ml_decide(probs, priors);
            else
                mask = cost_decide(probs, costs);
            write_array(mask.to_array(), pred_mask_path(cfg.out_dir, f));
        });
    });

    // ---- stage: metrics ----
    const std::string metrics_csv = (fs::path(cfg.out_dir) / "metrics.csv").string();
    const std::string pseudo_csv = (fs::path(cfg.out_dir) / "metrics_pseudo.csv").string();
    Stage metrics_stage;
    metrics_stage.name = "metrics";
    metrics_stage.config = has_pseudo ? "with-pseudo" : "real-only";
    for (const FrameEntry& f : corpus.frames) {
        metrics_stage.inputs.push_back(pred_mask_path(cfg.out_dir, f));
        metrics_stage.inputs.push_back(corpus.resolve(f.probs_path));
        if (!f.gt_path.empty()) metrics_stage.inputs.push_back(corpus.resolve(f.gt_path));
        if (has_pseudo) metrics_stage.inputs.push_back(corpus.resolve(f.pseudo_path));
    }
    metrics_stage.outputs.push_back(metrics_csv);
    if (has_pseudo) metrics_stage.outputs.push_back(pseudo_csv);

    run_stage(metrics_stage, cfg.out_dir, result.stages, [&] {
        std::vector<MetricsDataset> real_parts(corpus.frames.size());
        std::vector<MetricsDataset> pseudo_parts(corpus.frames.size());
        parallel_for(corpus.frames.size(), [&](std::size_t i) {
            const FrameEntry& f = corpus.frames[i];
            if (f.gt_path.empty() && !has_pseudo) return;
            ProbabilityVolume probs =
                ProbabilityVolume::from_array(read_array(corpus.resolve(f.probs_path)));
            SegmentationMask mask =
                LabelMap::from_array(read_array(pred_mask_path(cfg.out_dir, f)));
            DispersionMaps maps = dispersion_maps(probs);
            if (!f.gt_path.empty()) {
                LabelMap gt = LabelMap::from_array(read_array(corpus.resolve(f.gt_path)));
                SegmentSet pred = extract_segments(mask, &gt, Source::predicted);
                pred.frame_id = f.frame_id();
                SegmentSet gt_segments = extract_segments(gt, nullptr, Source::ground_truth);
                MatchResult match = match_segments(pred, gt_segments);
                real_parts[i] = aggregate(pred, maps, probs, &match, RowSource::real);
            }
            if (has_pseudo) {
                LabelMap ref = LabelMap::from_array(read_array(corpus.resolve(f.pseudo_path)));
                SegmentSet pred = extract_segments(mask, nullptr, Source::predicted);
                pred.frame_id = f.frame_id();
                SegmentSet ref_segments = extract_segments(ref, nullptr, Source::pseudo);
                MatchResult match = pseudo_targets(pred, ref_segments);
                pseudo_parts[i] = aggregate(pred, maps, probs, &match, RowSource::pseudo);
            }
        });
        MetricsDataset real_all, pseudo_all;
        bool first_real = true, first_pseudo = true;
        for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
            if (!corpus.frames[i].gt_path.empty()) {
                if (first_real) {
                    real_all = real_parts[i];
                    first_real = false;
                } else {
                    real_all.append(real_parts[i]);
                }
            }
            if (has_pseudo) {
                if (first_pseudo) {
                    pseudo_all = pseudo_parts[i];
                    first_pseudo = false;
                } else {
                    pseudo_all.append(pseudo_parts[i]);
                }
            }
        }
        if (first_real) fail("EmptyInput", "no labelled frames; nothing to evaluate");
        real_all.write_csv(metrics_csv);
        if (has_pseudo) pseudo_all.write_csv(pseudo_csv);
    });

    // ---- stage: timeseries ----
    const bool time_dynamic = cfg.depth >= 0;
    const std::string series_csv = (fs::path(cfg.out_dir) / "timeseries.csv").string();
    const std::string series_pseudo_csv =
        (fs::path(cfg.out_dir) / "timeseries_pseudo.csv").string();
    if (time_dynamic) {
        Stage series_stage;
        series_stage.name = "timeseries";
        series_stage.config = "depth=" + std::to_string(cfg.depth) +
                              (has_pseudo ? "|with-pseudo" : "|real-only");
        series_stage.inputs.push_back(metrics_csv);
        if (has_pseudo) series_stage.inputs.push_back(pseudo_csv);
        for (const FrameEntry& f : corpus.frames)
            series_stage.inputs.push_back(pred_mask_path(cfg.out_dir, f));
        series_stage.outputs.push_back(series_csv);
        if (has_pseudo) series_stage.outputs.push_back(series_pseudo_csv);

        run_stage(series_stage, cfg.out_dir, result.stages, [&] {
            MetricsDataset real_all = MetricsDataset::read_csv(metrics_csv);
            MetricsDataset pseudo_all;
            if (has_pseudo) pseudo_all = MetricsDataset::read_csv(pseudo_csv);
            MetricsDataset series_real, series_pseudo;
            bool first = true;
            for (const auto& [seq_id, members] : corpus.sequences) {
                std::vector<SegmentSet> masks;
                std::vector<MetricsDataset> frames_real, frames_pseudo;
                for (std::size_t idx : members) {
                    const FrameEntry& f = corpus.frames[idx];
                    SegmentationMask mask =
                        LabelMap::from_array(read_array(pred_mask_path(cfg.out_dir, f)));
                    LabelMap gt;
                    const LabelMap* ignore = nullptr;
                    if (!f.gt_path.empty()) {
                        gt = LabelMap::from_array(read_array(corpus.resolve(f.gt_path)));
                        ignore = &gt;
                    }
                    SegmentSet set = extract_segments(mask, ignore, Source::predicted);
                    set.frame_id = f.frame_id();
                    masks.push_back(std::move(set));
                    frames_real.push_back(per_frame_dataset(real_all, f.frame_id()));
                    if (has_pseudo)
                        frames_pseudo.push_back(per_frame_dataset(pseudo_all, f.frame_id()));
                }
                std::vector<Track> tracks = build_tracks(masks, MatchConfig{});
                MetricsDataset part = assemble_time_series(tracks, frames_real, cfg.depth);
                if (first) {
                    series_real = part;
                } else {
                    series_real.append(part);
                }
                if (has_pseudo) {
                    MetricsDataset p = assemble_time_series(tracks, frames_pseudo, cfg.depth);
                    if (first) {
                        series_pseudo = p;
                    } else {
                        series_pseudo.append(p);
                    }
                }
                first = false;
            }
            series_real.write_csv(series_csv);
            if (has_pseudo) series_pseudo.write_csv(series_pseudo_csv);
        });
    }

    // ---- stage: evaluate ----
    const std::string report_path = (fs::path(cfg.out_dir) / "report.json").string();
    Stage eval_stage;
    eval_stage.name = "evaluate";
    eval_stage.config = cfg.task + "|" + cfg.model + "|" + cfg.penalty + "|" +
                        format_value(cfg.lambda) + "|" + cfg.composition + "|" +
                        format_value(cfg.smote_factor) + "|" + std::to_string(cfg.smote_k) + "|" +
                        std::to_string(cfg.runs) + "|" + std::to_string(cfg.seed) + "|" +
                        format_value(cfg.train_fraction);
    eval_stage.inputs.push_back(time_dynamic ? series_csv : metrics_csv);
    Composition composition = composition_from_name(cfg.composition);
    const bool needs_pseudo = composition != Composition::R && composition != Composition::RA;
    if (needs_pseudo) {
        if (!has_pseudo) fail("BadConfig", "composition needs pseudo reference masks");
        eval_stage.inputs.push_back(time_dynamic ? series_pseudo_csv : pseudo_csv);
    }
    eval_stage.outputs.push_back(report_path);

    EvaluationReport report;
    run_stage(eval_stage, cfg.out_dir, result.stages, [&] {
        MetricsDataset real_rows =
            MetricsDataset::read_csv(time_dynamic ? series_csv : metrics_csv);
        MetricsDataset pseudo_rows;
        if (needs_pseudo)
            pseudo_rows =
                MetricsDataset::read_csv(time_dynamic ? series_pseudo_csv : pseudo_csv);
        TrainConfig train_cfg;
        train_cfg.task = task_from_name(cfg.task);
        train_cfg.kind = model_kind_from_name(cfg.model);
        train_cfg.penalty.kind = penalty_from_name(cfg.penalty);
        train_cfg.penalty.lambda =
            train_cfg.penalty.kind == PenaltyKind::none ? 0.0 : cfg.lambda;
        AugmentConfig smote_cfg;
        smote_cfg.k_neighbors = cfg.smote_k;
        smote_cfg.factor = cfg.smote_factor;
        report = evaluate_composed(real_rows, needs_pseudo ? &pseudo_rows : nullptr, composition,
                                   smote_cfg, train_cfg, cfg.runs, cfg.seed, cfg.train_fraction);
        json doc;
        doc["config"] = cfg.echo();
        doc["report"] = json::parse(report.to_json());
        const std::string tmp = report_path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
            out << doc.dump(2) << '\n';
        }
        std::error_code ec;
        fs::rename(tmp, report_path, ec);
        if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + report_path + "'");
    });

    // Cached evaluate stage: read the report back for the caller.
    if (result.stages.back().cached) {
        std::ifstream in(report_path);
        if (in) {
            json doc = json::parse(in, nullptr, false);
            if (!doc.is_discarded() && doc.contains("report")) {
                const json& r = doc["report"];
                report.task = task_from_name(r.at("task").get<std::string>());
                report.runs = r.at("runs").get<int>();
                report.base_seed = r.at("base_seed").get<uint64_t>();
                auto load = [&](const char* key, MetricSummary& train, MetricSummary& test) {
                    if (!r.contains(key)) return;
                    train.values = r[key]["train"]["values"].get<std::vector<double>>();
                    train.mean = r[key]["train"]["mean"].get<double>();
                    train.stddev = r[key]["train"]["stddev"].get<double>();
                    test.values = r[key]["test"]["values"].get<std::vector<double>>();
                    test.mean = r[key]["test"]["mean"].get<double>();
                    test.stddev = r[key]["test"]["stddev"].get<double>();
                };
                load("acc", report.acc_train, report.acc_test);
                load("auroc", report.auroc_train, report.auroc_test);
                load("r2", report.r2_train, report.r2_test);
                load("sigma", report.sigma_train, report.sigma_test);
            }
        }
    }
    result.report = report;
    result.report_path = report_path;
    return result;
}

}  // namespace segmeta
