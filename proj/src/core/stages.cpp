#include "stages.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "array.hpp"
#include "augment.hpp"
#include "corpus.hpp"
#include "decision.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "synth.hpp"
#include "tracking.hpp"

namespace segmeta {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class OptionReader {
public:
    explicit OptionReader(const Options& options) : options_(options) {}

    bool has(const std::string& key) {
        used_.insert(key);
        return options_.count(key) != 0;
    }
    std::string get(const std::string& key) {
        used_.insert(key);
        auto it = options_.find(key);
        if (it == options_.end()) fail("BadConfig", "missing required option '" + key + "'");
        return it->second;
    }
    std::string get(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        auto it = options_.find(key);
        return it == options_.end() ? fallback : it->second;
    }
    int get_int(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        try {
            return std::stoi(get(key));
        } catch (const std::exception&) {
            fail("BadConfig", "option '" + key + "' is not an integer");
        }
    }
    double get_double(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        try {
            return std::stod(get(key));
        } catch (const std::exception&) {
            fail("BadConfig", "option '" + key + "' is not a number");
        }
    }
    uint64_t get_seed(const std::string& key, uint64_t fallback) {
        if (!has(key)) return fallback;
        try {
            return std::stoull(get(key));
        } catch (const std::exception&) {
            fail("BadConfig", "option '" + key + "' is not a seed");
        }
    }

    // every provided key must have been consumed by the stage
    void finish() const {
        for (const auto& [key, value] : options_)
            if (!used_.count(key)) fail("BadConfig", "unknown option '" + key + "'");
    }

    json echo() const {
        json j = json::object();
        for (const auto& [key, value] : options_) j[key] = value;
        return j;
    }

private:
    const Options& options_;
    std::set<std::string> used_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out << text;
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

std::string default_frame_id(const std::string& path) {
    return fs::path(path).stem().string();
}

// ---- stages ----

void stage_synth(OptionReader& opt) {
    SceneSpec spec;
    if (opt.has("spec")) spec = SceneSpec::from_file(opt.get("spec"));
    if (opt.has("seed")) spec.seed = opt.get_seed("seed", spec.seed);
    SynthCorpusOptions corpus;
    corpus.frames = opt.get_int("frames", 20);
    std::string mode = opt.get("mode", "single");
    if (mode != "single" && mode != "sequence")
        fail("BadConfig", "mode must be single or sequence");
    corpus.sequence_mode = mode == "sequence";
    corpus.sequence_length = opt.get_int("length", 10);
    corpus.emit_pseudo = opt.get_int("pseudo", 1) != 0;
    std::string out = opt.get("out");
    opt.finish();
    write_synth_corpus(spec, corpus, out);
}

void stage_predict(OptionReader& opt) {
    std::string rule = opt.get("rule", "bayes");
    ProbabilityVolume probs = ProbabilityVolume::from_array(read_array(opt.get("probs")));
    SegmentationMask mask;
    if (rule == "bayes") {
        mask = bayes_decide(probs);
    } else if (rule == "ml") {
        PriorMap priors = PriorMap::from_array(read_array(opt.get("priors")));
        mask = ml_decide(probs, priors);
    } else if (rule == "cost") {
        CostMatrix costs = CostMatrix::read_csv(opt.get("cost"));
        bool degenerate = false;
        mask = cost_decide(probs, costs, &degenerate);
        if (degenerate)
            std::fputs("warning: all costs zero; every class optimal, wrote class 0\n", stderr);
    } else {
        fail("BadConfig", "unknown rule '" + rule + "'");
    }
    std::string out = opt.get("out");
    opt.finish();
    write_array(mask.to_array(), out);
}

void stage_segments(OptionReader& opt) {
    SegmentationMask mask = LabelMap::from_array(read_array(opt.get("mask")));
    std::string frame_id = opt.get("frame-id", default_frame_id(opt.get("mask")));
    bool with_gt = opt.has("gt");
    LabelMap gt;
    if (with_gt) gt = LabelMap::from_array(read_array(opt.get("gt")));
    SegmentSet set = extract_segments(mask, with_gt ? &gt : nullptr, Source::predicted);
    set.frame_id = frame_id;
    MatchResult match;
    if (with_gt) {
        SegmentSet gt_set = extract_segments(gt, nullptr, Source::ground_truth);
        match = match_segments(set, gt_set);
    }
    std::string out = opt.get("out");
    opt.finish();

    std::string csv =
        "frame_id,segment_id,class_id,size,boundary_size,interior_size,bbox,centroid_r,"
        "centroid_c,iou,is_fp,precision\n";
    for (std::size_t i = 0; i < set.segments.size(); ++i) {
        const Segment& s = set.segments[i];
        csv += frame_id;
        csv += ',' + std::to_string(s.id) + ',' + std::to_string(s.class_id) + ',' +
               std::to_string(s.size) + ',' + std::to_string(s.boundary_size) + ',' +
               std::to_string(s.interior_size) + ',';
        csv += std::to_string(s.bbox_rmin) + ':' + std::to_string(s.bbox_cmin) + ':' +
               std::to_string(s.bbox_rmax) + ':' + std::to_string(s.bbox_cmax);
        csv += ',' + format_value(s.centroid_r) + ',' + format_value(s.centroid_c);
        if (with_gt) {
            csv += ',' + format_value(match.iou[i]);
            csv += match.is_fp[i] ? ",1," : ",0,";
            csv += format_value(match.precision[i]);
        } else {
            csv += ",,,";
        }
        csv += '\n';
    }
    write_text(out, csv);
}

void stage_metrics(OptionReader& opt) {
    ProbabilityVolume probs = ProbabilityVolume::from_array(read_array(opt.get("probs")));
    SegmentationMask mask = LabelMap::from_array(read_array(opt.get("mask")));
    std::string frame_id = opt.get("frame-id", default_frame_id(opt.get("probs")));
    DispersionMaps maps = dispersion_maps(probs);
    MetricsDataset ds;
    if (opt.has("gt")) {
        LabelMap gt = LabelMap::from_array(read_array(opt.get("gt")));
        SegmentSet pred = extract_segments(mask, &gt, Source::predicted);
        pred.frame_id = frame_id;
        SegmentSet gt_set = extract_segments(gt, nullptr, Source::ground_truth);
        MatchResult match = match_segments(pred, gt_set);
        ds = aggregate(pred, maps, probs, &match, RowSource::real);
    } else {
        SegmentSet pred = extract_segments(mask, nullptr, Source::predicted);
        pred.frame_id = frame_id;
        ds = aggregate(pred, maps, probs, nullptr, RowSource::real);
    }
    std::string out = opt.get("out");
    opt.finish();
    ds.write_csv(out);
}

void stage_train_meta(OptionReader& opt) {
    MetricsDataset data = MetricsDataset::read_csv(opt.get("in"));
    TrainConfig cfg;
    cfg.task = task_from_name(opt.get("task", "fp"));
    cfg.kind = model_kind_from_name(opt.get("model", "logistic"));
    cfg.penalty.kind = penalty_from_name(opt.get("penalty", "none"));
    cfg.penalty.lambda =
        opt.get_double("lambda", cfg.penalty.kind == PenaltyKind::l1 ? 0.01 : 1e-3);
    if (cfg.penalty.kind == PenaltyKind::none) cfg.penalty.lambda = 0.0;
    cfg.seed = opt.get_seed("seed", 0);
    if (opt.has("features")) cfg.feature_subset = split_list(opt.get("features"));
    std::string out = opt.get("out");
    opt.finish();
    MetaModel model = train(data, cfg);
    model.save(out);
}

void stage_eval_meta(OptionReader& opt) {
    MetricsDataset data = MetricsDataset::read_csv(opt.get("in"));
    MetaModel model = MetaModel::load(opt.get("model"));
    TrainConfig cfg;
    cfg.task = model.task;
    cfg.kind = model.kind;
    cfg.penalty = model.penalty;
    if (!model.active.empty() && model.active.size() != model.schema.size()) {
        // the model may have been trained on a feature subset; carry it over
        for (int idx : model.active) cfg.feature_subset.push_back(model.schema[idx]);
    }
    int runs = opt.get_int("runs", 10);
    uint64_t seed = opt.get_seed("seed", model.seed);
    double fraction = opt.get_double("train-fraction", 0.8);
    std::string report_path = opt.get("report");
    json config_echo = opt.echo();
    opt.finish();
    EvaluationReport report = evaluate(data, cfg, runs, seed, fraction);
    json doc;
    doc["config"] = std::move(config_echo);
    doc["config"]["seed"] = std::to_string(seed);
    doc["report"] = json::parse(report.to_json());
    write_text(report_path, doc.dump(2) + "\n");
}

void stage_track(OptionReader& opt) {
    std::string manifest = opt.get("manifest");
    std::string corpus_dir = fs::is_directory(manifest)
                                 ? manifest
                                 : fs::path(manifest).parent_path().string();
    CorpusConfig corpus_cfg;
    corpus_cfg.check_files = true;
    CorpusLayout corpus = load_corpus(corpus_dir, corpus_cfg);
    MatchConfig match_cfg;
    match_cfg.min_overlap = opt.get_int("min-overlap", 1);
    match_cfg.linear_shift = opt.get("shift", "linear") != "none";
    int depth = opt.get_int("depth", 0);
    std::string out = opt.get("out");
    std::string series_out = opt.get("series-out", "");
    opt.finish();

    std::string csv =
        "track_id,sequence_id,frame_index,segment_id,class_id,centroid_r,centroid_c,"
        "shift_r,shift_c\n";
    MetricsDataset all_series;
    bool first_series = true;
    int track_base = 0;
    for (const auto& [seq_id, members] : corpus.sequences) {
        std::vector<SegmentSet> masks;
        std::vector<MetricsDataset> frame_metrics;
        for (std::size_t idx : members) {
            const FrameEntry& f = corpus.frames[idx];
            ProbabilityVolume probs =
                ProbabilityVolume::from_array(read_array(corpus.resolve(f.probs_path)));
            SegmentationMask mask = bayes_decide(probs);
            LabelMap gt;
            const LabelMap* ignore = nullptr;
            if (!f.gt_path.empty()) {
                gt = LabelMap::from_array(read_array(corpus.resolve(f.gt_path)));
                ignore = &gt;
            }
            SegmentSet set = extract_segments(mask, ignore, Source::predicted);
            set.frame_id = f.frame_id();
            if (!series_out.empty()) {
                DispersionMaps maps = dispersion_maps(probs);
                if (!f.gt_path.empty()) {
                    SegmentSet gt_set = extract_segments(gt, nullptr, Source::ground_truth);
                    MatchResult match = match_segments(set, gt_set);
                    frame_metrics.push_back(aggregate(set, maps, probs, &match, RowSource::real));
                } else {
                    frame_metrics.push_back(aggregate(set, maps, probs, nullptr, RowSource::real));
                }
            }
            masks.push_back(std::move(set));
        }
        std::vector<Track> tracks = build_tracks(masks, match_cfg);
        for (const Track& track : tracks)
            for (const TrackMember& m : track.members) {
                csv += std::to_string(track_base + track.track_id);
                csv += ',' + seq_id + ',' + std::to_string(m.frame_index) + ',' +
                       std::to_string(m.segment_id) + ',' + std::to_string(track.class_id) + ',' +
                       format_value(m.centroid_r) + ',' + format_value(m.centroid_c) + ',' +
                       std::to_string(m.shift_estimate.dr) + ',' +
                       std::to_string(m.shift_estimate.dc) + '\n';
            }
        track_base += static_cast<int>(tracks.size());
        if (!series_out.empty()) {
            MetricsDataset part = assemble_time_series(tracks, frame_metrics, depth);
            if (first_series) {
                all_series = part;
                first_series = false;
            } else {
                all_series.append(part);
            }
        }
    }
    write_text(out, csv);
    if (!series_out.empty()) all_series.write_csv(series_out);
}

void stage_augment(OptionReader& opt) {
    MetricsDataset data = MetricsDataset::read_csv(opt.get("in"));
    AugmentConfig cfg;
    cfg.k_neighbors = opt.get_int("k", 5);
    cfg.factor = opt.get_double("factor", 1.0);
    cfg.seed = opt.get_seed("seed", 1);
    std::string out = opt.get("out");
    opt.finish();
    MetricsDataset synthetic = smote_rows(data, cfg);
    synthetic.write_csv(out);
}

void stage_compose(OptionReader& opt) {
    Composition spec = composition_from_name(opt.get("spec"));
    MetricsDataset real = MetricsDataset::read_csv(opt.get("real"));
    MetricsDataset augmented, pseudo;
    augmented.feature_names = real.feature_names;
    augmented.has_targets = real.has_targets;
    pseudo.feature_names = real.feature_names;
    pseudo.has_targets = real.has_targets;
    if (opt.has("aug")) augmented = MetricsDataset::read_csv(opt.get("aug"));
    if (opt.has("pseudo")) pseudo = MetricsDataset::read_csv(opt.get("pseudo"));
    std::string out = opt.get("out");
    opt.finish();
    compose(real, augmented, pseudo, spec).write_csv(out);
}

void stage_priors(OptionReader& opt) {
    std::vector<LabelMap> labels;
    int classes = opt.get_int("classes", 0);
    if (opt.has("labels")) {
        for (const std::string& path : split_list(opt.get("labels")))
            labels.push_back(LabelMap::from_array(read_array(path)));
    } else {
        CorpusConfig corpus_cfg;
        CorpusLayout corpus = load_corpus(opt.get("corpus"), corpus_cfg);
        for (const FrameEntry& f : corpus.frames)
            if (!f.gt_path.empty())
                labels.push_back(LabelMap::from_array(read_array(corpus.resolve(f.gt_path))));
    }
    if (classes <= 0) {
        uint8_t top = 0;
        for (const LabelMap& m : labels)
            for (uint8_t v : m.labels)
                if (v != kIgnoreLabel) top = std::max(top, v);
        classes = top + 1;
    }
    PriorConfig cfg;
    cfg.alpha = opt.get_double("alpha", 1.0);
    cfg.downscale = opt.get_int("downscale", 1);
    std::string out = opt.get("out");
    opt.finish();
    PriorMap priors = estimate_priors(labels, classes, cfg);
    write_array(priors.to_array(), out);
}

void stage_cdf(OptionReader& opt) {
    std::vector<std::string> pred_paths = split_list(opt.get("pred"));
    std::vector<std::string> gt_paths = split_list(opt.get("gt"));
    if (pred_paths.size() != gt_paths.size())
        fail("BadConfig", "need matching pred/gt file lists");
    std::vector<int> class_ids;
    for (const std::string& c : split_list(opt.get("class"))) {
        try {
            class_ids.push_back(std::stoi(c));
        } catch (const std::exception&) {
            fail("BadConfig", "class id '" + c + "' is not an integer");
        }
    }
    std::string rule_tag = opt.get("rule-tag", "bayes");
    std::string out = opt.get("out");
    json config_echo = opt.echo();
    opt.finish();

    std::vector<double> precisions, recalls;
    for (std::size_t i = 0; i < pred_paths.size(); ++i) {
        SegmentationMask mask = LabelMap::from_array(read_array(pred_paths[i]));
        LabelMap gt = LabelMap::from_array(read_array(gt_paths[i]));
        SegmentSet pred = extract_segments(mask, &gt, Source::predicted);
        SegmentSet gt_set = extract_segments(gt, nullptr, Source::ground_truth);
        ClassMatchView view = segment_precision_recall(pred, gt_set, class_ids);
        precisions.insert(precisions.end(), view.precision.begin(), view.precision.end());
        recalls.insert(recalls.end(), view.recall.begin(), view.recall.end());
    }

    auto report_of = [&](const EmpiricalCdf& cdf, bool with_f_r_zero) {
        json points = json::array();
        double prev = -1.0;
        for (double v : cdf.sorted_values) {
            if (v == prev) continue;
            prev = v;
            points.push_back({v, cdf.eval(v)});
        }
        json j{{"class", class_ids.size() == 1 ? json(class_ids[0]) : json(class_ids)},
               {"kind", cdf_kind_name(cdf.kind)},
               {"rule", cdf.rule_tag},
               {"n", cdf.count()},
               {"points", std::move(points)}};
        if (with_f_r_zero) j["f_r_zero"] = nondetection_rate(cdf);
        return j;
    };

    json doc;
    doc["config"] = std::move(config_echo);
    json reports = json::array();
    if (!precisions.empty()) {
        EmpiricalCdf p = build_cdf(precisions, CdfKind::precision,
                                   class_ids.empty() ? 0 : class_ids[0], rule_tag);
        reports.push_back(report_of(p, false));
    }
    if (!recalls.empty()) {
        EmpiricalCdf r = build_cdf(recalls, CdfKind::recall,
                                   class_ids.empty() ? 0 : class_ids[0], rule_tag);
        reports.push_back(report_of(r, true));
    }
    if (reports.empty()) fail("EmptySample", "no segments of the requested classes");
    doc["reports"] = std::move(reports);
    write_text(out, doc.dump(2) + "\n");
}

// Four panels as separate files: ground truth, prediction, true-IoU and
// predicted-IoU heatmaps. The mode names the panel that must be producible;
// the others are emitted when their inputs are at hand.
void stage_render(OptionReader& opt) {
    std::string mode = opt.get("mode", "iou-true");
    if (mode != "iou-true" && mode != "iou-pred")
        fail("BadConfig", "mode must be iou-true or iou-pred");
    ProbabilityVolume probs = ProbabilityVolume::from_array(read_array(opt.get("probs")));
    SegmentationMask mask;
    if (opt.has("mask")) {
        mask = LabelMap::from_array(read_array(opt.get("mask")));
    } else {
        mask = bayes_decide(probs);
    }
    bool with_gt = opt.has("gt");
    bool with_model = opt.has("model");
    if (mode == "iou-true" && !with_gt) fail("BadConfig", "iou-true rendering needs --gt");
    if (mode == "iou-pred" && !with_model) fail("BadConfig", "iou-pred rendering needs --model");
    LabelMap gt;
    if (with_gt) gt = LabelMap::from_array(read_array(opt.get("gt")));
    std::string prefix = opt.get("out-prefix");
    std::string frame_id = default_frame_id(opt.get("probs"));
    MetaModel model;
    if (with_model) model = MetaModel::load(opt.get("model"));
    opt.finish();

    SegmentSet pred = extract_segments(mask, with_gt ? &gt : nullptr, Source::predicted);
    pred.frame_id = frame_id;
    render_classes(mask, prefix + "_pred.ppm");
    if (with_gt) {
        render_classes(gt, prefix + "_gt.ppm");
        SegmentSet gt_set = extract_segments(gt, nullptr, Source::ground_truth);
        MatchResult match = match_segments(pred, gt_set);
        render_heatmap(match.iou, pred, &gt, prefix + "_iou_true.ppm");
    }
    if (with_model) {
        if (model.task != MetaTask::regress_iou)
            fail("BadConfig", "iou-pred rendering needs a regression model");
        DispersionMaps maps = dispersion_maps(probs);
        MetricsDataset rows = aggregate(pred, maps, probs, nullptr, RowSource::real);
        std::vector<double> scores = predict(model, rows);
        render_heatmap(scores, pred, with_gt ? &gt : nullptr, prefix + "_iou_pred.ppm");
    }
}

void stage_pipeline(OptionReader& opt) {
    PipelineConfig cfg;
    cfg.corpus_dir = opt.get("corpus");
    cfg.out_dir = opt.get("out");
    cfg.rule = opt.get("rule", "bayes");
    cfg.cost_csv = opt.get("cost", "");
    cfg.prior_alpha = opt.get_double("prior-alpha", 1.0);
    cfg.prior_downscale = opt.get_int("prior-downscale", 1);
    cfg.depth = opt.get_int("depth", -1);
    cfg.task = opt.get("task", "fp");
    cfg.model = opt.get("model", "logistic");
    cfg.penalty = opt.get("penalty", "none");
    cfg.lambda = opt.get_double("lambda", 0.01);
    cfg.composition = opt.get("composition", "R");
    cfg.smote_factor = opt.get_double("smote-factor", 1.0);
    cfg.smote_k = opt.get_int("smote-k", 5);
    cfg.runs = opt.get_int("runs", 10);
    cfg.seed = opt.get_seed("seed", 42);
    cfg.train_fraction = opt.get_double("train-fraction", 0.8);
    opt.finish();
    PipelineResult result = run_pipeline(cfg);
    for (const StageStatus& s : result.stages)
        std::fprintf(stdout, "stage %-10s %s\n", s.name.c_str(), s.cached ? "cached" : "ran");
    std::fprintf(stdout, "report: %s\n", result.report_path.c_str());
}

}  // namespace

void run_named_stage(const std::string& name, const Options& options) {
    OptionReader opt(options);
    if (name == "synth") stage_synth(opt);
    else if (name == "predict") stage_predict(opt);
    else if (name == "segments") stage_segments(opt);
    else if (name == "metrics") stage_metrics(opt);
    else if (name == "train-meta") stage_train_meta(opt);
    else if (name == "eval-meta") stage_eval_meta(opt);
    else if (name == "track") stage_track(opt);
    else if (name == "augment") stage_augment(opt);
    else if (name == "compose") stage_compose(opt);
    else if (name == "priors") stage_priors(opt);
    else if (name == "cdf") stage_cdf(opt);
    else if (name == "render") stage_render(opt);
    else if (name == "pipeline") stage_pipeline(opt);
    else fail("BADCMD", "unknown stage '" + name + "'");
}

}  // namespace segmeta
