// segmeta command line: thin argument layer over the shared library.
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <segmeta/segmeta.h>

namespace {

struct OptionDef {
    const char* flag;
    const char* key;
    const char* help;
};

struct StageDef {
    const char* name;
    const char* help;
    std::vector<OptionDef> options;
};

const std::vector<StageDef> kStages = {
    {"synth",
     "Generate a synthetic corpus (probability tensors, labels, manifest)",
     {{"--spec", "spec", "scene spec file (key=value)"},
      {"--frames", "frames", "frame count (single) or sequence count"},
      {"--mode", "mode", "single|sequence"},
      {"--length", "length", "frames per sequence"},
      {"--pseudo", "pseudo", "emit pseudo reference masks (0|1)"},
      {"--seed", "seed", "generator seed"},
      {"--out", "out", "output corpus directory"}}},
    {"predict",
     "Turn a probability tensor into a mask under a decision rule",
     {{"--rule", "rule", "bayes|cost|ml"},
      {"--probs", "probs", "probability tensor (npy)"},
      {"--priors", "priors", "prior map (npy), ml rule"},
      {"--cost", "cost", "cost matrix (csv), cost rule"},
      {"--out", "out", "output mask (npy)"}}},
    {"segments",
     "Extract connected components and match them against ground truth",
     {{"--mask", "mask", "predicted mask (npy)"},
      {"--gt", "gt", "ground-truth labels (npy)"},
      {"--frame-id", "frame-id", "frame id for the csv"},
      {"--out", "out", "segment table (csv)"}}},
    {"metrics",
     "Aggregate dispersion heatmaps into per-segment metric rows",
     {{"--probs", "probs", "probability tensor (npy)"},
      {"--mask", "mask", "predicted mask (npy)"},
      {"--gt", "gt", "ground-truth labels (npy), adds targets"},
      {"--frame-id", "frame-id", "frame id for the csv"},
      {"--out", "out", "metrics table (csv)"}}},
    {"train-meta",
     "Train a meta classifier/regressor on metric rows",
     {{"--task", "task", "fp|iou"},
      {"--model", "model", "linear|logistic|gbt|mlp"},
      {"--penalty", "penalty", "none|l1|l2"},
      {"--lambda", "lambda", "penalty strength"},
      {"--features", "features", "comma list restricting the features"},
      {"--seed", "seed", "training seed"},
      {"--in", "in", "metrics table (csv)"},
      {"--out", "out", "model file (json)"}}},
    {"eval-meta",
     "Repeated-run evaluation of a model spec over resampled splits",
     {{"--model", "model", "model file (json)"},
      {"--in", "in", "metrics table (csv)"},
      {"--runs", "runs", "number of runs"},
      {"--seed", "seed", "base seed"},
      {"--train-fraction", "train-fraction", "train share per run"},
      {"--report", "report", "report file (json)"}}},
    {"track",
     "Match segments across frames and emit track / time-series tables",
     {{"--manifest", "manifest", "corpus directory or its manifest.txt"},
      {"--depth", "depth", "time series window"},
      {"--min-overlap", "min-overlap", "minimum shifted overlap (pixels)"},
      {"--shift", "shift", "linear|none"},
      {"--series-out", "series-out", "time-series table (csv)"},
      {"--out", "out", "track table (csv)"}}},
    {"augment",
     "Oversample the rare-target stratum by feature-space interpolation",
     {{"--in", "in", "metrics table (csv)"},
      {"--k", "k", "neighbours per seed row"},
      {"--factor", "factor", "synthetic rows per rare row"},
      {"--seed", "seed", "sampling seed"},
      {"--out", "out", "synthetic rows (csv)"}}},
    {"compose",
     "Concatenate real/augmented/pseudo training rows",
     {{"--spec", "spec", "R|RA|RAP|RP|P"},
      {"--real", "real", "real rows (csv)"},
      {"--aug", "aug", "augmented rows (csv)"},
      {"--pseudo", "pseudo", "pseudo rows (csv)"},
      {"--out", "out", "composed table (csv)"}}},
    {"priors",
     "Estimate position-specific class priors from label maps",
     {{"--labels", "labels", "comma list of label npy files"},
      {"--corpus", "corpus", "corpus directory (uses its ground truth)"},
      {"--classes", "classes", "class count"},
      {"--alpha", "alpha", "additive smoothing"},
      {"--downscale", "downscale", "block edge for pooled priors"},
      {"--out", "out", "prior map (npy)"}}},
    {"cdf",
     "Empirical precision/recall CDFs of a class over frames",
     {{"--pred", "pred", "comma list of predicted masks (npy)"},
      {"--gt", "gt", "comma list of ground-truth labels (npy)"},
      {"--class", "class", "class id (comma list pools classes)"},
      {"--rule-tag", "rule-tag", "label for the rule column"},
      {"--out", "out", "report (json)"}}},
    {"render",
     "Render ground truth, prediction and an IoU heatmap as PPM images",
     {{"--mode", "mode", "iou-true|iou-pred"},
      {"--probs", "probs", "probability tensor (npy)"},
      {"--mask", "mask", "predicted mask (npy; defaults to the MAP mask)"},
      {"--gt", "gt", "ground-truth labels (npy)"},
      {"--model", "model", "regression model (json), iou-pred mode"},
      {"--out-prefix", "out-prefix", "path prefix for the ppm files"}}},
    {"pipeline",
     "Full corpus run: predict, metrics, tracking, evaluation (cached)",
     {{"--corpus", "corpus", "corpus directory"},
      {"--rule", "rule", "bayes|cost|ml"},
      {"--cost", "cost", "cost matrix (csv)"},
      {"--prior-alpha", "prior-alpha", "prior smoothing"},
      {"--prior-downscale", "prior-downscale", "prior block edge"},
      {"--depth", "depth", "time-series window (-1 = single frame)"},
      {"--task", "task", "fp|iou"},
      {"--model", "model", "linear|logistic|gbt|mlp"},
      {"--penalty", "penalty", "none|l1|l2"},
      {"--lambda", "lambda", "penalty strength"},
      {"--composition", "composition", "R|RA|RAP|RP|P"},
      {"--smote-factor", "smote-factor", "synthetic rows per rare row"},
      {"--smote-k", "smote-k", "interpolation neighbours"},
      {"--runs", "runs", "evaluation runs"},
      {"--seed", "seed", "base seed"},
      {"--train-fraction", "train-fraction", "train share per run"},
      {"--out", "out", "working/output directory"}}},
};

int fail_usage(const char* code, const std::string& message) {
    std::fprintf(stderr, "error[%s]: %s\n", code, message.c_str());
    return 1;
}

bool read_config_file(const std::string& path, std::map<std::string, std::string>& into,
                      std::string& error) {
    std::ifstream in(path);
    if (!in) {
        error = "cannot open config file '" + path + "'";
        return false;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
        std::size_t start = line.find_first_not_of(' ');
        if (start == std::string::npos) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            error = "config line " + std::to_string(line_no) + " has no '='";
            return false;
        }
        into[line.substr(start, eq - start)] = line.substr(eq + 1);
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"segment-level quality monitoring for semantic segmentation"};
    app.set_version_flag("--version", segmeta_version());
    app.require_subcommand(0, 1);

    struct StageInvocation {
        const StageDef* def = nullptr;
        std::string config_file;
        std::map<std::string, std::string> flag_values;
    };
    std::vector<StageInvocation> invocations(kStages.size());

    for (std::size_t i = 0; i < kStages.size(); ++i) {
        const StageDef& def = kStages[i];
        CLI::App* sub = app.add_subcommand(def.name, def.help);
        invocations[i].def = &def;
        sub->add_option("--config", invocations[i].config_file,
                        "key=value file; flags override its entries");
        for (const OptionDef& opt : def.options) {
            sub->add_option(opt.flag, invocations[i].flag_values[opt.key], opt.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ExtrasError& e) {
        return fail_usage("BADCMD", e.what());
    } catch (const CLI::ParseError& e) {
        return fail_usage("BADARGS", e.what());
    }

    for (std::size_t i = 0; i < kStages.size(); ++i) {
        CLI::App* sub = app.get_subcommand(kStages[i].name);
        if (!sub->parsed()) continue;

        std::map<std::string, std::string> options;
        if (!invocations[i].config_file.empty()) {
            std::string error;
            if (!read_config_file(invocations[i].config_file, options, error))
                return fail_usage("BADCONFIG", error);
        }
        for (const auto& [key, value] : invocations[i].flag_values)
            if (!value.empty()) options[key] = value;  // flags win

        std::vector<const char*> keys, values;
        keys.reserve(options.size());
        values.reserve(options.size());
        for (const auto& [key, value] : options) {
            keys.push_back(key.c_str());
            values.push_back(value.c_str());
        }
        segmeta_status status =
            segmeta_run_stage(kStages[i].name, keys.data(), values.data(), keys.size());
        if (status != SEGMETA_OK) {
            std::fprintf(stderr, "error[%s]: %s\n", segmeta_last_error_code(),
                         segmeta_last_error());
            return status;
        }
        return 0;
    }

    std::fprintf(stderr, "error[BADCMD]: no subcommand given (see --help)\n");
    return 1;
}
