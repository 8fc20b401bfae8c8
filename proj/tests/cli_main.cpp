// Spawns the installed `segmeta` binary (path via SEGMETA_CLI) and checks
// the documented exit codes and error prefixes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("SEGMETA_CLI");
    REQUIRE(env != nullptr);
    return env;
}

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    std::string dir = fs::temp_directory_path() /
                      ("segmeta_cli_out_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::string capture = dir + "/capture.txt";
    std::string command = cli_path() + " " + args + " >" + capture + " 2>&1";
    int raw = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(capture);
    result.output.assign((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    return result;
}

std::string scratch(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("segmeta_cli_" + tag + "_" +
                                                std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("--version exits zero and prints the version") {
    RunResult r = run_cli("--version");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("unknown subcommand exits 1 with a BADCMD error") {
    RunResult r = run_cli("frobnicate");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error[BADCMD]") != std::string::npos);
}

TEST_CASE("missing subcommand exits 1") {
    RunResult r = run_cli("");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error[") != std::string::npos);
}

TEST_CASE("validation errors exit 1, io errors exit 2") {
    std::string dir = scratch("codes");
    SUBCASE("missing file is an io error") {
        RunResult r = run_cli("predict --probs " + dir + "/absent.npy --out " + dir + "/o.npy");
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("error[IoFailure]") != std::string::npos);
    }
    SUBCASE("malformed npy is a validation error") {
        std::ofstream(dir + "/junk.npy", std::ios::binary) << "not an array";
        RunResult r = run_cli("predict --probs " + dir + "/junk.npy --out " + dir + "/o.npy");
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("error[BadMagic]") != std::string::npos);
    }
    SUBCASE("bad option value is a validation error") {
        RunResult r = run_cli("synth --frames nope --out " + dir + "/c");
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("error[BadConfig]") != std::string::npos);
    }
}

TEST_CASE("end-to-end corpus flow through the cli") {
    std::string dir = scratch("flow");
    std::string corpus = dir + "/corpus";
    CHECK(run_cli("synth --frames 10 --seed 3 --out " + corpus).exit_code == 0);

    // single-frame stage chain
    std::string probs = corpus + "/probs_s0000_f000.npy";
    std::string gt = corpus + "/gt_s0000_f000.npy";
    CHECK(run_cli("predict --rule bayes --probs " + probs + " --out " + dir + "/pred.npy")
              .exit_code == 0);
    CHECK(run_cli("segments --mask " + dir + "/pred.npy --gt " + gt + " --out " + dir +
                  "/segments.csv")
              .exit_code == 0);
    CHECK(run_cli("metrics --probs " + probs + " --mask " + dir + "/pred.npy --gt " + gt +
                  " --out " + dir + "/metrics.csv")
              .exit_code == 0);
    {
        std::ifstream in(dir + "/segments.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header ==
              "frame_id,segment_id,class_id,size,boundary_size,interior_size,bbox,centroid_r,"
              "centroid_c,iou,is_fp,precision");
    }

    // priors + ml rule
    CHECK(run_cli("priors --corpus " + corpus + " --out " + dir + "/priors.npy").exit_code == 0);
    CHECK(run_cli("predict --rule ml --probs " + probs + " --priors " + dir +
                  "/priors.npy --out " + dir + "/pred_ml.npy")
              .exit_code == 0);

    // cost rule with an explicit matrix
    {
        std::ofstream out(dir + "/costs.csv");
        out << "0,1,1,5\n1,0,1,1\n1,1,0,1\n1,1,1,0\n";
    }
    CHECK(run_cli("predict --rule cost --probs " + probs + " --cost " + dir +
                  "/costs.csv --out " + dir + "/pred_cost.npy")
              .exit_code == 0);

    // full pipeline + model training on its metrics table; classification
    // and regression reports together carry all four quality metrics
    CHECK(run_cli("pipeline --corpus " + corpus + " --out " + dir + "/work --runs 2 --seed 9")
              .exit_code == 0);
    CHECK(run_cli("train-meta --task fp --model logistic --in " + dir +
                  "/work/metrics.csv --out " + dir + "/model.json")
              .exit_code == 0);
    CHECK(run_cli("eval-meta --model " + dir + "/model.json --in " + dir +
                  "/work/metrics.csv --runs 2 --report " + dir + "/report.json")
              .exit_code == 0);
    CHECK(run_cli("train-meta --task iou --model linear --in " + dir +
                  "/work/metrics.csv --out " + dir + "/model_iou.json")
              .exit_code == 0);
    CHECK(run_cli("eval-meta --model " + dir + "/model_iou.json --in " + dir +
                  "/work/metrics.csv --runs 2 --report " + dir + "/report_iou.json")
              .exit_code == 0);
    {
        std::ifstream in(dir + "/report.json");
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        CHECK(text.find("\"acc\"") != std::string::npos);
        CHECK(text.find("\"auroc\"") != std::string::npos);
        CHECK(text.find("\"config\"") != std::string::npos);
        std::ifstream in2(dir + "/report_iou.json");
        std::string text2((std::istreambuf_iterator<char>(in2)),
                          std::istreambuf_iterator<char>());
        CHECK(text2.find("\"r2\"") != std::string::npos);
        CHECK(text2.find("\"sigma\"") != std::string::npos);
    }

    // augmentation + composition
    CHECK(run_cli("augment --in " + dir + "/work/metrics.csv --k 3 --factor 1.0 --seed 1 --out " +
                  dir + "/aug.csv")
              .exit_code == 0);
    CHECK(run_cli("compose --spec RA --real " + dir + "/work/metrics.csv --aug " + dir +
                  "/aug.csv --out " + dir + "/ra.csv")
              .exit_code == 0);

    // cdf + render
    std::string pred2 = dir + "/work/pred/pred_s0001_f000.npy";
    std::string gt2 = corpus + "/gt_s0001_f000.npy";
    CHECK(run_cli("cdf --pred " + dir + "/pred.npy," + pred2 + " --gt " + gt + "," + gt2 +
                  " --class 3 --rule-tag bayes --out " + dir + "/cdf.json")
              .exit_code == 0);
    CHECK(run_cli("render --mode iou-true --probs " + probs + " --gt " + gt +
                  " --model " + dir + "/model_iou.json --out-prefix " + dir + "/panel")
              .exit_code == 0);
    CHECK(fs::exists(dir + "/panel_gt.ppm"));
    CHECK(fs::exists(dir + "/panel_pred.ppm"));
    CHECK(fs::exists(dir + "/panel_iou_true.ppm"));
    CHECK(fs::exists(dir + "/panel_iou_pred.ppm"));
}

TEST_CASE("config file values are overridden by flags") {
    std::string dir = scratch("config");
    {
        std::ofstream out(dir + "/synth.conf");
        out << "frames=4\n";
        out << "out=" << dir << "/from_file\n";
        out << "seed=1\n";
    }
    // flag overrides the out directory, file provides the rest
    RunResult r = run_cli("synth --config " + dir + "/synth.conf --out " + dir + "/from_flag");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir + "/from_flag/manifest.txt"));
    CHECK_FALSE(fs::exists(dir + "/from_file/manifest.txt"));

    // unknown keys in the config file are rejected
    {
        std::ofstream out(dir + "/bad.conf");
        out << "frames=4\nnot_a_key=1\n";
    }
    RunResult bad = run_cli("synth --config " + dir + "/bad.conf --out " + dir + "/x");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("error[BadConfig]") != std::string::npos);
}

TEST_CASE("sequence corpus with tracking") {
    std::string dir = scratch("track");
    std::string corpus = dir + "/corpus";
    CHECK(run_cli("synth --mode sequence --frames 2 --length 5 --out " + corpus).exit_code == 0);
    CHECK(run_cli("track --manifest " + corpus + " --depth 2 --out " + dir +
                  "/tracks.csv --series-out " + dir + "/series.csv")
              .exit_code == 0);
    std::ifstream in(dir + "/tracks.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "track_id,sequence_id,frame_index,segment_id,class_id,centroid_r,centroid_c,shift_r,"
          "shift_c");
    CHECK(fs::exists(dir + "/series.csv"));
}
