// Exercises the shared-library C interface end to end: handles, error
// state, and the generic stage runner.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <segmeta/segmeta.h>

namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("segmeta_capi_" + tag + "_" +
                                                std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

segmeta_status run_stage(const char* stage,
                         const std::vector<std::pair<std::string, std::string>>& options) {
    std::vector<const char*> keys, values;
    for (const auto& [k, v] : options) {
        keys.push_back(k.c_str());
        values.push_back(v.c_str());
    }
    return segmeta_run_stage(stage, keys.data(), values.data(), keys.size());
}

}  // namespace

TEST_CASE("version string is set") {
    CHECK(std::strlen(segmeta_version()) > 0);
}

TEST_CASE("array handles round trip through npy files") {
    std::string dir = scratch("array");
    const int64_t shape[2] = {2, 3};
    const float data[6] = {0.5f, 1.5f, -2.0f, 0.0f, 3.25f, 9.75f};
    segmeta_array* a = nullptr;
    REQUIRE(segmeta_array_create(SEGMETA_DTYPE_F32, shape, 2, data, &a) == SEGMETA_OK);
    CHECK(segmeta_array_ndim(a) == 2);
    CHECK(segmeta_array_dim(a, 0) == 2);
    CHECK(segmeta_array_dim(a, 1) == 3);
    CHECK(segmeta_array_size(a) == 6);

    std::string path = dir + "/a.npy";
    REQUIRE(segmeta_array_write(a, path.c_str()) == SEGMETA_OK);
    segmeta_array* b = nullptr;
    REQUIRE(segmeta_array_read(path.c_str(), &b) == SEGMETA_OK);
    CHECK(segmeta_array_dtype(b) == SEGMETA_DTYPE_F32);
    CHECK(std::memcmp(segmeta_array_data(b), data, sizeof(data)) == 0);
    segmeta_array_free(a);
    segmeta_array_free(b);
}

TEST_CASE("error state carries code and message") {
    segmeta_array* a = nullptr;
    segmeta_status status = segmeta_array_read("/nonexistent/file.npy", &a);
    CHECK(status == SEGMETA_ERR_IO);
    CHECK(std::string(segmeta_last_error_code()) == "IoFailure");
    CHECK(std::strlen(segmeta_last_error()) > 0);

    std::string dir = scratch("err");
    std::ofstream(dir + "/junk.npy", std::ios::binary) << "definitely not npy";
    status = segmeta_array_read((dir + "/junk.npy").c_str(), &a);
    CHECK(status == SEGMETA_ERR_VALIDATION);
    CHECK(std::string(segmeta_last_error_code()) == "BadMagic");
}

TEST_CASE("stage runner drives the full pipeline through files") {
    std::string dir = scratch("stages");
    std::string corpus = dir + "/corpus";

    REQUIRE(run_stage("synth", {{"frames", "8"}, {"out", corpus}, {"seed", "11"}}) == SEGMETA_OK);
    REQUIRE(fs::exists(corpus + "/manifest.txt"));

    // predict one frame, then metrics for it
    std::string probs = corpus + "/probs_s0000_f000.npy";
    std::string gt = corpus + "/gt_s0000_f000.npy";
    REQUIRE(run_stage("predict", {{"rule", "bayes"},
                                  {"probs", probs},
                                  {"out", dir + "/pred.npy"}}) == SEGMETA_OK);
    REQUIRE(run_stage("metrics", {{"probs", probs},
                                  {"mask", dir + "/pred.npy"},
                                  {"gt", gt},
                                  {"out", dir + "/metrics.csv"}}) == SEGMETA_OK);

    segmeta_dataset* rows = nullptr;
    REQUIRE(segmeta_dataset_read_csv((dir + "/metrics.csv").c_str(), &rows) == SEGMETA_OK);
    CHECK(segmeta_dataset_rows(rows) > 0);
    CHECK(segmeta_dataset_has_targets(rows) == 1);
    CHECK(std::string(segmeta_dataset_feature_name(rows, 0)) == "S");
    segmeta_dataset_free(rows);

    // unknown options are rejected
    CHECK(run_stage("predict", {{"bogus", "1"}}) == SEGMETA_ERR_VALIDATION);
    CHECK(std::string(segmeta_last_error_code()) == "BadConfig");

    // unknown stage name
    CHECK(run_stage("not-a-stage", {}) == SEGMETA_ERR_VALIDATION);
    CHECK(std::string(segmeta_last_error_code()) == "BADCMD");
}

TEST_CASE("model training and prediction through handles") {
    std::string dir = scratch("model");
    std::string corpus = dir + "/corpus";
    REQUIRE(run_stage("synth", {{"frames", "10"}, {"out", corpus}}) == SEGMETA_OK);
    REQUIRE(run_stage("pipeline", {{"corpus", corpus},
                                   {"out", dir + "/work"},
                                   {"runs", "1"}}) == SEGMETA_OK);

    segmeta_dataset* rows = nullptr;
    REQUIRE(segmeta_dataset_read_csv((dir + "/work/metrics.csv").c_str(), &rows) == SEGMETA_OK);
    segmeta_model* model = nullptr;
    REQUIRE(segmeta_model_train(rows, "fp", "logistic", "none", 0.0, 7, &model) == SEGMETA_OK);

    std::vector<double> scores(segmeta_dataset_rows(rows));
    REQUIRE(segmeta_model_predict(model, rows, scores.data()) == SEGMETA_OK);
    std::vector<int32_t> labels(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        labels[i] = segmeta_dataset_target_is_fp(rows, static_cast<int64_t>(i));
    double auc = 0.0;
    REQUIRE(segmeta_auroc(scores.data(), labels.data(),
                          static_cast<int64_t>(scores.size()), &auc) == SEGMETA_OK);
    CHECK(auc > 0.6);

    std::string model_path = dir + "/model.json";
    REQUIRE(segmeta_model_save(model, model_path.c_str()) == SEGMETA_OK);
    segmeta_model* loaded = nullptr;
    REQUIRE(segmeta_model_load(model_path.c_str(), &loaded) == SEGMETA_OK);
    std::vector<double> again(scores.size());
    REQUIRE(segmeta_model_predict(loaded, rows, again.data()) == SEGMETA_OK);
    CHECK(scores == again);

    segmeta_model_free(model);
    segmeta_model_free(loaded);
    segmeta_dataset_free(rows);
}

TEST_CASE("null arguments are rejected without crashing") {
    CHECK(segmeta_array_read(nullptr, nullptr) == SEGMETA_ERR_VALIDATION);
    CHECK(segmeta_run_stage(nullptr, nullptr, nullptr, 0) == SEGMETA_ERR_VALIDATION);
}
