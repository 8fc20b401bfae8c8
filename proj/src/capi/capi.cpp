#include "segmeta/segmeta.h"

#include <cstring>
#include <string>

#include "core/array.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/meta_models.hpp"
#include "core/stages.hpp"

using namespace segmeta;

struct segmeta_array {
    Array value;
};
struct segmeta_dataset {
    MetricsDataset value;
};
struct segmeta_model {
    MetaModel value;
};

namespace {

thread_local std::string g_error_message;
thread_local std::string g_error_code;

void clear_error() {
    g_error_message.clear();
    g_error_code.clear();
}

template <typename Fn>
segmeta_status guarded(const Fn& fn) {
    clear_error();
    try {
        fn();
        return SEGMETA_OK;
    } catch (const IoError& e) {
        g_error_message = e.what();
        g_error_code = e.code();
        return SEGMETA_ERR_IO;
    } catch (const Error& e) {
        g_error_message = e.what();
        g_error_code = e.code();
        return SEGMETA_ERR_VALIDATION;
    } catch (const std::exception& e) {
        g_error_message = e.what();
        g_error_code = "Internal";
        return SEGMETA_ERR_VALIDATION;
    }
}

segmeta_status invalid_argument(const char* what) {
    g_error_message = what;
    g_error_code = "BadArgument";
    return SEGMETA_ERR_VALIDATION;
}

}  // namespace

extern "C" {

const char* segmeta_version(void) { return "0.1.0"; }

const char* segmeta_last_error(void) { return g_error_message.c_str(); }
const char* segmeta_last_error_code(void) { return g_error_code.c_str(); }

/* ---------- arrays ---------- */

segmeta_status segmeta_array_read(const char* path, segmeta_array** out) {
    if (!path || !out) return invalid_argument("null argument");
    return guarded([&] { *out = new segmeta_array{read_array(path)}; });
}

segmeta_status segmeta_array_write(const segmeta_array* a, const char* path) {
    if (!a || !path) return invalid_argument("null argument");
    return guarded([&] { write_array(a->value, path); });
}

segmeta_status segmeta_array_create(int32_t dtype, const int64_t* shape, int32_t ndim,
                                    const void* data, segmeta_array** out) {
    if (!out || (ndim > 0 && !shape) || !data) return invalid_argument("null argument");
    return guarded([&] {
        std::vector<std::size_t> dims;
        std::size_t count = 1;
        for (int32_t i = 0; i < ndim; ++i) {
            if (shape[i] < 0) fail("SizeMismatch", "negative extent");
            dims.push_back(static_cast<std::size_t>(shape[i]));
            count *= dims.back();
        }
        Array a;
        switch (dtype) {
            case SEGMETA_DTYPE_F32: {
                const float* p = static_cast<const float*>(data);
                a = Array::make_f32(dims, std::vector<float>(p, p + count));
                break;
            }
            case SEGMETA_DTYPE_I32: {
                const int32_t* p = static_cast<const int32_t*>(data);
                a = Array::make_i32(dims, std::vector<int32_t>(p, p + count));
                break;
            }
            case SEGMETA_DTYPE_U8: {
                const uint8_t* p = static_cast<const uint8_t*>(data);
                a = Array::make_u8(dims, std::vector<uint8_t>(p, p + count));
                break;
            }
            default: fail("UnsupportedDtype", "dtype must be 0 (f32), 1 (i32) or 2 (u8)");
        }
        *out = new segmeta_array{std::move(a)};
    });
}

void segmeta_array_free(segmeta_array* a) { delete a; }

int32_t segmeta_array_dtype(const segmeta_array* a) {
    switch (a->value.dtype) {
        case Dtype::f32: return SEGMETA_DTYPE_F32;
        case Dtype::i32: return SEGMETA_DTYPE_I32;
        case Dtype::u8: return SEGMETA_DTYPE_U8;
    }
    return -1;
}

int32_t segmeta_array_ndim(const segmeta_array* a) {
    return static_cast<int32_t>(a->value.shape.size());
}

int64_t segmeta_array_dim(const segmeta_array* a, int32_t axis) {
    if (axis < 0 || axis >= segmeta_array_ndim(a)) return -1;
    return static_cast<int64_t>(a->value.shape[axis]);
}

int64_t segmeta_array_size(const segmeta_array* a) {
    return static_cast<int64_t>(a->value.element_count());
}

const void* segmeta_array_data(const segmeta_array* a) {
    return std::visit([](const auto& v) -> const void* { return v.data(); }, a->value.data);
}

/* ---------- datasets ---------- */

segmeta_status segmeta_dataset_read_csv(const char* path, segmeta_dataset** out) {
    if (!path || !out) return invalid_argument("null argument");
    return guarded([&] { *out = new segmeta_dataset{MetricsDataset::read_csv(path)}; });
}

segmeta_status segmeta_dataset_write_csv(const segmeta_dataset* d, const char* path) {
    if (!d || !path) return invalid_argument("null argument");
    return guarded([&] { d->value.write_csv(path); });
}

void segmeta_dataset_free(segmeta_dataset* d) { delete d; }

int64_t segmeta_dataset_rows(const segmeta_dataset* d) {
    return static_cast<int64_t>(d->value.rows());
}

int64_t segmeta_dataset_cols(const segmeta_dataset* d) {
    return static_cast<int64_t>(d->value.cols());
}

const char* segmeta_dataset_feature_name(const segmeta_dataset* d, int64_t col) {
    if (col < 0 || col >= segmeta_dataset_cols(d)) return nullptr;
    return d->value.feature_names[static_cast<std::size_t>(col)].c_str();
}

double segmeta_dataset_value(const segmeta_dataset* d, int64_t row, int64_t col) {
    return d->value.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
}

int32_t segmeta_dataset_has_targets(const segmeta_dataset* d) {
    return d->value.has_targets ? 1 : 0;
}

double segmeta_dataset_target_iou(const segmeta_dataset* d, int64_t row) {
    return d->value.target_iou[static_cast<std::size_t>(row)];
}

int32_t segmeta_dataset_target_is_fp(const segmeta_dataset* d, int64_t row) {
    return d->value.target_fp[static_cast<std::size_t>(row)];
}

/* ---------- models ---------- */

segmeta_status segmeta_model_train(const segmeta_dataset* data, const char* task,
                                   const char* kind, const char* penalty, double lambda,
                                   uint64_t seed, segmeta_model** out) {
    if (!data || !task || !kind || !penalty || !out) return invalid_argument("null argument");
    return guarded([&] {
        TrainConfig cfg;
        cfg.task = task_from_name(task);
        cfg.kind = model_kind_from_name(kind);
        cfg.penalty.kind = penalty_from_name(penalty);
        cfg.penalty.lambda = cfg.penalty.kind == PenaltyKind::none ? 0.0 : lambda;
        cfg.seed = seed;
        *out = new segmeta_model{train(data->value, cfg)};
    });
}

segmeta_status segmeta_model_load(const char* path, segmeta_model** out) {
    if (!path || !out) return invalid_argument("null argument");
    return guarded([&] { *out = new segmeta_model{MetaModel::load(path)}; });
}

segmeta_status segmeta_model_save(const segmeta_model* m, const char* path) {
    if (!m || !path) return invalid_argument("null argument");
    return guarded([&] { m->value.save(path); });
}

void segmeta_model_free(segmeta_model* m) { delete m; }

segmeta_status segmeta_model_predict(const segmeta_model* m, const segmeta_dataset* rows,
                                     double* scores) {
    if (!m || !rows || !scores) return invalid_argument("null argument");
    return guarded([&] {
        std::vector<double> out = predict(m->value, rows->value);
        std::memcpy(scores, out.data(), out.size() * sizeof(double));
    });
}

segmeta_status segmeta_auroc(const double* scores, const int32_t* labels, int64_t n,
                             double* out) {
    if (!scores || !labels || !out || n < 0) return invalid_argument("null argument");
    return guarded([&] {
        std::vector<double> s(scores, scores + n);
        std::vector<uint8_t> l(static_cast<std::size_t>(n));
        for (int64_t i = 0; i < n; ++i) l[i] = labels[i] ? 1 : 0;
        *out = auroc(s, l);
    });
}

/* ---------- stage runner ---------- */

segmeta_status segmeta_run_stage(const char* stage, const char* const* keys,
                                 const char* const* values, size_t count) {
    if (!stage || (count > 0 && (!keys || !values))) return invalid_argument("null argument");
    return guarded([&] {
        Options options;
        for (size_t i = 0; i < count; ++i) {
            if (!keys[i] || !values[i]) fail("BadConfig", "null option at index " + std::to_string(i));
            options[keys[i]] = values[i];
        }
        run_named_stage(stage, options);
    });
}

}  // extern "C"
