#pragma once

#include <optional>
#include <string>
#include <vector>

#include "segments.hpp"

namespace segmeta {

// Training-data provenance of a dataset row.
enum class RowSource { real, augmented, pseudo };

const char* row_source_name(RowSource s);
RowSource row_source_from_name(const std::string& name);

// Tabular set of per-segment feature rows, optionally with quality targets.
// CSV layout: frame_id,segment_id,source,<features...>[,iou,is_fp]; floats
// are rendered with 9 significant digits.
struct MetricsDataset {
    std::vector<std::string> feature_names;
    std::vector<std::string> frame_ids;
    std::vector<int> segment_ids;
    std::vector<RowSource> sources;
    std::vector<double> feature_values;  // rows() * cols(), row-major
    bool has_targets = false;
    std::vector<double> target_iou;
    std::vector<uint8_t> target_fp;

    std::size_t rows() const { return frame_ids.size(); }
    std::size_t cols() const { return feature_names.size(); }

    double at(std::size_t row, std::size_t col) const {
        return feature_values[row * cols() + col];
    }
    const double* row(std::size_t r) const { return feature_values.data() + r * cols(); }

    int feature_index(const std::string& name) const;  // -1 when absent

    void append_row(const std::string& frame_id, int segment_id, RowSource source,
                    const std::vector<double>& features, std::optional<double> iou = {},
                    std::optional<bool> is_fp = {});

    // Schemas and target presence must agree (SchemaMismatch otherwise).
    void append(const MetricsDataset& other);

    MetricsDataset select_rows(const std::vector<std::size_t>& indices) const;

    static MetricsDataset read_csv(const std::string& path);
    void write_csv(const std::string& path) const;
    std::string to_csv() const;
};

std::string format_value(double v);  // shared 9-significant-digit rendering

}  // namespace segmeta
