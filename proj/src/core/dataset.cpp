#include "dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace segmeta {

const char* row_source_name(RowSource s) {
    switch (s) {
        case RowSource::real: return "real";
        case RowSource::augmented: return "augmented";
        case RowSource::pseudo: return "pseudo";
    }
    return "";
}

RowSource row_source_from_name(const std::string& name) {
    if (name == "real") return RowSource::real;
    if (name == "augmented") return RowSource::augmented;
    if (name == "pseudo") return RowSource::pseudo;
    fail("HeaderMalformed", "unknown row source '" + name + "'");
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

int MetricsDataset::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
}

void MetricsDataset::append_row(const std::string& frame_id, int segment_id, RowSource source,
                                const std::vector<double>& features, std::optional<double> iou,
                                std::optional<bool> is_fp) {
    if (features.size() != cols()) fail("SchemaMismatch", "row width does not match the schema");
    if (has_targets && !iou.has_value())
        fail("SchemaMismatch", "dataset carries targets but the row has none");
    frame_ids.push_back(frame_id);
    segment_ids.push_back(segment_id);
    sources.push_back(source);
    feature_values.insert(feature_values.end(), features.begin(), features.end());
    if (has_targets) {
        target_iou.push_back(*iou);
        target_fp.push_back(is_fp.value_or(*iou == 0.0) ? 1 : 0);
    }
}

void MetricsDataset::append(const MetricsDataset& other) {
    if (feature_names != other.feature_names)
        fail("SchemaMismatch", "datasets have different schemas");
    if (has_targets != other.has_targets)
        fail("SchemaMismatch", "datasets disagree on target presence");
    frame_ids.insert(frame_ids.end(), other.frame_ids.begin(), other.frame_ids.end());
    segment_ids.insert(segment_ids.end(), other.segment_ids.begin(), other.segment_ids.end());
    sources.insert(sources.end(), other.sources.begin(), other.sources.end());
    feature_values.insert(feature_values.end(), other.feature_values.begin(),
                          other.feature_values.end());
    target_iou.insert(target_iou.end(), other.target_iou.begin(), other.target_iou.end());
    target_fp.insert(target_fp.end(), other.target_fp.begin(), other.target_fp.end());
}

MetricsDataset MetricsDataset::select_rows(const std::vector<std::size_t>& indices) const {
    MetricsDataset out;
    out.feature_names = feature_names;
    out.has_targets = has_targets;
    for (std::size_t i : indices) {
        out.frame_ids.push_back(frame_ids[i]);
        out.segment_ids.push_back(segment_ids[i]);
        out.sources.push_back(sources[i]);
        out.feature_values.insert(out.feature_values.end(), row(i), row(i) + cols());
        if (has_targets) {
            out.target_iou.push_back(target_iou[i]);
            out.target_fp.push_back(target_fp[i]);
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) fail("HeaderMalformed", "trailing junk in number '" + s + "'");
        return v;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        fail("HeaderMalformed", "'" + s + "' is not a number");
    }
}

}  // namespace

MetricsDataset MetricsDataset::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("IoFailure", "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) fail("HeaderMalformed", "metrics csv '" + path + "' is empty");
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "frame_id" || header[1] != "segment_id" ||
        header[2] != "source")
        fail("HeaderMalformed", "metrics csv must start with frame_id,segment_id,source");

    MetricsDataset ds;
    std::size_t feature_end = header.size();
    if (header.size() >= 5 && header[header.size() - 2] == "iou" && header.back() == "is_fp") {
        ds.has_targets = true;
        feature_end -= 2;
    }
    ds.feature_names.assign(header.begin() + 3, header.begin() + feature_end);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            fail("HeaderMalformed", "row " + std::to_string(line_no) + " of '" + path +
                                        "' has the wrong number of columns");
        ds.frame_ids.push_back(cells[0]);
        ds.segment_ids.push_back(static_cast<int>(parse_number(cells[1])));
        ds.sources.push_back(row_source_from_name(cells[2]));
        for (std::size_t i = 3; i < feature_end; ++i)
            ds.feature_values.push_back(parse_number(cells[i]));
        if (ds.has_targets) {
            ds.target_iou.push_back(parse_number(cells[feature_end]));
            ds.target_fp.push_back(parse_number(cells[feature_end + 1]) != 0.0 ? 1 : 0);
        }
    }
    return ds;
}

std::string MetricsDataset::to_csv() const {
    std::string out = "frame_id,segment_id,source";
    for (const std::string& name : feature_names) {
        out += ',';
        out += name;
    }
    if (has_targets) out += ",iou,is_fp";
    out += '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
        out += frame_ids[r];
        out += ',';
        out += std::to_string(segment_ids[r]);
        out += ',';
        out += row_source_name(sources[r]);
        for (std::size_t c = 0; c < cols(); ++c) {
            out += ',';
            out += format_value(at(r, c));
        }
        if (has_targets) {
            out += ',';
            out += format_value(target_iou[r]);
            out += ',';
            out += target_fp[r] ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

void MetricsDataset::write_csv(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out << to_csv();
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

}  // namespace segmeta
