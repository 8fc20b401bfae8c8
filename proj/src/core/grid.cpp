#include "grid.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace segmeta {

LabelMap LabelMap::filled(int h, int w, uint8_t value) {
    LabelMap m;
    m.height = h;
    m.width = w;
    m.labels.assign(static_cast<std::size_t>(h) * w, value);
    return m;
}

LabelMap LabelMap::from_array(const Array& a) {
    if (a.dtype != Dtype::u8) fail("UnsupportedDtype", "label map must be uint8");
    if (a.ndim() != 2) fail("ShapeMismatch", "label map must be 2-d");
    LabelMap m;
    m.height = static_cast<int>(a.shape[0]);
    m.width = static_cast<int>(a.shape[1]);
    m.labels = a.u8();
    return m;
}

Array LabelMap::to_array() const {
    return Array::make_u8({static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                          labels);
}

ProbabilityVolume ProbabilityVolume::zeros(int h, int w, int q) {
    ProbabilityVolume p;
    p.height = h;
    p.width = w;
    p.classes = q;
    p.values.assign(static_cast<std::size_t>(h) * w * q, 0.0f);
    return p;
}

ProbabilityVolume ProbabilityVolume::from_array(const Array& a) {
    if (a.dtype != Dtype::f32) fail("UnsupportedDtype", "probability volume must be float32");
    if (a.ndim() != 3) fail("ShapeMismatch", "probability volume must be H x W x q");
    ProbabilityVolume p;
    p.height = static_cast<int>(a.shape[0]);
    p.width = static_cast<int>(a.shape[1]);
    p.classes = static_cast<int>(a.shape[2]);
    p.values = a.f32();
    p.validate();
    return p;
}

Array ProbabilityVolume::to_array() const {
    return Array::make_f32({static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                            static_cast<std::size_t>(classes)},
                           values);
}

void ProbabilityVolume::validate() const {
    if (classes < 1) fail("ShapeMismatch", "probability volume needs at least one class");
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    for (std::size_t i = 0; i < pixels; ++i) {
        const float* f = values.data() + i * classes;
        double sum = 0.0;
        for (int y = 0; y < classes; ++y) {
            if (!std::isfinite(f[y])) fail("NonfiniteFeature", "probability volume contains NaN/Inf");
            if (f[y] < 0.0f) fail("ShapeMismatch", "probability volume contains negative mass");
            sum += f[y];
        }
        if (sum < 1.0 - 1e-4 || sum > 1.0 + 1e-4)
            fail("ShapeMismatch", "pixel distribution sums to " + std::to_string(sum));
    }
}

const double* PriorMap::lookup(int r, int c, int full_h, int full_w) const {
    int rr = height == full_h ? r : static_cast<int>(static_cast<long long>(r) * height / full_h);
    int cc = width == full_w ? c : static_cast<int>(static_cast<long long>(c) * width / full_w);
    if (rr >= height) rr = height - 1;
    if (cc >= width) cc = width - 1;
    return cell(rr, cc);
}

PriorMap PriorMap::from_array(const Array& a) {
    if (a.dtype != Dtype::f32) fail("UnsupportedDtype", "prior map must be float32");
    if (a.ndim() != 3) fail("ShapeMismatch", "prior map must be H x W x q");
    PriorMap p;
    p.height = static_cast<int>(a.shape[0]);
    p.width = static_cast<int>(a.shape[1]);
    p.classes = static_cast<int>(a.shape[2]);
    p.values.assign(a.f32().begin(), a.f32().end());
    // f32 storage rounds each entry; renormalize per cell after checking the
    // sums are still plausible.
    const std::size_t cells = static_cast<std::size_t>(p.height) * p.width;
    for (std::size_t i = 0; i < cells; ++i) {
        double* v = p.values.data() + i * p.classes;
        double sum = 0.0;
        for (int y = 0; y < p.classes; ++y) {
            if (!std::isfinite(v[y]) || v[y] < 0.0)
                fail("NonpositivePrior", "prior map contains invalid mass");
            sum += v[y];
        }
        if (sum < 1.0 - 1e-4 || sum > 1.0 + 1e-4)
            fail("ShapeMismatch", "prior cell sums to " + std::to_string(sum));
        for (int y = 0; y < p.classes; ++y) v[y] /= sum;
    }
    return p;
}

Array PriorMap::to_array() const {
    std::vector<float> f(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) f[i] = static_cast<float>(values[i]);
    return Array::make_f32({static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                            static_cast<std::size_t>(classes)},
                           std::move(f));
}

CostMatrix CostMatrix::uniform(int q) {
    CostMatrix c;
    c.classes = q;
    c.costs.assign(static_cast<std::size_t>(q) * q, 1.0);
    for (int y = 0; y < q; ++y) c.at(y, y) = 0.0;
    return c;
}

CostMatrix CostMatrix::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("IoFailure", "cannot open '" + path + "' for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail("HeaderMalformed", "cost matrix cell '" + cell + "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    CostMatrix c;
    c.classes = static_cast<int>(rows.size());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c.classes)
            fail("ShapeMismatch", "cost matrix must be square");
        c.costs.insert(c.costs.end(), row.begin(), row.end());
    }
    c.validate();
    return c;
}

void CostMatrix::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_io("IoFailure", "cannot open '" + path + "' for writing");
    for (int y = 0; y < classes; ++y) {
        for (int y2 = 0; y2 < classes; ++y2) {
            if (y2) out << ',';
            out << at(y, y2);
        }
        out << '\n';
    }
}

void CostMatrix::validate() const {
    if (classes < 1) fail("ShapeMismatch", "cost matrix is empty");
    for (int y = 0; y < classes; ++y) {
        if (at(y, y) != 0.0) fail("ShapeMismatch", "cost matrix diagonal must be 0");
        for (int y2 = 0; y2 < classes; ++y2)
            if (at(y, y2) < 0.0 || !std::isfinite(at(y, y2)))
                fail("ShapeMismatch", "cost matrix entries must be finite and non-negative");
    }
}

}  // namespace segmeta
